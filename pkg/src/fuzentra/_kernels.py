"""Compiled pair loops for the entropy estimators.

All kernels take the Chebyshev distance between templates. The fuzzy kernel
only writes the exponent arguments into a buffer; the caller exponentiates
with numpy, whose vectorised ``exp`` is several times faster than a scalar
call inside the loop.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def fuzzy_fill(x, m, n, inv_r, start, nt, buf0, buf1):
    """Fill -(d**n)/r for template pairs (i, j), i < j < nt, beginning at row
    ``start``. Templates have their own mean removed. Returns (next_row, count).
    """
    cap = buf0.size
    count = 0
    delta = np.empty(m + 1)
    square = n == 2.0
    i = start
    while i < nt - 1:
        row = nt - 1 - i
        if count + row > cap:
            break
        for j in range(i + 1, nt):
            s = 0.0
            for k in range(m):
                delta[k] = x[i + k] - x[j + k]
                s += delta[k]
            delta[m] = x[i + m] - x[j + m]
            mu0 = s / m
            mu1 = (s + delta[m]) / (m + 1)
            d0 = 0.0
            d1 = 0.0
            for k in range(m):
                a = abs(delta[k] - mu0)
                if a > d0:
                    d0 = a
                b = abs(delta[k] - mu1)
                if b > d1:
                    d1 = b
            b = abs(delta[m] - mu1)
            if b > d1:
                d1 = b
            if square:
                buf0[count] = -d0 * d0 * inv_r
                buf1[count] = -d1 * d1 * inv_r
            else:
                buf0[count] = -(d0 ** n) * inv_r
                buf1[count] = -(d1 ** n) * inv_r
            count += 1
        i += 1
    return i, count


@numba.njit(cache=True)
def fuzzy_fill_m2(x, inv_r, start, nt, buf0, buf1):
    """fuzzy_fill specialised to m=2, n=2; scalar code the compiler can vectorise."""
    cap = buf0.size
    count = 0
    i = start
    while i < nt - 1:
        if count + nt - 1 - i > cap:
            break
        a0 = x[i]
        a1 = x[i + 1]
        a2 = x[i + 2]
        base = count - i - 1
        for j in range(i + 1, nt):
            e0 = a0 - x[j]
            e1 = a1 - x[j + 1]
            e2 = a2 - x[j + 2]
            d0 = abs(0.5 * (e0 - e1))
            mu = (e0 + e1 + e2) / 3.0
            d1 = max(abs(e0 - mu), max(abs(e1 - mu), abs(e2 - mu)))
            buf0[base + j] = -d0 * d0 * inv_r
            buf1[base + j] = -d1 * d1 * inv_r
        count += nt - 1 - i
        i += 1
    return i, count


@numba.njit(cache=True)
def apen_counts(x, m, r):
    """Per-template match counts (self-matches included) at lengths m and m+1.

    Returns arrays of size N-m+1 and N-m.
    """
    N = x.size
    nm = N - m + 1
    nm1 = N - m
    cm = np.zeros(nm, np.int64)
    cm1 = np.zeros(nm1, np.int64)
    for i in range(nm):
        for j in range(i, nm):
            d = 0.0
            for k in range(m):
                a = abs(x[i + k] - x[j + k])
                if a > d:
                    d = a
            if d <= r:
                cm[i] += 1
                if j != i:
                    cm[j] += 1
                if i < nm1 and j < nm1:
                    a = abs(x[i + m] - x[j + m])
                    if a <= r:
                        cm1[i] += 1
                        if j != i:
                            cm1[j] += 1
    return cm, cm1


@numba.njit(cache=True)
def sampen_counts(x, m, r):
    """(B, A): template pairs i < j < N-m matching at length m and m+1."""
    N = x.size
    nt = N - m
    B = 0
    A = 0
    for i in range(nt - 1):
        for j in range(i + 1, nt):
            d = 0.0
            for k in range(m):
                a = abs(x[i + k] - x[j + k])
                if a > d:
                    d = a
            if d <= r:
                B += 1
                if abs(x[i + m] - x[j + m]) <= r:
                    A += 1
    return B, A
