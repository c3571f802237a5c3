"""CCA-based SSVEP artifact removal against sin/cos stimulus templates.

The EEG channels are correlated with sine/cosine references at the stimulus
frequency and its second harmonic. The data-side canonical weights of the
strongest correlations span the stimulus-locked subspace; the epoch is
projected onto that subspace and mapped back to channel space with the
Moore-Penrose pseudo-inverse (the weight matrix is channels x keep, so it
has no ordinary inverse).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import HarmonicAboveNyquist, InsufficientComponents, SingularCovariance
from .series import MultiChannelEpoch

RIDGE = 1e-10
MAX_CONDITION = 1e8  # on the correlation matrix; exact collinearity gives ~1/RIDGE


@dataclass(frozen=True, eq=False)
class TemplateBank:
    rows: np.ndarray  # (4, length): sin f1, cos f1, sin f2, cos f2
    f1: float
    sample_rate: float

    @property
    def f2(self) -> float:
        return 2.0 * self.f1


@dataclass(frozen=True, eq=False)
class CcaSolution:
    correlations: np.ndarray  # descending
    weights: np.ndarray  # (n_channels, k); column i pairs with correlations[i]


def make_template(f1: float, length: int, rate: float) -> TemplateBank:
    if not f1 > 0:
        raise ValueError("stimulus frequency must be positive")
    if length < 2:
        raise ValueError("template needs at least two samples")
    if not f1 < rate / 4:
        raise HarmonicAboveNyquist(
            f"second harmonic {2 * f1} Hz is not below Nyquist {rate / 2} Hz"
        )
    t = np.arange(int(length)) / rate
    w1 = 2 * np.pi * f1 * t
    w2 = 2 * np.pi * 2 * f1 * t
    rows = np.vstack([np.sin(w1), np.cos(w1), np.sin(w2), np.cos(w2)])
    rows.setflags(write=False)
    return TemplateBank(rows, float(f1), float(rate))


def _regularised_cov(z: np.ndarray) -> np.ndarray:
    c = z @ z.T / (z.shape[1] - 1)
    # ridge proportional to each variable's own variance keeps the
    # correlations exactly invariant to per-channel rescaling
    c[np.diag_indices_from(c)] *= 1.0 + RIDGE
    return c


def covariances(x: np.ndarray, y: np.ndarray):
    """Regularised (Cxx, Cyy, Cxy) of mean-centred row-variable matrices."""
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean(axis=1, keepdims=True)
    cxx = _regularised_cov(xc)
    cyy = _regularised_cov(yc)
    cxy = xc @ yc.T / (x.shape[1] - 1)
    for name, c in (("data", cxx), ("template", cyy)):
        d = np.diag(c)
        if np.any(d <= 0) or np.linalg.cond(c / np.sqrt(np.outer(d, d))) > MAX_CONDITION:
            raise SingularCovariance(f"{name} covariance is singular")
    return cxx, cyy, cxy


def _data_matrix(data):
    if isinstance(data, MultiChannelEpoch):
        return data.data
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError("data must be (channels, samples)")
    return arr


def cca_solve(data, tmpl) -> CcaSolution:
    """Canonical correlations and data-side weights.

    Solves Cxy Cyy^-1 Cyx w = rho^2 Cxx w as a symmetric-definite generalised
    eigenproblem; weights are normalised to unit canonical variance
    (w' Cxx w = 1) and signed so their largest-magnitude entry is positive.
    """
    x = _data_matrix(data)
    y = tmpl.rows if isinstance(tmpl, TemplateBank) else np.asarray(tmpl, dtype=float)
    p, q = x.shape[0], y.shape[0]
    if p < 2:
        raise ValueError("CCA needs at least two channels")
    if x.shape[1] != y.shape[1]:
        raise ValueError("template and data lengths differ")
    if x.shape[1] <= p + q:
        raise ValueError("epoch too short for the number of variables")
    cxx, cyy, cxy = covariances(x, y)
    lhs = cxy @ linalg.solve(cyy, cxy.T, assume_a="pos")
    lhs = 0.5 * (lhs + lhs.T)
    evals, evecs = linalg.eigh(lhs, cxx)
    k = min(p, q)
    order = np.argsort(evals)[::-1][:k]
    rho = np.sqrt(np.clip(evals[order], 0.0, 1.0))
    w = evecs[:, order]
    flip = np.sign(w[np.argmax(np.abs(w), axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    return CcaSolution(rho, w * flip)


def denoise(data: MultiChannelEpoch, sol: CcaSolution, keep: int = 2) -> MultiChannelEpoch:
    """Project the epoch onto the ``keep`` most stimulus-correlated components."""
    if keep < 1:
        raise ValueError("keep must be >= 1")
    available = sol.weights.shape[1]
    if keep > available:
        raise InsufficientComponents(f"asked for {keep} components, only {available} available")
    x = data.data
    mean = x.mean(axis=1, keepdims=True)
    a = sol.weights[:, :keep]
    sources = a.T @ (x - mean)
    cleaned = np.linalg.pinv(a.T) @ sources + mean
    return data.replace(data=cleaned)
