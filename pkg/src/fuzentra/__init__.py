"""Multiscale inherent fuzzy entropy for SSVEP EEG.

The core steps are importable from their modules: ``preprocess`` (FIR
band-pass, decimation, artifact rejection), ``emd`` (empirical mode
decomposition), ``entropy`` (fuzzy, approximate and sample entropy across
scales), ``cca`` (template-based denoising), ``stats``, ``classify`` and
``synth`` (synthetic cohorts). ``pipeline`` chains them end to end.
"""

__version__ = "0.1.0"
