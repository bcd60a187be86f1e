"""Ocular response-time estimation from occipital EEG.

Subpackage map:

- :mod:`ocutime.signal_core` -- containers and sliding-window extraction
- :mod:`ocutime.preprocess` -- resampling, band-pass, re-referencing
- :mod:`ocutime.rdwt` -- redundant discrete wavelet transform
- :mod:`ocutime.autodiff` -- reverse-mode autodiff engine
- :mod:`ocutime.model` -- trainable trajectory-prediction network
- :mod:`ocutime.metrics` -- DTW, cross-correlation, PSD, U test
- :mod:`ocutime.voms_synth` -- synthetic stimulus and EEG generation
- :mod:`ocutime.pipeline` / :mod:`ocutime.cli` -- file-based stages
"""

__version__ = "0.1.0"
