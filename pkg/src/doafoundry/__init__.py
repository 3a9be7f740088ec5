"""Massive-receive-MIMO direction-of-arrival toolkit.

Submodules: core (signal model), detection, estimators, analysis (bounds),
had (hybrid arrays), quantization, coarray, localization, harness, cli.
"""

__version__ = "0.1.0"
