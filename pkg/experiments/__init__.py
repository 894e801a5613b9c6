"""
Experiments Package for HVNet

Reproduction harness: the randomized identity checks, the synthetic bag
sweeps, the ECG5000 resolution sweep, metric CSVs and their SVG plots.
"""

__version__ = "0.1.0"
__all__ = ["baselines", "config", "ecg", "metrics", "plot", "synthetic", "verify"]
