"""Differentially private synthetic data via class-wise mixing.

Pipeline: load a labeled dataset, z-score and l2-clip the features, average
l same-class records per synthetic sample with Gaussian noise on features
and one-hot labels, and account the released dataset's (epsilon, delta)
with a tight Renyi-DP analysis.
"""

__version__ = "0.1.0"
