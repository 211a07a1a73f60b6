"""Parallel-chain Bayesian quantum state tomography."""

__version__ = "1.0.0"
