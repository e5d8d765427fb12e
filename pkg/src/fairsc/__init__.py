"""Fair spectral clustering: ADMM difference-of-convex solver and exact baselines."""

__version__ = "0.1.0"
