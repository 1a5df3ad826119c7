"""Monte Carlo separability ratios for two-qubit states under flat, steering-ellipsoid and Bures measures."""

__version__ = "0.1.0"
