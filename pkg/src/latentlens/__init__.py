"""latentlens: confidence-based filtering for deterministic diffusion on Gaussian mixtures."""

__version__ = "0.1.0"
