"""Fixed-k extreme-value diagnostic for thin-tailed latent errors in binary choice models."""

__version__ = "0.1.0"
