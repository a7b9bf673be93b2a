"""Latent-space trajectory dataset augmentation toolkit."""

__version__ = "0.1.0"
