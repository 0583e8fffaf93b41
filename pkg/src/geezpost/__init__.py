"""Amharic (Ge'ez script) ASR post-processing toolkit."""

__version__ = "0.1.0"
