"""Semantic-guided inpainting of urban street scenes."""

__version__ = "0.1.0"
