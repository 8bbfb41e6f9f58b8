"""Text-effect style transfer lab."""

__version__ = "0.1.0"
