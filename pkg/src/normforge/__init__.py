"""normforge: multilingual social-norm dialogue synthesis and evaluation."""

__version__ = "0.1.0"
