"""tagmark: benchmark part-of-speech taggers on accuracy and size."""

__version__ = '0.1.0'
