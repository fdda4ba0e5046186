"""starenh: real-time, style-aware photo enhancement with predicted curves."""

__version__ = "0.1.0"
