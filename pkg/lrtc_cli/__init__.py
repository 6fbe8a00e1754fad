"""Command-line harness for p-shrinkage tensor completion experiments."""

__version__ = "0.1.0"
