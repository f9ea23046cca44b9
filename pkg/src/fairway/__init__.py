"""Batch-parallel coastal vessel navigation simulator and safety toolkit."""

__version__ = "0.1.0"
