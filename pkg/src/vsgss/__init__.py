"""Small-signal analysis of a virtual synchronous generator sharing a bus with a synchronous generator."""

__version__ = "0.1.0"
