"""agrivoice: spoken user feedback capture and analysis for digital farming apps."""

__version__ = "0.1.0"
