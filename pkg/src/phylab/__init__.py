"""Physical-layer simulation toolkit with from-scratch neural receivers."""

__version__ = "0.1.0"
