"""Perfect-tree surgery, finite forcing conditions and their certificates."""

__version__ = "0.1.0"
