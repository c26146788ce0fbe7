"""flowviz: post-processing for mmflow snapshot files."""

__version__ = "0.1.0"
