"""mmflow: 2D compressible multi-medium flow with RP- and GRP-based
numerical fluxes and ghost-fluid interface states."""

__version__ = "0.1.0"
