"""Distributed subgradient averaging over time-varying networks with per-agent constraint sets."""

__version__ = "0.1.0"
