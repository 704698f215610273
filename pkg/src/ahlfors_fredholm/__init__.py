"""Weakly singular Fredholm equations on sampled upper Ahlfors regular spaces."""

__version__ = "0.1.0"
