"""Particle-based multipath-aware UWB positioning with probabilistic data association."""

__version__ = "0.1.0"
