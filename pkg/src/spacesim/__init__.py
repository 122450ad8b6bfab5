"""Deterministic rigid-body simulator and scenario generator for containment,
stability and contact events, with ground-truth annotation maps."""

__version__ = "0.1.0"
