"""Kinematics and connection variation of moving hypersurfaces."""

__version__ = "0.1.0"
