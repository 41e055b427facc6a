"""Contextuality certificates for quantum linear response."""
from . import certify, channels, dynamics, engine, errors, metrology, numkit, ontomodel

__all__ = ["certify", "channels", "dynamics", "engine", "errors", "metrology", "numkit", "ontomodel"]
__version__ = "0.1.0"
