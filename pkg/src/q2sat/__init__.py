"""q2sat: exact linear-time solving of quantum 2-SAT instances."""

__version__ = "0.1.0"
