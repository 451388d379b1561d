"""Numerical and constructive tooling for fine-grained hardness of lattice problems in lp norms."""

__version__ = "0.1.0"
