"""Continuous-variable MacWilliams identities, GKP lattices and code-size bounds."""

__version__ = "0.1.0"
