"""Glauber dynamics on hardcore and Ising models, exact small-instance
oracles for Dirichlet forms and divergences, and desk-scale experiment
runners."""

__version__ = "0.1.0"
