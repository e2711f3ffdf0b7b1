"""Numerical laboratory for q-Lagrange-Hermite positive linear operators and
deferred weighted A-statistical / power-series summability."""

__version__ = "0.1.0"
