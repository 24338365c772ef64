"""Rational points of bounded height on two families of spherical threefolds."""

__version__ = "0.1.0"
