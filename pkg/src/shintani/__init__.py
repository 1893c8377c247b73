"""Exact-arithmetic classical and overconvergent Shintani liftings."""

__version__ = "0.1.0"
