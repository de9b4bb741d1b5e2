"""Numerical laboratory for multiparticle Anderson localization."""
__version__ = "0.1.0"
