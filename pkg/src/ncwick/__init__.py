"""Kohn-Nirenberg and Wick quantizations on the circle, SU(2) and the Heisenberg group."""
__version__ = "0.1.0"
