"""Exact desk-scale toolkit for q-ary Fourier analysis, gadget noise
operators, label cover and the coloring reductions built on them."""

__version__ = "0.1.0"
