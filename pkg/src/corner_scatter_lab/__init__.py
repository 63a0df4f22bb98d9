"""Numerical certification toolkit for corner scattering.

Cone Laplace transforms of harmonic polynomials, the 2D determinant
certificate, 3D cap integrals and exceptional angles, Fourier/Sobolev decay
of cone indicators, CGO remainders and a 2D far-field scattering simulator.
"""

__version__ = "0.1.0"
