"""Pseudo-spectral suite for the generalized Navier-Stokes equations.

Fractional dissipation (-Laplacian)^alpha on a periodic box, Wiener-randomized
rough initial data, Duhamel/Picard mild solutions, exponential integrators and
Fourier-splitting decay diagnostics.
"""

__version__ = "0.1.0"
