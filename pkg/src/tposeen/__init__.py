"""Spectral solvers for time-periodic viscous flow around a moving rigid body.

Subpackage map:

- ``grid``, ``fields``: periodic-box sampling and spectral operators
- ``torus_series``: finitely supported time-Fourier series and their algebra
- ``oseen``: purely periodic and rotating-frame Oseen solvers plus estimates
- ``embedding``: anisotropic embedding inequality verifier
- ``galerkin``: skew-perturbed Galerkin systems on masked bases
- ``nonlinear``: lifting field, nonlinearity, and the fixed-point driver
- ``cli``: command-line front end
"""

__version__ = "0.1.0"
