"""Spectral tools for the equatorial betaplane shallow-water system.

The package is organised around the skew-symmetric rotation operator

    L(eta, u) = (div u, beta*x1*u_perp + grad eta),   u_perp = (u2, -u1),

on R x T.  Its eigenfunctions are Hermite functions in the meridional
coordinate times Fourier modes in the zonal one; the eigenfrequencies solve a
cubic dispersion relation.  Modules:

- ``hermite``     scaled Hermite functions and Gauss-Hermite quadrature
- ``dispersion``  dispersion cubic, wave classification, asymptotics
- ``eigenbasis``  eigenvectors of L, exact application of L, decomposition
- ``fields``      spectral containers, norms, projectors, filtering semigroup
- ``resonance``   triad defects, resonance polynomial, resonance scans
- ``operators``   quadratic form Q, partial diffusion, resonance-filtered
  limits, geostrophic diffusion, first-order corrector
- ``solver``      time integration of the filtered and limit systems,
  convergence experiments
- ``cli``         batch command-line front end
"""

__version__ = "0.1.0"
