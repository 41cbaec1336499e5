"""Numerical laboratory for functional identities and inequalities on hyperbolic space.

Submodules: ``profiles`` (radial test functions), ``geometry`` (Poincare ball),
``integrate`` (radial quadrature and Monte Carlo), ``identity`` (identity
verifiers), ``bessel`` (Bessel pairs and the ODE solver), ``spectral``
(Hessian bounds, weighted spectral gaps, the ground-state potential),
``stability`` (uncertainty deficits and Gaussian distances), ``entropy``
(Gaussian measures and U-bounds) and ``cli`` (manifest runner).
"""

__version__ = "0.1.0"
