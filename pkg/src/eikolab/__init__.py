"""Numerical laboratory for target-pattern formation in the viscous eikonal equation.

The package simulates

    phi_t = Laplacian(phi) - b |grad phi|^2 - eps * g(x)

on a periodic square with an algebraically localized defect g, measures the
selected far-field wavenumber, and compares it against the matched-asymptotics
frequency prediction k ~ exp(-1/a) built from modified Bessel functions.
"""

__version__ = "0.1.0"

from . import asymptotics, measure, profiles, radial, specfun, spectral

__all__ = [
    "asymptotics",
    "measure",
    "profiles",
    "radial",
    "specfun",
    "spectral",
    "__version__",
]
