"""Finite models of étale groupoids, their convolution algebras and rigidity checks.

Submodules
----------
groupoid, isomorphism
    Finite groupoids, cocycles and isomorphism search.
algebra
    Convolution algebras, norms, diagonals and gradings.
weyl
    Normalizers and the extended Weyl groupoid reconstruction.
dr
    Deaconu-Renault groupoids of finite partial self-maps.
shifts
    Cuntz-Krieger calculus and certificates for shifts of finite type.
dynamics
    Continuous orbit equivalence and related conjugacy notions.
cli
    The ``etale`` command-line tool.
"""

from __future__ import annotations

from ._common import (EPS, CertificateError, HypothesisError, InvalidStructure, ResourceLimitError, RigidityError,
                      ValidationReport)

__version__ = "0.1.0"

__all__ = ["EPS", "CertificateError", "HypothesisError", "InvalidStructure", "ResourceLimitError", "RigidityError",
           "ValidationReport", "__version__"]
