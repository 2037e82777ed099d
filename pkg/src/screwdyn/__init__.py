"""Screw-calculus mechanics: spatial algebra, rigid and multibody dynamics,
rotation parameterizations, constrained mass points and constitutive relations."""

from . import body, constitutive, errors, integrators, multibody, points, rotations, spatial

__all__ = ["body", "constitutive", "errors", "integrators", "multibody", "points", "rotations", "spatial"]
__version__ = "0.1.0"
