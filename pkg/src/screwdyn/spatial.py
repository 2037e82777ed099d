"""Screw algebra: cross-product matrices, screw elements and the 6x6 motion groups.

Conventions
-----------
* A wrench is stored as ``(resultant; moment)``, e.g. ``(force; torque)``.
* A twist is stored as ``(linear velocity; angular velocity)``.  The angular
  velocity plays the role of the resultant and the linear velocity the role
  of the moment, so both kinds obey the same reduction-point law
  ``moment_a = moment_b + ab x resultant``.
* ``MotionTransform(rotation=C, displacement=d)`` describes a frame ``p``
  relative to a frame ``0``: ``C`` maps ``p``-coordinates to ``0``-coordinates
  and ``d`` is the vector from ``O_0`` to ``O_p`` in ``0``-coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotOrthonormal, NotSkew

ORTHO_TOL = 1e-9
PROJECT_TOL = 1e-6


class Kind(str, Enum):
    WRENCH = "wrench"
    TWIST = "twist"


def _kind(kind) -> Kind:
    return kind if isinstance(kind, Kind) else Kind(kind)


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


def cross_matrix(f) -> np.ndarray:
    """Skew matrix ``F`` with ``F @ g == cross(f, g)``."""
    f1, f2, f3 = np.asarray(f, dtype=float).reshape(3)
    return np.array([[0.0, -f3, f2], [f3, 0.0, -f1], [-f2, f1, 0.0]])


def uncross(m, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`cross_matrix`, taken on the skew part of ``m``."""
    m = np.asarray(m, dtype=float).reshape(3, 3)
    sym = 0.5 * (m + m.T)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(sym)) > tol * scale:
        raise NotSkew(f"symmetric part {np.max(np.abs(sym)):.3e} exceeds tolerance")
    a = 0.5 * (m - m.T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


_EYE3 = np.eye(3)


def as_rotation(m) -> np.ndarray:
    """Validate a rotation matrix, projecting small drift back onto SO(3).

    Drift up to ``PROJECT_TOL`` is removed with the nearest-orthogonal
    (polar) projection; anything larger, or a reflection, raises.
    """
    m = np.array(m, dtype=float).reshape(3, 3)
    drift = float(np.abs(m.T @ m - _EYE3).max())
    if not drift <= PROJECT_TOL:  # also catches nan/inf
        if not np.all(np.isfinite(m)):
            raise NotOrthonormal("non-finite rotation matrix")
        raise NotOrthonormal(f"orthonormality drift {drift:.3e} > {PROJECT_TOL}")
    if drift > 1e-13:
        u, _, vt = np.linalg.svd(m)
        m = u @ vt
    # det = row0 . (row1 x row2)
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    if det < 0.0:
        raise NotOrthonormal("det(C) = -1: reflection, not a rotation")
    return m


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScrewElement:
    """Element of reduction ``(resultant, moment)`` of a screw at some point."""

    resultant: np.ndarray
    moment: np.ndarray
    kind: Kind = Kind.WRENCH

    def __post_init__(self):
        object.__setattr__(self, "resultant", _frozen(vec3(self.resultant)))
        object.__setattr__(self, "moment", _frozen(vec3(self.moment)))
        object.__setattr__(self, "kind", _kind(self.kind))

    def as6(self) -> np.ndarray:
        if self.kind is Kind.WRENCH:
            return np.concatenate([self.resultant, self.moment])
        return np.concatenate([self.moment, self.resultant])

    @classmethod
    def from6(cls, x, kind=Kind.WRENCH) -> "ScrewElement":
        x = np.asarray(x, dtype=float).reshape(6)
        if _kind(kind) is Kind.WRENCH:
            return cls(x[:3], x[3:], Kind.WRENCH)
        return cls(x[3:], x[:3], Kind.TWIST)


def shift_reduction_point(s: ScrewElement, ab) -> ScrewElement:
    """Move the reduction point from ``b`` to ``a``; ``ab`` is the vector a->b."""
    ab = vec3(ab)
    return ScrewElement(s.resultant, s.moment + np.cross(ab, s.resultant), s.kind)


def classify_screw(s: ScrewElement, tol: float = 1e-12) -> str:
    """Return ``"slider"``, ``"couple"`` or ``"general"``.

    The zero screw counts as a slider.
    """
    r, mu = s.resultant, s.moment
    nr, nm = np.linalg.norm(r), np.linalg.norm(mu)
    if nr <= tol:
        return "couple" if nm > tol else "slider"
    if np.linalg.norm(np.cross(r, mu)) <= tol * nr * max(nm, 1.0):
        return "slider"
    return "general"


@dataclass(frozen=True)
class MotionTransform:
    rotation: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen(as_rotation(self.rotation)))
        object.__setattr__(self, "displacement", _frozen(vec3(self.displacement)))

    @classmethod
    def identity(cls) -> "MotionTransform":
        return cls(np.eye(3), np.zeros(3))

    @property
    def displacement_local(self) -> np.ndarray:
        """Displacement expressed in the moving frame (``C^T d``)."""
        return self.rotation.T @ self.displacement

    def apply(self, x) -> np.ndarray:
        """Map point coordinates from the moving frame to the reference frame."""
        return self.displacement + self.rotation @ np.asarray(x, dtype=float)


def _translation_block(d) -> np.ndarray:
    t = np.eye(6)
    t[3:, :3] = cross_matrix(d)
    return t


def _rotation_block(c) -> np.ndarray:
    out = np.zeros((6, 6))
    out[:3, :3] = c
    out[3:, 3:] = c
    return out


_SWAP = np.block([[np.zeros((3, 3)), np.eye(3)], [np.eye(3), np.zeros((3, 3))]])


def wrench_factorizations(t: MotionTransform) -> tuple[np.ndarray, np.ndarray]:
    """Both products ``T(d^0) C (x) C`` and ``C (x) C T(d^p)`` of the wrench element."""
    c = t.rotation
    left = _translation_block(t.displacement) @ _rotation_block(c)
    right = _rotation_block(c) @ _translation_block(t.displacement_local)
    return left, right


def motion_group_element(t: MotionTransform, kind=Kind.WRENCH) -> np.ndarray:
    """6x6 matrix carrying screw coordinates from the moving frame to the reference frame."""
    c, d = t.rotation, t.displacement
    dx_c = cross_matrix(d) @ c
    out = np.zeros((6, 6))
    out[:3, :3] = c
    out[3:, 3:] = c
    if _kind(kind) is Kind.WRENCH:
        out[3:, :3] = dx_c
    else:
        out[:3, 3:] = dx_c
    return out


def compose(t1: MotionTransform, t2: MotionTransform) -> MotionTransform:
    """Pose of frame ``k`` in ``0`` given ``t1`` (p in 0) and ``t2`` (k in p)."""
    c1 = t1.rotation
    return MotionTransform(c1 @ t2.rotation, t1.displacement + c1 @ t2.displacement)


def inverse(t: MotionTransform) -> MotionTransform:
    ct = t.rotation.T
    return MotionTransform(ct, -ct @ t.displacement)


def transform_screw(t: MotionTransform, s6, kind=Kind.WRENCH) -> np.ndarray:
    return motion_group_element(t, kind) @ np.asarray(s6, dtype=float).reshape(6)


def phi_matrix(v, kind=Kind.WRENCH) -> np.ndarray:
    """Rate generator built from a twist ``v = (lin; ang)``.

    Wrench form is ``[[w^x, 0], [v^x, w^x]]``; the twist form is its negative
    transpose ``[[w^x, v^x], [0, w^x]]``.
    """
    v = np.asarray(v, dtype=float).reshape(6)
    wx = cross_matrix(v[3:])
    vx = cross_matrix(v[:3])
    out = np.zeros((6, 6))
    out[:3, :3] = wx
    out[3:, 3:] = wx
    if _kind(kind) is Kind.WRENCH:
        out[3:, :3] = vx
    else:
        out[:3, 3:] = vx
    return out


def motion_transform_rate(t: MotionTransform, vrel, kind=Kind.WRENCH) -> np.ndarray:
    """Time derivative of the group element for body-frame quasi-velocity ``vrel``."""
    return motion_group_element(t, kind) @ phi_matrix(vrel, kind)


def reciprocal_product(wrench6, twist6) -> float:
    """Frame-invariant pairing <force, v> + <torque, w> (power)."""
    return float(np.dot(np.asarray(wrench6, float), np.asarray(twist6, float)))
