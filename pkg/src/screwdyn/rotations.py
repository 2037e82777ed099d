"""Rotation parameterizations and their kinematic rate equations.

Three parameterizations are supported: Euler angles ``(phi, theta, psi)``
with ``C = Cx(phi) Cy(theta) Cz(psi)``, the Fedorov (Cayley/Gibbs) vector
``f`` with ``f^x = (C - I)(C + I)^-1``, and unit quaternions
``(l0, l1, l2, l3)`` (Euler-Rodrigues parameters).

Angular velocities passed to the ``*_rate`` functions are body-frame
quasi-velocities, i.e. ``dC/dt = C @ cross_matrix(omega)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalLock, NotUnit, PiRotation
from .spatial import as_rotation, cross_matrix, uncross

GIMBAL_TOL = 1e-8
PI_TOL = 1e-8
UNIT_TOL = 1e-9


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues formula for rotation by ``angle`` about unit ``axis``."""
    k = cross_matrix(np.asarray(axis, dtype=float) / np.linalg.norm(axis))
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


# derivatives of the elementary rotations with respect to their angle
def _drot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def _drot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])


def _drot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class RateMatrix:
    """``omega = D @ param_rate``, with ``det`` kept for singularity checks."""

    D: np.ndarray
    det: float

    @property
    def invertible(self) -> bool:
        return abs(self.det) > GIMBAL_TOL


def euler_to_rotation(e) -> np.ndarray:
    phi, theta, psi = np.asarray(e, dtype=float).reshape(3)
    return rot_x(phi) @ rot_y(theta) @ rot_z(psi)


def euler_rate_matrix(e) -> RateMatrix:
    """Columns are ``uncross(C^T dC/dlambda_i)`` for the three angles."""
    phi, theta, psi = np.asarray(e, dtype=float).reshape(3)
    c1, c2, c3 = rot_x(phi), rot_y(theta), rot_z(psi)
    ct = (c1 @ c2 @ c3).T
    partials = (
        _drot_x(phi) @ c2 @ c3,
        c1 @ _drot_y(theta) @ c3,
        c1 @ c2 @ _drot_z(psi),
    )
    d = np.column_stack([uncross(ct @ p) for p in partials])
    return RateMatrix(d, float(np.linalg.det(d)))


def euler_rate_matrix_closed(e) -> np.ndarray:
    """Closed form of :func:`euler_rate_matrix`; its determinant is cos(theta)."""
    _, theta, psi = np.asarray(e, dtype=float).reshape(3)
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(psi), math.sin(psi)
    return np.array([[ct * cp, sp, 0.0], [-ct * sp, cp, 0.0], [st, 0.0, 1.0]])


def euler_rate_matrix_derivative(e, e_dot) -> np.ndarray:
    """d/dt of the Euler rate matrix along ``e_dot``."""
    _, theta, psi = np.asarray(e, dtype=float).reshape(3)
    _, dtheta, dpsi = np.asarray(e_dot, dtype=float).reshape(3)
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(psi), math.sin(psi)
    d_theta = np.array([[-st * cp, 0.0, 0.0], [st * sp, 0.0, 0.0], [ct, 0.0, 0.0]])
    d_psi = np.array([[-ct * sp, cp, 0.0], [-ct * cp, -sp, 0.0], [0.0, 0.0, 0.0]])
    return d_theta * dtheta + d_psi * dpsi


def euler_rate(e, omega) -> np.ndarray:
    """Euler-angle rates from body angular velocity; raises at gimbal lock."""
    rm = euler_rate_matrix(e)
    if not rm.invertible:
        raise GimbalLock(f"|det D| = {abs(rm.det):.3e} <= {GIMBAL_TOL} (theta near +-pi/2)")
    return np.linalg.solve(rm.D, np.asarray(omega, dtype=float).reshape(3))


def rotation_to_euler(c) -> np.ndarray:
    """Inverse of :func:`euler_to_rotation` (theta in [-pi/2, pi/2])."""
    c = as_rotation(c)
    theta = math.asin(max(-1.0, min(1.0, c[0, 2])))
    if abs(math.cos(theta)) < 1e-12:
        raise GimbalLock("theta = +-pi/2: phi and psi are not separable")
    phi = math.atan2(-c[1, 2], c[2, 2])
    psi = math.atan2(-c[0, 1], c[0, 0])
    return np.array([phi, theta, psi])


def fedorov_from_rotation(c) -> np.ndarray:
    c = as_rotation(c)
    denom = 1.0 + np.trace(c)
    if denom <= PI_TOL:
        raise PiRotation(f"1 + tr C = {denom:.3e}: rotation angle is pi")
    return uncross((c - c.T) / denom)


def rotation_from_fedorov(f) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(3)
    n2 = float(f @ f)
    return ((1.0 - n2) * np.eye(3) + 2.0 * np.outer(f, f) + 2.0 * cross_matrix(f)) / (1.0 + n2)


def rotation_from_fedorov_cayley(f) -> np.ndarray:
    """``(I + f^x)(I - f^x)^-1``; equal to :func:`rotation_from_fedorov`."""
    fx = cross_matrix(f)
    return (np.eye(3) + fx) @ np.linalg.inv(np.eye(3) - fx)


def fedorov_rate_matrix(f) -> RateMatrix:
    """``D = 2/(1+|f|^2) (I - f^x)`` so that body ``omega = D f_dot``."""
    f = np.asarray(f, dtype=float).reshape(3)
    d = 2.0 / (1.0 + f @ f) * (np.eye(3) - cross_matrix(f))
    return RateMatrix(d, float(np.linalg.det(d)))


def fedorov_rate_matrix_parent(f) -> np.ndarray:
    """``2/(1+|f|^2) (I + f^x)``: maps f_dot to omega in parent-frame coordinates."""
    f = np.asarray(f, dtype=float).reshape(3)
    return 2.0 / (1.0 + f @ f) * (np.eye(3) + cross_matrix(f))


def fedorov_rate_matrix_derivative(f, f_dot) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(3)
    f_dot = np.asarray(f_dot, dtype=float).reshape(3)
    n = 1.0 + f @ f
    return (-4.0 * (f @ f_dot) / n**2) * (np.eye(3) - cross_matrix(f)) - (2.0 / n) * cross_matrix(f_dot)


def fedorov_rate(f, omega) -> np.ndarray:
    return np.linalg.solve(fedorov_rate_matrix(f).D, np.asarray(omega, dtype=float).reshape(3))


def fedorov_rate_factored(f, omega) -> np.ndarray:
    """The factored rate ``1/2 (1+|f|^2)(I - f^x)^2 (I + f^x) omega``.

    Kept only to document that it disagrees with the inverse rate matrix.
    """
    f = np.asarray(f, dtype=float).reshape(3)
    fx = cross_matrix(f)
    i = np.eye(3)
    return 0.5 * (1.0 + f @ f) * (i - fx) @ (i - fx) @ (i + fx) @ np.asarray(omega, float)


# -- quaternions: arrays (l0, l1, l2, l3) --------------------------------------

def quat_product(a, b) -> np.ndarray:
    a0, av = a[0], np.asarray(a[1:], dtype=float)
    b0, bv = b[0], np.asarray(b[1:], dtype=float)
    return np.concatenate([[a0 * b0 - av @ bv], a0 * bv + b0 * av + np.cross(av, bv)])


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(4)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _check_unit(q, tol=UNIT_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(4)
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > tol:
        raise NotUnit(f"|q| = {n!r} deviates from 1 by more than {tol}")
    return q


def rotation_from_quat(q) -> np.ndarray:
    l0, l1, l2, l3 = _check_unit(q)
    return np.array([
        [l0 * l0 + l1 * l1 - l2 * l2 - l3 * l3, 2 * l1 * l2 - 2 * l0 * l3, 2 * l1 * l3 + 2 * l0 * l2],
        [2 * l1 * l2 + 2 * l0 * l3, l0 * l0 - l1 * l1 + l2 * l2 - l3 * l3, 2 * l2 * l3 - 2 * l0 * l1],
        [2 * l1 * l3 - 2 * l0 * l2, 2 * l2 * l3 + 2 * l0 * l1, l0 * l0 - l1 * l1 - l2 * l2 + l3 * l3],
    ])


def quat_from_rotation(c) -> np.ndarray:
    """Largest-pivot extraction; the result has ``l0 >= 0``."""
    c = as_rotation(c)
    tr = np.trace(c)
    diag = (tr, c[0, 0], c[1, 1], c[2, 2])
    k = int(np.argmax(diag))
    if k == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = np.array([0.25 * s, (c[2, 1] - c[1, 2]) / s, (c[0, 2] - c[2, 0]) / s, (c[1, 0] - c[0, 1]) / s])
    elif k == 1:
        s = 2.0 * math.sqrt(max(0.0, 1.0 + c[0, 0] - c[1, 1] - c[2, 2]))
        q = np.array([(c[2, 1] - c[1, 2]) / s, 0.25 * s, (c[0, 1] + c[1, 0]) / s, (c[0, 2] + c[2, 0]) / s])
    elif k == 2:
        s = 2.0 * math.sqrt(max(0.0, 1.0 - c[0, 0] + c[1, 1] - c[2, 2]))
        q = np.array([(c[0, 2] - c[2, 0]) / s, (c[0, 1] + c[1, 0]) / s, 0.25 * s, (c[1, 2] + c[2, 1]) / s])
    else:
        s = 2.0 * math.sqrt(max(0.0, 1.0 - c[0, 0] - c[1, 1] + c[2, 2]))
        q = np.array([(c[1, 0] - c[0, 1]) / s, (c[0, 2] + c[2, 0]) / s, (c[1, 2] + c[2, 1]) / s, 0.25 * s])
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_rate_matrix(omega) -> np.ndarray:
    """The 4x4 skew matrix ``Omega`` with ``q_dot = Omega @ q``."""
    w1, w2, w3 = np.asarray(omega, dtype=float).reshape(3)
    return 0.5 * np.array([
        [0.0, -w1, -w2, -w3],
        [w1, 0.0, w3, -w2],
        [w2, -w3, 0.0, w1],
        [w3, w2, -w1, 0.0],
    ])


def quat_rate(q, omega) -> np.ndarray:
    """Quaternion rate for body angular velocity; equals ``0.5 * q o omega``.

    ``q`` is not renormalized or validated here so that norm drift of an
    integrator can be measured.
    """
    return quat_rate_matrix(omega) @ np.asarray(q, dtype=float).reshape(4)


def rotation_rate(c, omega) -> np.ndarray:
    return np.asarray(c, dtype=float) @ cross_matrix(omega)


# -- tagged conversions ---------------------------------------------------------

PARAM_KINDS = ("euler", "fedorov", "quat", "matrix")


def to_matrix(kind: str, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if kind == "euler":
        return euler_to_rotation(values)
    if kind == "fedorov":
        return rotation_from_fedorov(values)
    if kind == "quat":
        return rotation_from_quat(values)
    if kind == "matrix":
        return as_rotation(values.reshape(3, 3))
    raise ValueError(f"unknown rotation parameterization {kind!r}")


def from_matrix(kind: str, c) -> np.ndarray:
    if kind == "euler":
        return rotation_to_euler(c)
    if kind == "fedorov":
        return fedorov_from_rotation(c)
    if kind == "quat":
        return quat_from_rotation(c)
    if kind == "matrix":
        return as_rotation(c).reshape(9)
    raise ValueError(f"unknown rotation parameterization {kind!r}")


def param_rate(kind: str, values, omega) -> np.ndarray:
    """Time derivative of a parameter vector under body angular velocity ``omega``."""
    if kind == "euler":
        return euler_rate(values, omega)
    if kind == "fedorov":
        return fedorov_rate(values, omega)
    if kind == "quat":
        return quat_rate(values, omega)
    if kind == "matrix":
        c = np.asarray(values, dtype=float).reshape(3, 3)
        return rotation_rate(c, omega).reshape(9)
    raise ValueError(f"unknown rotation parameterization {kind!r}")


def param_size(kind: str) -> int:
    return {"euler": 3, "fedorov": 3, "quat": 4, "matrix": 9}[kind]


def matrix_unchecked(kind: str, values) -> np.ndarray:
    """Rotation matrix from parameters without unit/orthonormality validation."""
    values = np.asarray(values, dtype=float)
    if kind == "euler":
        return euler_to_rotation(values)
    if kind == "fedorov":
        return rotation_from_fedorov(values)
    if kind == "quat":
        q = values / np.linalg.norm(values)
        return rotation_from_quat(q)
    if kind == "matrix":
        return values.reshape(3, 3)
    raise ValueError(f"unknown rotation parameterization {kind!r}")
