"""Spatial inertia of mass distributions and the single rigid-body Newton-Euler equation.

Twists are ``(v; w)`` and wrenches ``(f; m)``, both in body coordinates with
the moment taken about the body-frame origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyDistribution, SingularInertia
from .spatial import MotionTransform, cross_matrix, motion_group_element, phi_matrix
from .rotations import quat_rate, rotation_from_quat

COND_LIMIT = 1e12


@dataclass(frozen=True)
class MassDistribution:
    """Point masses plus optional density quadrature samples, all in body coordinates.

    ``points`` is a sequence of ``(mass, position)``; ``samples`` a sequence of
    ``(density, position, volume_weight)``.
    """

    points: Sequence = ()
    samples: Sequence = ()

    def total_mass(self) -> float:
        return sum(m for m, _ in self.points) + sum(rho * w for rho, _, w in self.samples)


def point_inertia_block(r) -> np.ndarray:
    """Unit-mass spatial inertia of a point at ``r``: ``[[I, -r^x], [r^x, -(r^x)^2]]``."""
    rx = cross_matrix(r)
    out = np.empty((6, 6))
    out[:3, :3] = np.eye(3)
    out[:3, 3:] = -rx
    out[3:, :3] = rx
    out[3:, 3:] = -(rx @ rx)
    return out


def assemble_inertia(dist: MassDistribution) -> np.ndarray:
    if not dist.points and not dist.samples:
        raise EmptyDistribution("mass distribution has no points and no samples")
    theta = np.zeros((6, 6))
    for m, r in dist.points:
        if m < 0:
            raise ValueError(f"negative mass {m}")
        theta += m * point_inertia_block(r)
    if len(dist.samples):
        rho = np.array([s[0] for s in dist.samples], dtype=float)
        pos = np.array([s[1] for s in dist.samples], dtype=float).reshape(-1, 3)
        w = np.array([s[2] for s in dist.samples], dtype=float)
        if np.any(rho < 0) or np.any(w < 0):
            raise ValueError("densities and volume weights must be non-negative")
        theta += _sampled_inertia(rho * w, pos)
    return 0.5 * (theta + theta.T)


def _sampled_inertia(masses: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Vectorized sum of ``m_j * point_inertia_block(r_j)``."""
    m = masses.sum()
    first = masses @ pos
    second = (pos * masses[:, None]).T @ pos
    out = np.zeros((6, 6))
    out[:3, :3] = m * np.eye(3)
    cx = cross_matrix(first)
    out[:3, 3:] = -cx
    out[3:, :3] = cx
    out[3:, 3:] = np.trace(second) * np.eye(3) - second
    return out


def spatial_inertia(mass: float, com, inertia_com) -> np.ndarray:
    """Spatial inertia from mass, centre of mass and the 3x3 inertia tensor about it."""
    c = np.asarray(com, dtype=float)
    cx = cross_matrix(c)
    out = np.zeros((6, 6))
    out[:3, :3] = mass * np.eye(3)
    out[:3, 3:] = -mass * cx
    out[3:, :3] = mass * cx
    out[3:, 3:] = np.asarray(inertia_com, dtype=float) - mass * (cx @ cx)
    return out


def box_inertia(mass: float, size, com=(0.0, 0.0, 0.0)) -> np.ndarray:
    a, b, c = np.asarray(size, dtype=float)
    tensor = mass / 12.0 * np.diag([b * b + c * c, a * a + c * c, a * a + b * b])
    return spatial_inertia(mass, com, tensor)


def cube_samples(density: float, side: float, n: int, center=(0.0, 0.0, 0.0)) -> list:
    """Midpoint-rule density samples of a uniform cube (``n`` per axis)."""
    h = side / n
    ax = (np.arange(n) + 0.5) * h - 0.5 * side
    x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
    pos = np.column_stack([x.ravel(), y.ravel(), z.ravel()]) + np.asarray(center, dtype=float)
    w = h**3
    return [(density, p, w) for p in pos]


def mass_of(theta: np.ndarray) -> float:
    return float(theta[0, 0])


def center_of_mass(theta: np.ndarray) -> np.ndarray:
    """``c`` from the lower-left block ``m c^x``."""
    m = theta[0, 0]
    blk = theta[3:, :3] / m
    return np.array([blk[2, 1], blk[0, 2], blk[1, 0]])


def gyroscopic_wrench(theta, v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(6)
    return phi_matrix(v) @ (np.asarray(theta, dtype=float) @ v)


def checked_inverse(theta) -> np.ndarray:
    """Inverse of a spatial inertia after the condition-number check."""
    theta = np.asarray(theta, dtype=float)
    c = np.linalg.cond(theta)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularInertia(f"spatial inertia condition number {c:.3e} > {COND_LIMIT:.0e}")
    return np.linalg.inv(theta)


def newton_euler_accel(theta, v, wrench, theta_inv=None) -> np.ndarray:
    """Solve ``theta V_dot + Phi(V) theta V = F`` for ``V_dot``.

    Pass a precomputed ``theta_inv`` (see :func:`checked_inverse`) to skip
    the per-call conditioning check.
    """
    theta = np.asarray(theta, dtype=float)
    rhs = np.asarray(wrench, dtype=float) - gyroscopic_wrench(theta, v)
    if theta_inv is not None:
        return theta_inv @ rhs
    c = np.linalg.cond(theta)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularInertia(f"spatial inertia condition number {c:.3e} > {COND_LIMIT:.0e}")
    return np.linalg.solve(theta, rhs)


def kinetic_energy(theta, v) -> float:
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ theta @ v)


def gravity_wrench(theta, rotation, g) -> np.ndarray:
    """Body-frame wrench of a uniform field ``g`` (world coordinates) on the body."""
    gb = np.asarray(rotation, dtype=float).T @ np.asarray(g, dtype=float)
    return np.asarray(theta, dtype=float) @ np.concatenate([gb, np.zeros(3)])


def world_to_body_wrench(pose: MotionTransform, wrench_world) -> np.ndarray:
    """Pull a wrench given at the world origin in world coordinates back to the body frame."""
    c, d = pose.rotation, pose.displacement
    f = np.asarray(wrench_world[:3], dtype=float)
    m = np.asarray(wrench_world[3:], dtype=float)
    return np.concatenate([c.T @ f, c.T @ (m - np.cross(d, f))])


@dataclass(frozen=True)
class BodyState:
    transform: MotionTransform
    vel: np.ndarray = field(default_factory=lambda: np.zeros(6))


def spatial_momentum_world(theta, pose: MotionTransform, v) -> np.ndarray:
    """Momentum wrench ``L_wr @ theta @ V`` about the world origin in world coordinates."""
    return motion_group_element(pose) @ (np.asarray(theta) @ np.asarray(v, dtype=float))


def free_body_rhs(theta, wrench_fn=None):
    """ODE right-hand side for state ``(d[3], q[4], V[6])`` of a single body.

    ``wrench_fn(t, C, d, V)`` returns the body-frame wrench; ``None`` means
    torque- and force-free motion.
    """
    theta = np.asarray(theta, dtype=float)
    theta_inv = checked_inverse(theta)

    def rhs(t, y):
        d, q, v = y[:3], y[3:7], y[7:]
        c = rotation_from_quat(q / np.linalg.norm(q))
        w = np.zeros(6) if wrench_fn is None else wrench_fn(t, c, d, v)
        return np.concatenate([c @ v[:3], quat_rate(q, v[3:]), newton_euler_accel(theta, v, w, theta_inv)])

    return rhs
