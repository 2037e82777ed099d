"""Free and constrained mass-point dynamics.

Constraints are ideal, scleronomic and holonomic.  A constraint manifold is
given by a chart ``r = embedding(q)`` with tangent basis ``tau = d eta/dq^T``
(columns) and optionally a level function ``sigma(r) = 0`` whose gradient
columns ``nu`` span the normal space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CoincidentPoints, RankDeficient, SingularGram

COND_LIMIT = 1e12


@dataclass(frozen=True)
class MassPoint:
    mass: float
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))


ForceField = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def uniform_gravity(g, mass: float) -> ForceField:
    g = np.asarray(g, dtype=float)
    return lambda t, r, v: mass * g


def gravity_forces(points: Sequence[MassPoint], gamma: float) -> list[np.ndarray]:
    """Mutual attraction ``gamma m_i m_j (r_j - r_i)/|r_j - r_i|^3`` summed over ``j``."""
    return list(gravity_forces_array(
        np.array([p.position for p in points]).reshape(-1, 3),
        np.array([p.mass for p in points], dtype=float),
        gamma,
    ))


def gravity_forces_array(positions: np.ndarray, masses: np.ndarray, gamma: float) -> np.ndarray:
    n = len(masses)
    out = np.zeros((n, 3))
    for i in range(n):
        for j in range(i + 1, n):
            sep = positions[j] - positions[i]
            dist = math.sqrt(sep @ sep)
            if dist < 1e-12:
                raise CoincidentPoints(f"points {i} and {j} coincide (distance {dist:.3e})")
            fij = gamma * masses[i] * masses[j] / dist**3 * sep
            out[i] += fij
            out[j] -= fij
    return out


def gravity_potential(positions: np.ndarray, masses: np.ndarray, gamma: float) -> np.ndarray:
    """Per-point share of the pair potential ``-gamma m_i m_j / r_ij`` (half each)."""
    n = len(masses)
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            e = -gamma * masses[i] * masses[j] / np.linalg.norm(positions[j] - positions[i])
            out[i] += 0.5 * e
            out[j] += 0.5 * e
    return out


def free_accel(p: MassPoint, f) -> np.ndarray:
    return np.asarray(f, dtype=float) / p.mass


# -- constraint manifolds ------------------------------------------------------

@dataclass(frozen=True)
class ConstraintManifold:
    embedding: Callable[[np.ndarray], np.ndarray]
    tangent_basis: Callable[[np.ndarray], np.ndarray]
    dim_q: int
    level_function: Optional[Callable[[np.ndarray], np.ndarray]] = None
    level_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chart: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    # (q, qdot) -> sum_k d(tau)/dq_k qdot_k; finite differences when absent
    tangent_rate: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def tau(self, q) -> np.ndarray:
        t = self.tangent_basis(q)
        if t.shape != (3, self.dim_q):
            t = np.asarray(t, dtype=float).reshape(3, self.dim_q)
        return t

    def residual(self, r) -> np.ndarray:
        if self.level_function is None:
            raise ValueError("manifold has no level function")
        return np.atleast_1d(np.asarray(self.level_function(np.asarray(r, float)), dtype=float))


def _gram_inverse(g: np.ndarray, what: str) -> np.ndarray:
    """Inverse of a symmetric Gram matrix after a condition-number check."""
    n = g.shape[0]
    if n == 1:
        if not g[0, 0] > 0.0:
            raise RankDeficient(f"{what} Gram matrix is singular")
        return np.array([[1.0 / g[0, 0]]])
    if n == 2:
        a, b, d = g[0, 0], g[0, 1], g[1, 1]
        det = a * d - b * b
        half_tr = 0.5 * (a + d)
        disc = math.sqrt(max(0.0, half_tr * half_tr - det))
        lo, hi = half_tr - disc, half_tr + disc
        if not lo > 0.0 or hi / lo > COND_LIMIT:
            raise RankDeficient(f"{what} Gram matrix condition number exceeds {COND_LIMIT:.0e}")
        return np.array([[d, -b], [-b, a]]) / det
    c = np.linalg.cond(g)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise RankDeficient(f"{what} Gram matrix condition number {c:.3e} > {COND_LIMIT:.0e}")
    return np.linalg.inv(g)


def tangent_map(m: ConstraintManifold, q) -> np.ndarray:
    """``(tau^T tau)^-1 tau^T``: extracts tangent coordinates (dim_q x 3)."""
    tau = m.tau(q)
    return _gram_inverse(tau.T @ tau, "tangent") @ tau.T


def tangent_projection(m: ConstraintManifold, q) -> np.ndarray:
    """3x3 orthogonal projector onto the tangent space."""
    return m.tau(q) @ tangent_map(m, q)


def _fd_jacobian(fun, x, step=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = 1e-6 * max(1.0, float(np.linalg.norm(x))) if step is None else step
    cols = []
    for i in range(x.size):
        dx = np.zeros_like(x)
        dx[i] = h
        cols.append((np.atleast_1d(fun(x + dx)) - np.atleast_1d(fun(x - dx))) / (2 * h))
    return np.column_stack(cols)


def normal_basis(m: ConstraintManifold, q) -> np.ndarray:
    """Columns spanning the normal space at ``q`` (3 x (3 - dim_q))."""
    r = np.asarray(m.embedding(np.atleast_1d(np.asarray(q, float))), dtype=float)
    if m.level_gradient is not None:
        nu = np.asarray(m.level_gradient(r), dtype=float).reshape(3, -1)
    elif m.level_function is not None:
        nu = _fd_jacobian(m.level_function, r).T
    else:
        u, _, _ = np.linalg.svd(m.tau(q))
        nu = u[:, m.dim_q:]
    return nu


def normal_projection(m: ConstraintManifold, q) -> np.ndarray:
    nu = normal_basis(m, q)
    return nu @ _gram_inverse(nu.T @ nu, "normal") @ nu.T


def curvature_matrix(m: ConstraintManifold, q, qdot) -> np.ndarray:
    """``(d tau/d q^T) qdot`` = sum_k d(tau)/dq_k qdot_k.

    Uses the manifold's analytic ``tangent_rate`` when present, otherwise
    central differences.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=float))
    if m.tangent_rate is not None:
        return np.asarray(m.tangent_rate(q, qdot), dtype=float).reshape(3, m.dim_q)
    return curvature_matrix_fd(m, q, qdot)


def curvature_matrix_fd(m: ConstraintManifold, q, qdot) -> np.ndarray:
    """Central-difference version of :func:`curvature_matrix`."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=float))
    h = 1e-6 * max(1.0, math.sqrt(float(q @ q)))
    out = np.zeros((3, m.dim_q))
    for k in range(m.dim_q):
        if qdot[k] == 0.0:
            continue
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        out += (m.tau(qp) - m.tau(qm)) * (qdot[k] / (2 * h))
    return out


def constrained_accel(m: ConstraintManifold, q, qdot, f, mass: float) -> np.ndarray:
    """Generalized acceleration ``q_dd = P_tau f/m - P_tau (dtau qdot) qdot``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=float))
    pt = tangent_map(m, q)
    curv = curvature_matrix(m, q, qdot) @ qdot
    return pt @ (np.asarray(f, dtype=float) / mass - curv)


def constraint_force(m: ConstraintManifold, q, qdot, f, mass: float) -> np.ndarray:
    """Reaction ``c = m P_nu (dtau qdot) qdot - P_nu f`` of the ideal constraint."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=float))
    pn = normal_projection(m, q)
    curv = curvature_matrix(m, q, qdot) @ qdot
    return mass * (pn @ curv) - pn @ np.asarray(f, dtype=float)


def cartesian_constrained_accel(m: ConstraintManifold, r, v, f, mass: float) -> np.ndarray:
    """Index-reduced Cartesian form: ``r_dd = (f + c)/m`` with ``c`` from the chart at ``r``.

    Used when integrating positions directly; the residual ``sigma(r)`` then
    drifts with integration error and is worth monitoring.
    """
    if m.chart is None:
        raise ValueError("manifold has no chart; cannot recover q from r")
    q = np.atleast_1d(m.chart(np.asarray(r, dtype=float)))
    qdot = tangent_map(m, q) @ np.asarray(v, dtype=float)
    c = constraint_force(m, q, qdot, f, mass)
    return (np.asarray(f, dtype=float) + c) / mass


def velocity_constraint_accel(sigma, r, v, t: float = 0.0, jacobians=None) -> np.ndarray:
    """Least-norm acceleration keeping ``sigma(r, v, t) = 0`` stationary.

    ``jacobians(r, v, t)`` may return ``(dsigma/dr, dsigma/dv, dsigma/dt)``;
    otherwise they are taken by central differences.
    """
    r = np.asarray(r, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    if jacobians is not None:
        s_r, s_v, s_t = (np.asarray(a, dtype=float) for a in jacobians(r, v, t))
        s_r = np.atleast_2d(s_r)
        s_v = np.atleast_2d(s_v)
        s_t = np.atleast_1d(s_t)
    else:
        s_r = _fd_jacobian(lambda x: sigma(x, v, t), r)
        s_v = _fd_jacobian(lambda x: sigma(r, x, t), v)
        s_t = _fd_jacobian(lambda x: sigma(r, v, x[0]), np.array([t]))[:, 0]
    gram = s_v @ s_v.T
    scale = max(1.0, float(np.max(np.abs(s_v)))) if s_v.size else 1.0
    c = np.linalg.cond(gram) if np.any(np.abs(gram) > 1e-14 * scale**2) else np.inf
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularGram(f"d sigma/d v^T has rank-deficient Gram matrix (cond {c:.3e})")
    return -s_v.T @ np.linalg.solve(gram, s_r @ v + s_t)


# -- built-in manifolds --------------------------------------------------------

def circle(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> ConstraintManifold:
    """Circle in the plane ``z = center_z``; ``q = (angle,)``."""
    c = np.asarray(center, dtype=float)
    R = float(radius)

    def emb(q):
        return c + R * np.array([math.cos(q[0]), math.sin(q[0]), 0.0])

    def tan(q):
        return R * np.array([[-math.sin(q[0])], [math.cos(q[0])], [0.0]])

    def level(r):
        d = r - c
        return np.array([math.hypot(d[0], d[1]) - R, d[2]])

    def grad(r):
        d = r - c
        rho = math.hypot(d[0], d[1])
        return np.array([[d[0] / rho, 0.0], [d[1] / rho, 0.0], [0.0, 1.0]])

    def chart(r):
        d = r - c
        return np.array([math.atan2(d[1], d[0])])

    def rate(q, qd):
        return -R * qd[0] * np.array([[math.cos(q[0])], [math.sin(q[0])], [0.0]])

    return ConstraintManifold(emb, tan, 1, level, grad, chart, name="circle", tangent_rate=rate)


def sphere(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> ConstraintManifold:
    """Sphere with ``q = (polar angle from -z, azimuth)``; singular at the poles."""
    c = np.asarray(center, dtype=float)
    R = float(radius)

    def emb(q):
        th, ph = q[0], q[1]
        st = math.sin(th)
        return c + R * np.array([st * math.cos(ph), st * math.sin(ph), -math.cos(th)])

    def tan(q):
        th, ph = q[0], q[1]
        st, ct, sp, cp = math.sin(th), math.cos(th), math.sin(ph), math.cos(ph)
        return R * np.array([[ct * cp, -st * sp], [ct * sp, st * cp], [st, 0.0]])

    def level(r):
        return np.array([np.linalg.norm(r - c) - R])

    def grad(r):
        d = r - c
        return (d / np.linalg.norm(d)).reshape(3, 1)

    def chart(r):
        d = (r - c) / np.linalg.norm(r - c)
        return np.array([math.acos(max(-1.0, min(1.0, -d[2]))), math.atan2(d[1], d[0])])

    def rate(q, qd):
        st, ct, sp, cp = math.sin(q[0]), math.cos(q[0]), math.sin(q[1]), math.cos(q[1])
        a, b = qd[0], qd[1]
        col1 = a * np.array([-st * cp, -st * sp, ct]) + b * np.array([-ct * sp, ct * cp, 0.0])
        col2 = a * np.array([-ct * sp, ct * cp, 0.0]) + b * np.array([-st * cp, -st * sp, 0.0])
        return R * np.column_stack([col1, col2])

    return ConstraintManifold(emb, tan, 2, level, grad, chart, name="sphere", tangent_rate=rate)


def _plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.eye(3)[int(np.argmin(np.abs(n)))]
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def plane(point=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)) -> ConstraintManifold:
    p0 = np.asarray(point, dtype=float)
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    u, w = _plane_basis(n)
    basis = np.column_stack([u, w])
    return ConstraintManifold(
        embedding=lambda q: p0 + basis @ q,
        tangent_basis=lambda q: basis,
        dim_q=2,
        level_function=lambda r: np.array([n @ (r - p0)]),
        level_gradient=lambda r: n.reshape(3, 1),
        chart=lambda r: basis.T @ (r - p0),
        name="plane",
        tangent_rate=lambda q, qd: np.zeros((3, 2)),
    )


def line(point=(0.0, 0.0, 0.0), direction=(1.0, 0.0, 0.0)) -> ConstraintManifold:
    p0 = np.asarray(point, dtype=float)
    a = np.asarray(direction, dtype=float)
    a = a / np.linalg.norm(a)
    u, w = _plane_basis(a)
    normals = np.column_stack([u, w])
    return ConstraintManifold(
        embedding=lambda q: p0 + a * q[0],
        tangent_basis=lambda q: a.reshape(3, 1),
        dim_q=1,
        level_function=lambda r: normals.T @ (r - p0),
        level_gradient=lambda r: normals,
        chart=lambda r: np.array([a @ (r - p0)]),
        name="line",
        tangent_rate=lambda q, qd: np.zeros((3, 1)),
    )
