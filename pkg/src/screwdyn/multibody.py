"""Tree-structured multibody systems.

Bodies are numbered parent-before-child.  Each joint restricts the relative
twist of its body w.r.t. the parent to a motion subspace:

    V_rel = E @ rates            (quasi-velocity form, used by Newton-Euler)
    V_rel = M(q) @ qdot          (coordinate form, used by Lagrange)

Absolute twists follow from the relative ones through the lower
block-triangular matrix ``L`` of twist transforms, ``V_a = L V_r``.  The
dynamics are the stacked body equations ``A V_a_dot + B V_a = F_a``
projected onto the joint subspaces, which removes the (workless) joint
reactions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import rotations as rp
from .errors import DegenerateSelection, QuaternionLagrange, SingularMass
from .spatial import MotionTransform, cross_matrix, phi_matrix

COND_LIMIT = 1e12
JOINT_KINDS = ("revolute", "prismatic", "free6", "fixed")
FREE_PARAMS = ("quat", "euler", "fedorov")


def _twist_block(c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``[[C, d^x C], [0, C]]`` for the pose (C, d) of frame k in frame p."""
    out = np.zeros((6, 6))
    out[:3, :3] = c
    out[3:, 3:] = c
    out[:3, 3:] = cross_matrix(d) @ c
    return out


def _twist_block_inverse(c: np.ndarray, d: np.ndarray) -> np.ndarray:
    ct = c.T
    out = np.zeros((6, 6))
    out[:3, :3] = ct
    out[3:, 3:] = ct
    out[:3, 3:] = -ct @ cross_matrix(d)
    return out


def relative_twist_transform(pose: MotionTransform) -> np.ndarray:
    """Twist transform ``L^tw_{p,k}`` for ``pose`` = frame k expressed in frame p.

    Written as ``diag(C, C) @ [[I, d_k^x], [0, I]]`` with ``d_k`` the
    displacement in k-coordinates.
    """
    c = pose.rotation
    rot = np.zeros((6, 6))
    rot[:3, :3] = c
    rot[3:, 3:] = c
    shift = np.eye(6)
    shift[:3, 3:] = cross_matrix(pose.displacement_local)
    return rot @ shift


@dataclass(frozen=True)
class Joint:
    kind: str
    axis: Optional[np.ndarray] = None
    offset: MotionTransform = field(default_factory=MotionTransform.identity)
    rotation: str = "quat"

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ValueError(f"unknown joint kind {self.kind!r}")
        if self.kind in ("revolute", "prismatic"):
            if self.axis is None:
                raise ValueError(f"{self.kind} joint needs an axis")
            a = np.asarray(self.axis, dtype=float).reshape(3)
            if abs(np.linalg.norm(a) - 1.0) > 1e-12:
                raise ValueError(f"joint axis must be unit length, |a| = {np.linalg.norm(a)!r}")
            a.setflags(write=False)
            object.__setattr__(self, "axis", a)
        if self.kind == "free6" and self.rotation not in FREE_PARAMS:
            raise ValueError(f"free6 rotation must be one of {FREE_PARAMS}")

    @property
    def nq(self) -> int:
        if self.kind == "free6":
            return 7 if self.rotation == "quat" else 6
        return 0 if self.kind == "fixed" else 1

    @property
    def nv(self) -> int:
        return {"revolute": 1, "prismatic": 1, "free6": 6, "fixed": 0}[self.kind]

    def subspace(self) -> np.ndarray:
        """Constant 6 x nv matrix ``E`` with ``V_rel = E @ rates``."""
        if self.kind == "revolute":
            return np.concatenate([np.zeros(3), self.axis]).reshape(6, 1)
        if self.kind == "prismatic":
            return np.concatenate([self.axis, np.zeros(3)]).reshape(6, 1)
        if self.kind == "free6":
            return np.eye(6)
        return np.zeros((6, 0))

    def _free_rotation(self, lam) -> np.ndarray:
        if self.rotation == "quat":
            return rp.rotation_from_quat(lam / np.linalg.norm(lam))
        if self.rotation == "euler":
            return rp.euler_to_rotation(lam)
        return rp.rotation_from_fedorov(lam)

    def relative_pose(self, qj) -> tuple[np.ndarray, np.ndarray]:
        """``(C, d)`` of the child frame in the parent frame."""
        co, do = self.offset.rotation, self.offset.displacement
        if self.kind == "revolute":
            return co @ rp.axis_angle(self.axis, qj[0]), do.copy()
        if self.kind == "prismatic":
            return co.copy(), do + co @ (self.axis * qj[0])
        if self.kind == "free6":
            return co @ self._free_rotation(qj[3:]), do + co @ qj[:3]
        return co.copy(), do.copy()

    def qdot_from_rates(self, qj, rates) -> np.ndarray:
        if self.kind in ("revolute", "prismatic"):
            return np.array(rates, dtype=float)
        if self.kind == "fixed":
            return np.zeros(0)
        lam = qj[3:]
        c = self._free_rotation(lam)
        ddot = c @ rates[:3]
        if self.rotation == "quat":
            ldot = rp.quat_rate(lam, rates[3:])
        elif self.rotation == "euler":
            ldot = rp.euler_rate(lam, rates[3:])
        else:
            ldot = rp.fedorov_rate(lam, rates[3:])
        return np.concatenate([ddot, ldot])

    def motion_matrix(self, qj) -> np.ndarray:
        """``M_j(q)`` with ``V_rel = M_j @ qdot_j`` (6 x nq)."""
        if self.kind != "free6":
            return self.subspace()
        if self.rotation == "quat":
            raise QuaternionLagrange(
                "Lagrange form with quaternion coordinates has a singular mass matrix; "
                "use euler or fedorov coordinates")
        lam = qj[3:]
        c = self._free_rotation(lam)
        d = rp.euler_rate_matrix(lam).D if self.rotation == "euler" else rp.fedorov_rate_matrix(lam).D
        out = np.zeros((6, 6))
        out[:3, :3] = c.T
        out[3:, 3:] = d
        return out

    def motion_matrix_rate(self, qj, qdotj) -> np.ndarray:
        if self.kind != "free6":
            return np.zeros((6, self.nq))
        if self.rotation == "quat":
            raise QuaternionLagrange("no Lagrange form for quaternion coordinates")
        lam, ldot = qj[3:], qdotj[3:]
        c = self._free_rotation(lam)
        if self.rotation == "euler":
            d = rp.euler_rate_matrix(lam).D
            ddot = rp.euler_rate_matrix_derivative(lam, ldot)
        else:
            d = rp.fedorov_rate_matrix(lam).D
            ddot = rp.fedorov_rate_matrix_derivative(lam, ldot)
        omega = d @ ldot
        out = np.zeros((6, 6))
        out[:3, :3] = -cross_matrix(omega) @ c.T
        out[3:, 3:] = ddot
        return out

    def neutral(self) -> np.ndarray:
        if self.kind == "free6" and self.rotation == "quat":
            return np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        return np.zeros(self.nq)


@dataclass(frozen=True)
class Body:
    label: str
    inertia: np.ndarray
    joint: Joint
    parent: int = -1


class MultibodyTree:
    """Immutable parent-indexed body set; ``parent == -1`` means the fixed base."""

    def __init__(self, bodies: Sequence[Body]):
        bodies = tuple(bodies)
        for i, b in enumerate(bodies):
            if not -1 <= b.parent < i:
                raise ValueError(
                    f"body {i} ({b.label!r}) has parent {b.parent}; bodies must be listed parent-before-child")
            th = np.asarray(b.inertia, dtype=float)
            if th.shape != (6, 6) or np.max(np.abs(th - th.T)) > 1e-10 * max(1.0, np.max(np.abs(th))):
                raise ValueError(f"body {b.label!r}: spatial inertia must be a symmetric 6x6 matrix")
        self.bodies = bodies
        self.n = len(bodies)
        self.q_slices, self.v_slices = [], []
        iq = iv = 0
        for b in bodies:
            self.q_slices.append(slice(iq, iq + b.joint.nq))
            self.v_slices.append(slice(iv, iv + b.joint.nv))
            iq += b.joint.nq
            iv += b.joint.nv
        self.nq, self.nv = iq, iv
        self.paths = []
        for i, b in enumerate(bodies):
            path = [i]
            p = b.parent
            while p >= 0:
                path.append(p)
                p = bodies[p].parent
            self.paths.append(tuple(reversed(path)))
        self.E = np.zeros((6 * self.n, self.nv))
        for i, b in enumerate(bodies):
            self.E[6 * i:6 * i + 6, self.v_slices[i]] = b.joint.subspace()
        self.A = np.zeros((6 * self.n, 6 * self.n))
        for i, b in enumerate(bodies):
            self.A[6 * i:6 * i + 6, 6 * i:6 * i + 6] = b.inertia

    def labels(self) -> list[str]:
        return [b.label for b in self.bodies]

    def neutral_q(self) -> np.ndarray:
        return np.concatenate([b.joint.neutral() for b in self.bodies]) if self.n else np.zeros(0)

    def world_poses(self, q) -> list[tuple[np.ndarray, np.ndarray]]:
        q = np.asarray(q, dtype=float)
        poses = []
        for i, b in enumerate(self.bodies):
            c, d = b.joint.relative_pose(q[self.q_slices[i]])
            if b.parent >= 0:
                cp, dp = poses[b.parent]
                c, d = cp @ c, dp + cp @ d
            poses.append((c, d))
        return poses

    def qdot_from_rates(self, q, rates) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        rates = np.asarray(rates, dtype=float)
        return np.concatenate([
            b.joint.qdot_from_rates(q[self.q_slices[i]], rates[self.v_slices[i]])
            for i, b in enumerate(self.bodies)
        ]) if self.n else np.zeros(0)

    def motion_matrix(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        out = np.zeros((6 * self.n, self.nq))
        for i, b in enumerate(self.bodies):
            out[6 * i:6 * i + 6, self.q_slices[i]] = b.joint.motion_matrix(q[self.q_slices[i]])
        return out

    def motion_matrix_rate(self, q, qdot) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        out = np.zeros((6 * self.n, self.nq))
        for i, b in enumerate(self.bodies):
            sl = self.q_slices[i]
            out[6 * i:6 * i + 6, sl] = b.joint.motion_matrix_rate(q[sl], qdot[sl])
        return out

    def rates_from_qdot(self, q, qdot) -> np.ndarray:
        return self.E.T @ (self.motion_matrix(q) @ np.asarray(qdot, dtype=float))

    def normalize(self, q) -> np.ndarray:
        """Renormalize quaternion blocks of ``q``."""
        q = np.array(q, dtype=float)
        for i, b in enumerate(self.bodies):
            if b.joint.kind == "free6" and b.joint.rotation == "quat":
                s = self.q_slices[i]
                lam = q[s][3:]
                q[s.start + 3:s.stop] = lam / np.linalg.norm(lam)
        return q


@dataclass
class AppliedLoads:
    """External loads: uniform gravity, per-body wrenches and joint forces.

    ``world_wrenches`` are given at the world origin in world coordinates;
    ``body_wrenches`` in body coordinates about the body origin.  Keys are
    body indices.  ``joint_forces`` is dual to the joint rates.
    """

    gravity: Optional[np.ndarray] = None
    world_wrenches: dict = field(default_factory=dict)
    body_wrenches: dict = field(default_factory=dict)
    joint_forces: Optional[np.ndarray] = None


@dataclass
class SystemMatrices:
    A: np.ndarray
    B: np.ndarray
    L: np.ndarray
    Ldot: np.ndarray
    F_a: np.ndarray
    V_r: np.ndarray
    V_a: np.ndarray
    poses: list


def _L_matrix(tree: MultibodyTree, poses) -> tuple[np.ndarray, dict]:
    n = tree.n
    L = np.zeros((6 * n, 6 * n))
    rel = {}
    for p in range(n):
        cp, dp = poses[p]
        for k in tree.paths[p]:
            ck, dk = poses[k]
            c_pk = cp.T @ ck
            d_pk = cp.T @ (dk - dp)
            rel[p, k] = (c_pk, d_pk)
            L[6 * p:6 * p + 6, 6 * k:6 * k + 6] = _twist_block(c_pk, d_pk)
    return L, rel


def absolute_velocities(tree: MultibodyTree, q, rates) -> np.ndarray:
    """Stacked body twists ``V_a = L V_r`` (each in its own body frame)."""
    L, _ = _L_matrix(tree, tree.world_poses(q))
    return L @ (tree.E @ np.asarray(rates, dtype=float))


def absolute_velocities_recursive(tree: MultibodyTree, q, rates) -> np.ndarray:
    """Same as :func:`absolute_velocities` via ``V_p = L_{p,parent} V_parent + V_rel``."""
    q = np.asarray(q, dtype=float)
    poses = tree.world_poses(q)
    v_r = tree.E @ np.asarray(rates, dtype=float)
    v_a = np.zeros(6 * tree.n)
    for p, b in enumerate(tree.bodies):
        own = v_r[6 * p:6 * p + 6]
        if b.parent < 0:
            v_a[6 * p:6 * p + 6] = own
            continue
        cp, dp = poses[p]
        ck, dk = poses[b.parent]
        blk = _twist_block(cp.T @ ck, cp.T @ (dk - dp))
        v_a[6 * p:6 * p + 6] = blk @ v_a[6 * b.parent:6 * b.parent + 6] + own
    return v_a


def _applied_wrenches(tree: MultibodyTree, poses, loads: Optional[AppliedLoads]) -> np.ndarray:
    f = np.zeros(6 * tree.n)
    if loads is None:
        return f
    for p, b in enumerate(tree.bodies):
        c, d = poses[p]
        blk = f[6 * p:6 * p + 6]
        if loads.gravity is not None:
            gb = c.T @ np.asarray(loads.gravity, dtype=float)
            blk += b.inertia[:, :3] @ gb
        if p in loads.world_wrenches:
            w = np.asarray(loads.world_wrenches[p], dtype=float)
            blk[:3] += c.T @ w[:3]
            blk[3:] += c.T @ (w[3:] - np.cross(d, w[:3]))
        if p in loads.body_wrenches:
            blk += np.asarray(loads.body_wrenches[p], dtype=float)
    return f


def assemble_system(tree: MultibodyTree, q, rates, loads: Optional[AppliedLoads] = None) -> SystemMatrices:
    """Assemble ``A, B, L, L_dot, F_a`` at state ``(q, rates)``.

    ``L_dot`` is built blockwise: each block is ``L_{p,k} Phi^tw(V_{p,k})``
    with ``V_{p,k} = V_k - L_{k,p} V_p`` the twist of frame k relative to p.
    """
    poses = tree.world_poses(q)
    L, rel = _L_matrix(tree, poses)
    v_r = tree.E @ np.asarray(rates, dtype=float)
    v_a = L @ v_r
    n = tree.n
    Ldot = np.zeros_like(L)
    B = np.zeros_like(L)
    for p in range(n):
        vp = v_a[6 * p:6 * p + 6]
        B[6 * p:6 * p + 6, 6 * p:6 * p + 6] = phi_matrix(vp) @ tree.bodies[p].inertia
        for k in tree.paths[p]:
            if k == p:
                continue
            c_pk, d_pk = rel[p, k]
            v_pk = v_a[6 * k:6 * k + 6] - _twist_block_inverse(c_pk, d_pk) @ vp
            Ldot[6 * p:6 * p + 6, 6 * k:6 * k + 6] = (
                L[6 * p:6 * p + 6, 6 * k:6 * k + 6] @ phi_matrix(v_pk, "twist"))
    return SystemMatrices(tree.A, B, L, Ldot, _applied_wrenches(tree, poses, loads), v_r, v_a, poses)


def _solve_spd(h: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if h.size == 0:
        return np.zeros(0)
    c = np.linalg.cond(h)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularMass(f"{what} condition number {c:.3e} > {COND_LIMIT:.0e}")
    return np.linalg.solve(h, rhs)


def forward_dynamics_newton_euler(tree: MultibodyTree, q, rates, loads: Optional[AppliedLoads] = None) -> np.ndarray:
    """Joint quasi-accelerations from ``A L V_r_dot + (A L_dot + B L) V_r = F_a``.

    This is ``A V_a_dot + B V_a = F_a`` with ``V_a = L V_r``, projected with
    ``(L E)^T`` onto the joint motion subspaces.
    """
    s = assemble_system(tree, q, rates, loads)
    le = s.L @ tree.E
    h = le.T @ s.A @ le
    rhs = le.T @ (s.F_a - s.A @ (s.Ldot @ s.V_r) - s.B @ s.V_a)
    if loads is not None and loads.joint_forces is not None:
        rhs = rhs + np.asarray(loads.joint_forces, dtype=float)
    return _solve_spd(h, rhs, "joint-space mass matrix")


@dataclass
class LagrangeSystem:
    """``A q_dd + B q_d = F`` (script A, B, F)."""

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray

    def accel(self, qdot) -> np.ndarray:
        return _solve_spd(self.A, self.F - self.B @ np.asarray(qdot, dtype=float), "Lagrange mass matrix")


def lagrange_matrices(tree: MultibodyTree, q, qdot, loads: Optional[AppliedLoads] = None) -> LagrangeSystem:
    """Lagrange equations of the second kind in the canonical coordinates ``q``.

    ``A = (L M)^T A (L M)``, ``B = (L M)^T [A L M_dot + (A L_dot + B L) M]``,
    ``F = (L M)^T F_a``.
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    m = tree.motion_matrix(q)
    mdot = tree.motion_matrix_rate(q, qdot)
    rates = tree.E.T @ (m @ qdot)
    s = assemble_system(tree, q, rates, loads)
    lm = s.L @ m
    a = lm.T @ s.A @ lm
    b = lm.T @ (s.A @ s.L @ mdot + (s.A @ s.Ldot + s.B @ s.L) @ m)
    f = lm.T @ s.F_a
    if loads is not None and loads.joint_forces is not None:
        f = f + m.T @ tree.E @ np.asarray(loads.joint_forces, dtype=float)
    return LagrangeSystem(0.5 * (a + a.T), b, f)


def qddot_from_rates_accel(tree: MultibodyTree, q, qdot, rates_dot) -> np.ndarray:
    """Convert quasi-accelerations to coordinate accelerations: ``M q_dd = E nu_dot - M_dot q_d``."""
    m = tree.motion_matrix(q)
    mdot = tree.motion_matrix_rate(q, qdot)
    rhs = tree.E @ np.asarray(rates_dot, dtype=float) - mdot @ np.asarray(qdot, dtype=float)
    return np.linalg.lstsq(m, rhs, rcond=None)[0]


def reduce_coordinates(tree: MultibodyTree, N, q_c, qdot_c, loads: Optional[AppliedLoads] = None,
                       q_offset=None) -> LagrangeSystem:
    """Restrict the Lagrange system to ``q = N q_c (+ q_offset)``.

    ``N`` (nq x m) must have a well-conditioned ``N^T N``; the reduced
    matrices are ``N^T A N``, ``N^T B N`` and ``N^T F``.
    """
    N = np.asarray(N, dtype=float)
    if N.ndim != 2 or N.shape[0] != tree.nq or N.shape[1] > tree.nq:
        raise DegenerateSelection(f"selection matrix must be {tree.nq} x m with m <= {tree.nq}")
    c = np.linalg.cond(N.T @ N)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise DegenerateSelection(f"N^T N condition number {c:.3e} > {COND_LIMIT:.0e}")
    q = N @ np.asarray(q_c, dtype=float)
    if q_offset is not None:
        q = q + np.asarray(q_offset, dtype=float)
    qdot = N @ np.asarray(qdot_c, dtype=float)
    full = lagrange_matrices(tree, q, qdot, loads)
    return LagrangeSystem(N.T @ full.A @ N, N.T @ full.B @ N, N.T @ full.F)


def kinetic_energy(tree: MultibodyTree, q, rates) -> float:
    v = absolute_velocities(tree, q, rates)
    return 0.5 * float(v @ tree.A @ v)


def body_energies(tree: MultibodyTree, q, rates, gravity=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-body kinetic ``1/2 V^T Theta V`` and gravity potential ``-m g . x_com``."""
    poses = tree.world_poses(q)
    L, _ = _L_matrix(tree, poses)
    v = L @ (tree.E @ np.asarray(rates, dtype=float))
    kin = np.zeros(tree.n)
    pot = np.zeros(tree.n)
    for p, b in enumerate(tree.bodies):
        vp = v[6 * p:6 * p + 6]
        kin[p] = 0.5 * vp @ b.inertia @ vp
        if gravity is not None:
            m = b.inertia[0, 0]
            if m > 0:
                blk = b.inertia[3:, :3] / m
                com = np.array([blk[2, 1], blk[0, 2], blk[1, 0]])
                c, d = poses[p]
                pot[p] = -m * np.asarray(gravity, dtype=float) @ (d + c @ com)
    return kin, pot


def applied_power(tree: MultibodyTree, q, rates, loads: AppliedLoads) -> float:
    s = assemble_system(tree, q, rates, loads)
    power = float(s.V_a @ s.F_a)
    if loads.joint_forces is not None:
        power += float(np.asarray(loads.joint_forces) @ np.asarray(rates))
    return power


def newton_euler_rhs(tree: MultibodyTree, loads: Optional[AppliedLoads] = None):
    """ODE right-hand side for state ``(q, rates)``."""
    nq = tree.nq

    def rhs(t, y):
        q, rates = y[:nq], y[nq:]
        return np.concatenate([tree.qdot_from_rates(q, rates),
                               forward_dynamics_newton_euler(tree, q, rates, loads)])

    return rhs


def lagrange_rhs(tree: MultibodyTree, loads: Optional[AppliedLoads] = None):
    """ODE right-hand side for state ``(q, qdot)``."""
    nq = tree.nq

    def rhs(t, y):
        q, qdot = y[:nq], y[nq:]
        return np.concatenate([qdot, lagrange_matrices(tree, q, qdot, loads).accel(qdot)])

    return rhs
