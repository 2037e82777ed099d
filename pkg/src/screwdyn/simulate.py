"""Build scenario systems, integrate them and record trajectories."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import multibody as mb
from . import points as pt
from . import rotations as rp
from .body import checked_inverse, gravity_wrench, kinetic_energy, newton_euler_accel, spatial_inertia
from .errors import ConfigError, IntegrationFailure, NonFinite, ScrewDynError
from .integrators import STEPPERS
from .scenario import MultibodySystem, PointsSystem, RigidBodySystem, Scenario
from .spatial import MotionTransform

CSV_HEADER = ("t", "body", "qw", "qx", "qy", "qz", "dx", "dy", "dz",
              "vx", "vy", "vz", "wx", "wy", "wz", "e_kin", "e_pot")
ON_MANIFOLD_TOL = 1e-9


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    body: str
    quat: tuple
    position: tuple
    linear: tuple
    angular: tuple
    e_kin: float
    e_pot: float
    residual: float = 0.0

    def row(self) -> list:
        return [self.t, self.body, *self.quat, *self.position, *self.linear, *self.angular, self.e_kin, self.e_pot]


@dataclass
class Model:
    """A scenario compiled to a flat ODE plus observers."""

    y0: np.ndarray
    rhs: Callable
    observe: Callable  # (t, y) -> list[TrajectoryRecord]
    post_step: Optional[Callable] = None
    residual: Optional[Callable] = None  # y -> float


@dataclass
class SimResult:
    scenario: Scenario
    records: list
    status: str = "ok"
    steps: int = 0
    t_end: float = 0.0
    energy_initial: float = 0.0
    energy_final: float = 0.0
    energy_drift: float = 0.0
    max_constraint_residual: float = 0.0
    message: str = ""
    final_state: Optional[np.ndarray] = None
    exc: Optional[Exception] = None

    def summary(self) -> list[tuple[str, str]]:
        rel = self.energy_drift / abs(self.energy_initial) if self.energy_initial != 0.0 else self.energy_drift
        out = [
            ("scenario", self.scenario.name),
            ("status", self.status),
            ("system", self.scenario.system.type),
            ("method", self.scenario.method),
            ("h", "%.17g" % self.scenario.h),
            ("steps", str(self.steps)),
            ("t_end", "%.17g" % self.t_end),
            ("records", str(len(self.records))),
            ("energy_initial", "%.17g" % self.energy_initial),
            ("energy_final", "%.17g" % self.energy_final),
            ("energy_drift", "%.17g" % self.energy_drift),
            ("energy_drift_rel", "%.17g" % rel),
            ("max_constraint_residual", "%.17g" % self.max_constraint_residual),
        ]
        if self.message:
            out.append(("message", self.message))
        return out


def _quat_out(c: np.ndarray) -> tuple:
    return tuple(float(x) for x in rp.quat_from_rotation(c))


# ---------------------------------------------------------------- points


def _manifold(c) -> pt.ConstraintManifold:
    if c.manifold == "circle":
        return pt.circle(c.radius, c.center)
    if c.manifold == "sphere":
        return pt.sphere(c.radius, c.center)
    if c.manifold == "plane":
        return pt.plane(c.center, c.normal)
    return pt.line(c.center, c.direction)


def _build_points(s: Scenario) -> Model:
    sysm: PointsSystem = s.system
    n = len(sysm.points)
    masses = np.array([p.mass for p in sysm.points])
    manifolds = [None if p.constraint is None else _manifold(p.constraint) for p in sysm.points]
    g = np.asarray(s.forces.gravity, dtype=float)
    gamma = s.forces.gamma
    labels = sysm.labels()
    extra = np.zeros((n, 3))
    for w in s.forces.wrenches:
        if any(w.value[3:]):
            raise ConfigError(f"forces.wrenches: point {w.body!r} cannot take a moment")
        extra[labels.index(w.body)] += w.value[:3]
    generalized = sysm.form == "generalized"

    for i, (p, m) in enumerate(zip(sysm.points, manifolds)):
        if m is None:
            continue
        r = np.asarray(p.position, dtype=float)
        res = float(np.linalg.norm(m.residual(r)))
        if res > ON_MANIFOLD_TOL * max(1.0, float(np.linalg.norm(r))):
            raise ConfigError(f"system.points[{i}].position: not on the {m.name} constraint (residual {res:.3e})")
        q = m.chart(r)
        vn = pt.normal_projection(m, q) @ np.asarray(p.velocity, dtype=float)
        if np.linalg.norm(vn) > ON_MANIFOLD_TOL * max(1.0, float(np.linalg.norm(p.velocity))):
            raise ConfigError(f"system.points[{i}].velocity: has a component normal to the {m.name} constraint")

    sizes = [m.dim_q if (generalized and m is not None) else 3 for m in manifolds]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    npos = int(offs[-1])

    def unpack(y):
        r = np.empty((n, 3))
        v = np.empty((n, 3))
        for i, m in enumerate(manifolds):
            x = y[offs[i]:offs[i + 1]]
            xd = y[npos + offs[i]:npos + offs[i + 1]]
            if generalized and m is not None:
                r[i] = m.embedding(x)
                v[i] = m.tau(x) @ xd
            else:
                r[i] = x
                v[i] = xd
        return r, v

    def forces(r):
        f = masses[:, None] * g + extra
        if gamma > 0.0 and n > 1:
            f = f + pt.gravity_forces_array(r, masses, gamma)
        return f

    def rhs(t, y):
        r, v = unpack(y)
        f = forces(r)
        out = np.empty_like(y)
        out[:npos] = y[npos:]
        for i, m in enumerate(manifolds):
            sl = slice(npos + offs[i], npos + offs[i + 1])
            if m is None:
                out[sl] = f[i] / masses[i]
            elif generalized:
                out[sl] = pt.constrained_accel(m, y[offs[i]:offs[i + 1]], y[sl], f[i], masses[i])
            else:
                out[sl] = pt.cartesian_constrained_accel(m, r[i], v[i], f[i], masses[i])
        return out

    y0 = np.zeros(2 * npos)
    for i, (p, m) in enumerate(zip(sysm.points, manifolds)):
        if generalized and m is not None:
            q = m.chart(np.asarray(p.position, dtype=float))
            y0[offs[i]:offs[i + 1]] = q
            y0[npos + offs[i]:npos + offs[i + 1]] = pt.tangent_map(m, q) @ np.asarray(p.velocity, dtype=float)
        else:
            y0[offs[i]:offs[i + 1]] = p.position
            y0[npos + offs[i]:npos + offs[i + 1]] = p.velocity

    def residual(y):
        r, _ = unpack(y)
        worst = 0.0
        for i, m in enumerate(manifolds):
            if m is not None:
                worst = max(worst, float(np.linalg.norm(m.residual(r[i]))))
        return worst

    def observe(t, y):
        r, v = unpack(y)
        pot = -masses * (r @ g)
        if gamma > 0.0 and n > 1:
            pot = pot + pt.gravity_potential(r, masses, gamma)
        recs = []
        for i, p in enumerate(sysm.points):
            res = 0.0 if manifolds[i] is None else float(np.linalg.norm(manifolds[i].residual(r[i])))
            recs.append(TrajectoryRecord(t, p.label, (1.0, 0.0, 0.0, 0.0), tuple(r[i]), tuple(v[i]),
                                         (0.0, 0.0, 0.0), 0.5 * masses[i] * float(v[i] @ v[i]), float(pot[i]), res))
        return recs

    post = None
    if s.project_constraints and not generalized:
        def post(y):
            y = y.copy()
            for i, m in enumerate(manifolds):
                if m is None:
                    continue
                q = m.chart(y[offs[i]:offs[i] + 3])
                y[offs[i]:offs[i] + 3] = m.embedding(q)
                sl = slice(npos + offs[i], npos + offs[i] + 3)
                y[sl] = pt.tangent_projection(m, q) @ y[sl]
            return y

    has_constraints = any(m is not None for m in manifolds)
    return Model(y0, rhs, observe, post, residual if has_constraints else None)


# ---------------------------------------------------------------- rigid body


def _inertia_matrix(i) -> np.ndarray:
    return spatial_inertia(i.mass, i.com, np.array(i.tensor))


def _orientation_matrix(o) -> np.ndarray:
    return rp.to_matrix(o.kind, np.array(o.values))


def _build_rigid_body(s: Scenario) -> Model:
    b: RigidBodySystem = s.system
    if s.forces.gamma > 0.0:
        raise ConfigError("forces.gamma: N-body gravity applies to point systems only")
    theta = _inertia_matrix(b.inertia)
    try:
        theta_inv = checked_inverse(theta)
    except ScrewDynError as exc:
        raise ConfigError(f"system.inertia: {exc}") from None
    kind = s.rotation
    npar = rp.param_size(kind)
    g = np.asarray(s.forces.gravity, dtype=float)
    world_w = sum((np.array(w.value) for w in s.forces.wrenches if w.frame == "world"), np.zeros(6))
    body_w = sum((np.array(w.value) for w in s.forces.wrenches if w.frame == "body"), np.zeros(6))
    if s.forces.joint_forces is not None:
        raise ConfigError("forces.joint_forces: a single rigid body has no joints")
    try:
        c0 = _orientation_matrix(b.orientation)
        lam0 = rp.from_matrix(kind, c0)
    except ScrewDynError as exc:
        raise ConfigError(f"system.orientation: {exc}") from None
    com = np.asarray(b.inertia.com, dtype=float)

    def rot(lam):
        return rp.matrix_unchecked(kind, lam)

    def wrench(c, d):
        w = body_w + gravity_wrench(theta, c, g)
        if world_w.any():
            f = world_w[:3]
            w = w + np.concatenate([c.T @ f, c.T @ (world_w[3:] - np.cross(d, f))])
        return w

    def rhs(t, y):
        d, lam, v = y[:3], y[3:3 + npar], y[3 + npar:]
        c = rot(lam)
        return np.concatenate([c @ v[:3], rp.param_rate(kind, lam, v[3:]),
                               newton_euler_accel(theta, v, wrench(c, d), theta_inv)])

    def observe(t, y):
        d, lam, v = y[:3], y[3:3 + npar], y[3 + npar:]
        c = rot(lam)
        pot = -b.inertia.mass * float(g @ (d + c @ com))
        return [TrajectoryRecord(t, b.label, _quat_out(c), tuple(d), tuple(v[:3]), tuple(v[3:]),
                                 kinetic_energy(theta, v), pot)]

    post = None
    if kind == "quat" and s.renormalize_quaternions:
        def post(y):
            y = y.copy()
            y[3:7] /= np.linalg.norm(y[3:7])
            return y

    y0 = np.concatenate([b.position, lam0, b.twist])
    return Model(y0, rhs, observe, post)


# ---------------------------------------------------------------- multibody


def build_tree(s: Scenario) -> mb.MultibodyTree:
    sysm: MultibodySystem = s.system
    labels = sysm.labels()
    bodies = []
    for link in sysm.links:
        j = link.joint
        off = MotionTransform(_orientation_matrix(j.offset_orientation), np.array(j.offset_position))
        joint = mb.Joint(j.type, None if j.axis is None else np.array(j.axis), off, s.rotation)
        parent = -1 if link.parent is None else labels.index(link.parent)
        bodies.append(mb.Body(link.label, _inertia_matrix(link.inertia), joint, parent))
    return mb.MultibodyTree(bodies)


def _build_multibody(s: Scenario) -> Model:
    sysm: MultibodySystem = s.system
    if s.forces.gamma > 0.0:
        raise ConfigError("forces.gamma: N-body gravity applies to point systems only")
    tree = build_tree(s)
    labels = sysm.labels()
    q0, r0 = [], []
    for i, (link, body) in enumerate(zip(sysm.links, tree.bodies)):
        q = body.joint.neutral() if link.q is None else np.array(link.q)
        if q.size != body.joint.nq:
            raise ConfigError(f"system.bodies[{i}].q: {link.joint.type} joint with rotation {s.rotation!r} "
                              f"needs {body.joint.nq} coordinates, got {q.size}")
        if body.joint.kind == "free6" and s.rotation == "quat" and abs(np.linalg.norm(q[3:]) - 1.0) > 1e-6:
            raise ConfigError(f"system.bodies[{i}].q: quaternion part must have unit norm")
        rates = np.zeros(body.joint.nv) if link.rates is None else np.array(link.rates)
        if rates.size != body.joint.nv:
            raise ConfigError(f"system.bodies[{i}].rates: {link.joint.type} joint needs {body.joint.nv} rates, "
                              f"got {rates.size}")
        q0.append(q)
        r0.append(rates)
    q0 = np.concatenate(q0) if q0 else np.zeros(0)
    r0 = np.concatenate(r0) if r0 else np.zeros(0)
    loads = mb.AppliedLoads(gravity=np.array(s.forces.gravity))
    for w in s.forces.wrenches:
        target = loads.world_wrenches if w.frame == "world" else loads.body_wrenches
        k = labels.index(w.body)
        target[k] = target.get(k, np.zeros(6)) + np.array(w.value)
    if s.forces.joint_forces is not None:
        if len(s.forces.joint_forces) != tree.nv:
            raise ConfigError(f"forces.joint_forces: expected {tree.nv} values (one per joint rate), "
                              f"got {len(s.forces.joint_forces)}")
        loads.joint_forces = np.array(s.forces.joint_forces)
    nq = tree.nq
    lagrange = sysm.formulation == "lagrange"
    try:
        if lagrange:
            y0 = np.concatenate([q0, tree.qdot_from_rates(q0, r0)])
            rhs = mb.lagrange_rhs(tree, loads)
        else:
            y0 = np.concatenate([q0, r0])
            rhs = mb.newton_euler_rhs(tree, loads)
    except ScrewDynError as exc:
        raise ConfigError(f"system.bodies: {exc}") from None

    def rates_of(y):
        q, x = y[:nq], y[nq:]
        return q, (tree.rates_from_qdot(q, x) if lagrange else x)

    def observe(t, y):
        q, rates = rates_of(y)
        poses = tree.world_poses(q)
        v = mb.absolute_velocities(tree, q, rates)
        kin, pot = mb.body_energies(tree, q, rates, loads.gravity)
        recs = []
        for p, body in enumerate(tree.bodies):
            c, d = poses[p]
            vp = v[6 * p:6 * p + 6]
            recs.append(TrajectoryRecord(t, body.label, _quat_out(c), tuple(d), tuple(vp[:3]), tuple(vp[3:]),
                                         float(kin[p]), float(pot[p])))
        return recs

    post = None
    if s.renormalize_quaternions and any(b.joint.kind == "free6" for b in tree.bodies) and s.rotation == "quat":
        def post(y):
            return np.concatenate([tree.normalize(y[:nq]), y[nq:]])

    return Model(y0, rhs, observe, post)


def build_model(s: Scenario) -> Model:
    if isinstance(s.system, PointsSystem):
        return _build_points(s)
    if isinstance(s.system, RigidBodySystem):
        return _build_rigid_body(s)
    return _build_multibody(s)


# ---------------------------------------------------------------- running


def _finite(r: TrajectoryRecord) -> bool:
    return all(math.isfinite(x) for x in r.row() if not isinstance(x, str))


def _energy(recs) -> float:
    return float(sum(r.e_kin + r.e_pot for r in recs))


def run(s: Scenario) -> SimResult:
    """Integrate one scenario.  Config problems raise :class:`ConfigError`;
    numerical failures are reported through ``status`` (``diverged``/``failed``)."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _run(s, build_model(s))


def _run(s: Scenario, model: Model) -> SimResult:
    step = STEPPERS[s.method]
    n = s.steps
    y = model.y0.copy()
    records = model.observe(0.0, y)
    e0 = _energy(records)
    result = SimResult(s, records, energy_initial=e0, energy_final=e0)
    if model.residual is not None:
        result.max_constraint_residual = model.residual(y)
    drift = 0.0
    t = 0.0
    for i in range(1, n + 1):
        try:
            y_new = step(model.rhs, t, y, s.h)
            if model.post_step is not None:
                y_new = model.post_step(y_new)
        except ScrewDynError as exc:
            result.status = "failed"
            result.message = f"{type(exc).__name__} at t={t + s.h!r}: {exc}"
            result.exc = IntegrationFailure(result.message, t_last=t, cause=exc)
            break
        if not np.all(np.isfinite(y_new)):
            result.status = "diverged"
            result.message = f"non-finite state at t={t + s.h!r}; last finite time t={t!r}"
            result.exc = NonFinite(result.message, t_last=t, state_last=y)
            break
        if i % s.output_every == 0 or i == n:
            recs = model.observe(i * s.h, y_new)
            if not all(_finite(r) for r in recs):
                result.status = "diverged"
                result.message = f"non-finite energy at t={i * s.h!r}; last finite time t={t!r}"
                result.exc = NonFinite(result.message, t_last=t, state_last=y)
                break
        else:
            recs = None
        y = y_new
        t = i * s.h
        result.steps = i
        if model.residual is not None:
            result.max_constraint_residual = max(result.max_constraint_residual, model.residual(y))
        if recs is not None:
            records.extend(recs)
            e = _energy(recs)
            drift = max(drift, abs(e - e0))
            result.energy_final = e
    result.t_end = t
    result.energy_drift = drift
    result.final_state = y
    return result


def thread_count() -> int:
    raw = os.environ.get("SCREWDYN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SCREWDYN_THREADS must be a positive integer, got {raw!r}") from None


def run_many(scenarios: list, threads: Optional[int] = None) -> list:
    """Run independent scenarios, at most ``threads`` at a time; results keep input order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(scenarios) <= 1:
        return [run(s) for s in scenarios]
    with ThreadPoolExecutor(max_workers=min(threads, len(scenarios))) as pool:
        return list(pool.map(run, scenarios))


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    return x if isinstance(x, str) else "%.17g" % (x + 0.0)  # + 0.0 folds -0 into 0


def format_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # RFC 4180: CRLF line endings, minimal quoting
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(x) for x in r.row()])
    return buf.getvalue()


def format_jsonl(records) -> str:
    lines = []
    for r in records:
        obj = {}
        for k, v in zip(CSV_HEADER, r.row()):
            obj[k] = v if isinstance(v, str) else float(v) + 0.0
        lines.append(json.dumps(obj, allow_nan=True))
    return "".join(line + "\n" for line in lines)


def format_records(records, fmt: str) -> str:
    return format_csv(records) if fmt == "csv" else format_jsonl(records)


def parse_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: (v if k == "body" else float(v)) for k, v in row.items()} for row in rows]

