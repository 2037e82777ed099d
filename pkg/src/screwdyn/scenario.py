"""Scenario configuration: JSON schema 1, parsed into frozen dataclasses.

Top level::

    {"schema": 1, "name": ..., "system": {...}, "forces": {...},
     "integrator": {"method": "rk4", "h": 1e-3, "duration": 1.0, "output_every": 1},
     "rotation": "quat",
     "flags": {"renormalize_quaternions": true, "project_constraints": false}}

or ``{"schema": 1, "scenarios": [<scenario>, ...]}`` for a batch.  See
README.md for the system and force sections.  Every parse error names the
offending field path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ConfigError

SCHEMA_VERSION = 1
METHODS = ("rk4", "euler")
ROTATIONS = ("quat", "euler", "fedorov")
ORIENTATION_KINDS = ("quat", "euler", "fedorov", "matrix")
MANIFOLDS = ("circle", "sphere", "plane", "line")
JOINT_TYPES = ("revolute", "prismatic", "free6", "fixed")
POINT_FORMS = ("cartesian", "generalized")
FORMULATIONS = ("newton_euler", "lagrange")


class _Node:
    """A JSON object plus its path, with typed accessors that report the path on error."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        self.data = data
        self.path = path
        self.used: set = set()

    def _p(self, key) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key) -> bool:
        return key in self.data

    def raw(self, key, default=None, required=False):
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(f"{self._p(key)}: missing required field")
            return default
        return self.data[key]

    def num(self, key, default=None, required=False, positive=False, nonneg=False) -> float:
        v = self.raw(key, default, required)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{self._p(key)}: expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise ConfigError(f"{self._p(key)}: must be > 0, got {v!r}")
        if nonneg and v < 0:
            raise ConfigError(f"{self._p(key)}: must be >= 0, got {v!r}")
        return float(v)

    def integer(self, key, default=None, required=False, minimum=None) -> int:
        v = self.raw(key, default, required)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._p(key)}: expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self._p(key)}: must be >= {minimum}, got {v!r}")
        return v

    def string(self, key, default=None, required=False, choices=None) -> str:
        v = self.raw(key, default, required)
        if not isinstance(v, str):
            raise ConfigError(f"{self._p(key)}: expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(f"{self._p(key)}: must be one of {', '.join(choices)}; got {v!r}")
        return v

    def boolean(self, key, default=False) -> bool:
        v = self.raw(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self._p(key)}: expected true or false, got {v!r}")
        return v

    def vector(self, key, n=None, default=None, required=False) -> tuple:
        v = self.raw(key, default, required)
        return _vector(v, self._p(key), n)

    def child(self, key, required=False) -> Optional["_Node"]:
        v = self.raw(key, None, required)
        return None if v is None else _Node(v, self._p(key))

    def children(self, key, required=False) -> list:
        v = self.raw(key, [], required)
        if not isinstance(v, list):
            raise ConfigError(f"{self._p(key)}: expected a list")
        return [_Node(x, f"{self._p(key)}[{i}]") for i, x in enumerate(v)]

    def done(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"{self._p(extra[0])}: unknown field")


def _vector(v, path, n=None) -> tuple:
    if not isinstance(v, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in v):
        raise ConfigError(f"{path}: expected a list of finite numbers, got {v!r}")
    if n is not None and len(v) != n:
        raise ConfigError(f"{path}: expected {n} numbers, got {len(v)}")
    return tuple(float(x) for x in v)


# ---------------------------------------------------------------- dataclasses


@dataclass(frozen=True)
class Orientation:
    kind: str = "quat"
    values: tuple = (1.0, 0.0, 0.0, 0.0)

    def to_dict(self):
        return {self.kind: list(self.values)}


@dataclass(frozen=True)
class Inertia:
    mass: float
    com: tuple = (0.0, 0.0, 0.0)
    tensor: tuple = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))

    def to_dict(self):
        return {"mass": self.mass, "com": list(self.com), "inertia": [list(r) for r in self.tensor]}


@dataclass(frozen=True)
class Constraint:
    manifold: str
    radius: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)
    direction: tuple = (1.0, 0.0, 0.0)

    def to_dict(self):
        d = {"manifold": self.manifold}
        if self.manifold in ("circle", "sphere"):
            d.update(radius=self.radius, center=list(self.center))
        elif self.manifold == "plane":
            d.update(point=list(self.center), normal=list(self.normal))
        else:
            d.update(point=list(self.center), direction=list(self.direction))
        return d


@dataclass(frozen=True)
class PointSpec:
    label: str
    mass: float
    position: tuple
    velocity: tuple = (0.0, 0.0, 0.0)
    constraint: Optional[Constraint] = None

    def to_dict(self):
        d = {"label": self.label, "mass": self.mass, "position": list(self.position),
             "velocity": list(self.velocity)}
        if self.constraint is not None:
            d["constraint"] = self.constraint.to_dict()
        return d


@dataclass(frozen=True)
class PointsSystem:
    points: tuple
    form: str = "cartesian"
    type: str = "points"

    def labels(self):
        return [p.label for p in self.points]

    def to_dict(self):
        return {"type": self.type, "form": self.form, "points": [p.to_dict() for p in self.points]}


@dataclass(frozen=True)
class RigidBodySystem:
    label: str
    inertia: Inertia
    position: tuple = (0.0, 0.0, 0.0)
    orientation: Orientation = field(default_factory=Orientation)
    twist: tuple = (0.0,) * 6
    type: str = "rigid_body"

    def labels(self):
        return [self.label]

    def to_dict(self):
        d = {"type": self.type, "label": self.label}
        d.update(self.inertia.to_dict())
        d.update(position=list(self.position), orientation=self.orientation.to_dict(), twist=list(self.twist))
        return d


@dataclass(frozen=True)
class JointSpec:
    type: str
    axis: Optional[tuple] = None
    offset_position: tuple = (0.0, 0.0, 0.0)
    offset_orientation: Orientation = field(default_factory=Orientation)

    def to_dict(self):
        d = {"type": self.type}
        if self.axis is not None:
            d["axis"] = list(self.axis)
        d["offset"] = {"position": list(self.offset_position), "orientation": self.offset_orientation.to_dict()}
        return d


@dataclass(frozen=True)
class LinkSpec:
    label: str
    parent: Optional[str]
    joint: JointSpec
    inertia: Inertia
    q: Optional[tuple] = None
    rates: Optional[tuple] = None

    def to_dict(self):
        d = {"label": self.label, "parent": self.parent, "joint": self.joint.to_dict()}
        d.update(self.inertia.to_dict())
        if self.q is not None:
            d["q"] = list(self.q)
        if self.rates is not None:
            d["rates"] = list(self.rates)
        return d


@dataclass(frozen=True)
class MultibodySystem:
    links: tuple
    formulation: str = "newton_euler"
    type: str = "multibody"

    def labels(self):
        return [link.label for link in self.links]

    def to_dict(self):
        return {"type": self.type, "formulation": self.formulation, "bodies": [b.to_dict() for b in self.links]}


@dataclass(frozen=True)
class WrenchSpec:
    body: str
    value: tuple
    frame: str = "world"

    def to_dict(self):
        return {"body": self.body, "frame": self.frame, "value": list(self.value)}


@dataclass(frozen=True)
class Forces:
    gravity: tuple = (0.0, 0.0, 0.0)
    gamma: float = 0.0
    wrenches: tuple = ()
    joint_forces: Optional[tuple] = None

    def to_dict(self):
        d = {"gravity": list(self.gravity), "gamma": self.gamma, "wrenches": [w.to_dict() for w in self.wrenches]}
        if self.joint_forces is not None:
            d["joint_forces"] = list(self.joint_forces)
        return d


@dataclass(frozen=True)
class Scenario:
    name: str
    system: Any
    forces: Forces = field(default_factory=Forces)
    method: str = "rk4"
    h: float = 1e-3
    duration: float = 1.0
    output_every: int = 1
    rotation: str = "quat"
    renormalize_quaternions: bool = True
    project_constraints: bool = False

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.h))

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "system": self.system.to_dict(),
            "forces": self.forces.to_dict(),
            "integrator": {"method": self.method, "h": self.h, "duration": self.duration,
                           "output_every": self.output_every},
            "rotation": self.rotation,
            "flags": {"renormalize_quaternions": self.renormalize_quaternions,
                      "project_constraints": self.project_constraints},
        }


# ---------------------------------------------------------------- parsing


def _orientation(node: _Node, key: str, default: Orientation) -> Orientation:
    o = node.child(key)
    if o is None:
        return default
    kinds = [k for k in o.data if k in ORIENTATION_KINDS]
    if len(kinds) != 1 or len(o.data) != 1:
        raise ConfigError(f"{o.path}: expected exactly one of {', '.join(ORIENTATION_KINDS)}")
    k = kinds[0]
    n = {"quat": 4, "euler": 3, "fedorov": 3, "matrix": 9}[k]
    vals = o.vector(k, n=n, required=True)
    if k == "quat" and abs(math.sqrt(sum(x * x for x in vals)) - 1.0) > 1e-6:
        raise ConfigError(f"{o.path}.quat: quaternion must have unit norm (within 1e-6)")
    return Orientation(k, vals)


def _inertia(node: _Node) -> Inertia:
    mass = node.num("mass", required=True, nonneg=True)
    com = node.vector("com", 3, default=[0.0, 0.0, 0.0])
    t = node.raw("inertia", [[0.0] * 3] * 3)
    if isinstance(t, list) and len(t) == 3 and all(isinstance(x, (int, float)) for x in t):
        rows = ((float(t[0]), 0.0, 0.0), (0.0, float(t[1]), 0.0), (0.0, 0.0, float(t[2])))
    else:
        if not isinstance(t, list) or len(t) != 3:
            raise ConfigError(f"{node._p('inertia')}: expected 3 diagonal values or a 3x3 matrix")
        rows = tuple(_vector(r, f"{node._p('inertia')}[{i}]", 3) for i, r in enumerate(t))
    for i in range(3):
        for j in range(3):
            if abs(rows[i][j] - rows[j][i]) > 1e-12 * max(1.0, abs(rows[i][j])):
                raise ConfigError(f"{node._p('inertia')}: inertia tensor must be symmetric")
    return Inertia(mass, com, rows)


def _constraint(node: Optional[_Node]) -> Optional[Constraint]:
    if node is None:
        return None
    m = node.string("manifold", required=True, choices=MANIFOLDS)
    if m in ("circle", "sphere"):
        c = Constraint(m, radius=node.num("radius", 1.0, positive=True),
                       center=node.vector("center", 3, default=[0.0, 0.0, 0.0]))
    elif m == "plane":
        c = Constraint(m, center=node.vector("point", 3, default=[0.0, 0.0, 0.0]),
                       normal=node.vector("normal", 3, default=[0.0, 0.0, 1.0]))
    else:
        c = Constraint(m, center=node.vector("point", 3, default=[0.0, 0.0, 0.0]),
                       direction=node.vector("direction", 3, default=[1.0, 0.0, 0.0]))
    node.done()
    return c


def _unique_labels(labels: list, path: str):
    seen = set()
    for i, lab in enumerate(labels):
        if lab in seen:
            raise ConfigError(f"{path}[{i}].label: duplicate label {lab!r}")
        seen.add(lab)


def _points_system(node: _Node) -> PointsSystem:
    pts = []
    items = node.children("points", required=True)
    if not items:
        raise ConfigError(f"{node._p('points')}: need at least one point")
    for i, p in enumerate(items):
        pts.append(PointSpec(
            label=p.string("label", f"p{i}"),
            mass=p.num("mass", required=True, positive=True),
            position=p.vector("position", 3, required=True),
            velocity=p.vector("velocity", 3, default=[0.0, 0.0, 0.0]),
            constraint=_constraint(p.child("constraint")),
        ))
        p.done()
    _unique_labels([p.label for p in pts], node._p("points"))
    return PointsSystem(tuple(pts), node.string("form", "cartesian", choices=POINT_FORMS))


def _rigid_body_system(node: _Node) -> RigidBodySystem:
    return RigidBodySystem(
        label=node.string("label", "body"),
        inertia=_inertia(node),
        position=node.vector("position", 3, default=[0.0, 0.0, 0.0]),
        orientation=_orientation(node, "orientation", Orientation()),
        twist=node.vector("twist", 6, default=[0.0] * 6),
    )


def _multibody_system(node: _Node) -> MultibodySystem:
    links = []
    items = node.children("bodies", required=True)
    if not items:
        raise ConfigError(f"{node._p('bodies')}: need at least one body")
    for i, b in enumerate(items):
        label = b.string("label", f"b{i}")
        parent = b.raw("parent", None)
        if parent is not None and not isinstance(parent, str):
            raise ConfigError(f"{b._p('parent')}: expected a body label or null")
        earlier = [link.label for link in links]
        if parent is not None and parent not in earlier:
            raise ConfigError(f"{b._p('parent')}: {parent!r} is not an earlier body (list parents before children)")
        j = b.child("joint", required=True)
        jtype = j.string("type", required=True, choices=JOINT_TYPES)
        axis = j.vector("axis", 3, required=True) if jtype in ("revolute", "prismatic") else None
        if axis is not None and abs(math.sqrt(sum(a * a for a in axis)) - 1.0) > 1e-12:
            raise ConfigError(f"{j._p('axis')}: joint axis must be unit length")
        off = j.child("offset")
        if off is not None:
            pos = off.vector("position", 3, default=[0.0, 0.0, 0.0])
            ori = _orientation(off, "orientation", Orientation())
            off.done()
        else:
            pos, ori = (0.0, 0.0, 0.0), Orientation()
        j.done()
        q = b.vector("q") if b.has("q") else None
        rates = b.vector("rates") if b.has("rates") else None
        links.append(LinkSpec(label, parent, JointSpec(jtype, axis, pos, ori), _inertia(b), q, rates))
        b.done()
    _unique_labels([link.label for link in links], node._p("bodies"))
    return MultibodySystem(tuple(links), node.string("formulation", "newton_euler", choices=FORMULATIONS))


def _forces(node: Optional[_Node], labels: list) -> Forces:
    if node is None:
        return Forces()
    ws = []
    for w in node.children("wrenches"):
        body = w.string("body", required=True)
        if body not in labels:
            raise ConfigError(f"{w._p('body')}: unknown body {body!r}")
        ws.append(WrenchSpec(body, w.vector("value", 6, required=True),
                             w.string("frame", "world", choices=("world", "body"))))
        w.done()
    jf = node.vector("joint_forces") if node.has("joint_forces") else None
    f = Forces(node.vector("gravity", 3, default=[0.0, 0.0, 0.0]),
               node.num("gamma", 0.0, nonneg=True), tuple(ws), jf)
    node.done()
    return f


def scenario_from_dict(data: dict, path: str = "", default_name: str = "scenario") -> Scenario:
    root = _Node(data, path)
    if root.has("schema"):
        schema = root.raw("schema")
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"{root._p('schema')}: unsupported schema {schema!r} (expected {SCHEMA_VERSION})")
    name = root.string("name", default_name)
    sysnode = root.child("system", required=True)
    stype = sysnode.string("type", required=True, choices=("points", "rigid_body", "multibody"))
    system = {"points": _points_system, "rigid_body": _rigid_body_system,
              "multibody": _multibody_system}[stype](sysnode)
    sysnode.done()
    forces = _forces(root.child("forces"), system.labels())
    integ = root.child("integrator", required=True)
    method = integ.string("method", "rk4", choices=METHODS)
    h = integ.num("h", required=True, positive=True)
    duration = integ.num("duration", required=True, positive=True)
    if duration < h:
        raise ConfigError(f"{integ._p('duration')}: duration {duration!r} is shorter than the step h = {h!r}")
    every = integ.integer("output_every", 1, minimum=1)
    integ.done()
    rotation = root.string("rotation", "quat", choices=ROTATIONS)
    flags = root.child("flags")
    renorm, project = True, False
    if flags is not None:
        renorm = flags.boolean("renormalize_quaternions", True)
        project = flags.boolean("project_constraints")
        flags.done()
    root.done()
    if isinstance(system, MultibodySystem) and system.formulation == "lagrange" and rotation == "quat" \
            and any(link.joint.type == "free6" for link in system.links):
        raise ConfigError(f"{root._p('rotation')}: the lagrange formulation needs euler or fedorov for free6 joints")
    return Scenario(name, system, forces, method, h, duration, every, rotation, renorm, project)


def load_scenarios(text: str, source: str = "<config>") -> list[Scenario]:
    """Parse a config document into one or more scenarios."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    if "scenarios" in data:
        extra = sorted(set(data) - {"schema", "scenarios"})
        if extra:
            raise ConfigError(f"{extra[0]}: unknown field next to 'scenarios'")
        if data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"schema: unsupported schema {data['schema']!r} (expected {SCHEMA_VERSION})")
        items = data["scenarios"]
        if not isinstance(items, list) or not items:
            raise ConfigError("scenarios: expected a non-empty list")
        out = [scenario_from_dict(s, f"scenarios[{i}]", f"scenario{i}") for i, s in enumerate(items)]
        names = [s.name for s in out]
        for i, n in enumerate(names):
            if names.index(n) != i:
                raise ConfigError(f"scenarios[{i}].name: duplicate scenario name {n!r}")
        return out
    if "schema" not in data:
        raise ConfigError("schema: missing required field")
    return [scenario_from_dict(data)]


def dump_scenario(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2, sort_keys=False) + "\n"
