"""Isotropic quasi-linear constitutive relations and stress-field operators.

Matrices act on ``d = 2`` or ``3`` dimensional vectors.  Two bases for the
3D-style relation ``T = -r0 E0 + r1 E1 + r2 E2 + r3 E3`` are supported:

* ``symskew``: ``E1 = tr(U) I``, ``E2 = sym U``, ``E3 = ant U``
* ``transpose``: ``E1 = tr(U) I``, ``E2 = U``,     ``E3 = U^T``

Grid fields are arrays of shape ``grid + (d, d)`` (matrices) or
``grid + (d,)`` (vectors) with ``len(grid) == d``.  Divergence is taken
row-wise: ``(Div T)_j = sum_k dT_jk / dx_k``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DegenerateCoeffs, DegenerateU, GridTooSmall, IncorrectContinuum

BASES = ("symskew", "transpose")
INVERT_TOL = 1e-12
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # the 2D rotation generator

Coeff = Union[float, Callable[[tuple], float]]


def sym(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u + np.swapaxes(u, -1, -2))


def ant(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u - np.swapaxes(u, -1, -2))


def invariants(u) -> tuple[float, float, float]:
    """Principal invariants ``(tr U, (tr^2 U - tr U^2) / 2, det U)``."""
    u = np.asarray(u, dtype=float)
    t = float(np.trace(u))
    return t, 0.5 * (t * t - float(np.trace(u @ u))), float(np.linalg.det(u))


# ---------------------------------------------------------------- strain


@dataclass(frozen=True)
class StrainState:
    Z: np.ndarray
    Zdot: np.ndarray


def strain_integrate(times: Sequence[float], gradients: Sequence) -> StrainState:
    """``Z(t) = I + int G dt`` by the trapezoid rule, with ``Z(t0) = I``.

    ``gradients[i]`` is the velocity gradient ``dv/dr`` at ``times[i]``.
    """
    t = np.asarray(times, dtype=float)
    g = np.asarray(gradients, dtype=float)
    if g.ndim != 3 or g.shape[0] != t.size or g.shape[1] != g.shape[2]:
        raise ValueError("need one square gradient matrix per time sample")
    if t.size and np.any(np.diff(t) <= 0):
        raise ValueError("time samples must be strictly increasing")
    eye = np.eye(g.shape[1])
    if t.size < 2:
        return StrainState(eye, g[-1].copy() if t.size else np.zeros_like(eye))
    dt = np.diff(t)[:, None, None]
    z = eye + np.sum(0.5 * dt * (g[1:] + g[:-1]), axis=0)
    return StrainState(z, g[-1].copy())


def _check_grid(shape: tuple, dim: int):
    if len(shape) < dim or any(n < 3 for n in shape[:dim]):
        raise GridTooSmall(f"grid shape {shape[:dim]} needs at least 3 samples along each of {dim} axes")


def _spacing(h, dim: int) -> list[float]:
    h = np.broadcast_to(np.asarray(h, dtype=float), (dim,))
    if np.any(h <= 0):
        raise ValueError("grid spacing must be positive")
    return [float(x) for x in h]


def _partials(field: np.ndarray, h, dim: int) -> np.ndarray:
    """Stack of partial derivatives, new last axis indexes the direction."""
    _check_grid(field.shape, dim)
    g = np.gradient(field, *_spacing(h, dim), axis=tuple(range(dim)), edge_order=2)
    if dim == 1:
        g = [g]
    return np.stack(g, axis=-1)


def velocity_gradient(v: np.ndarray, h) -> np.ndarray:
    """``G_ij = dv_i / dx_j`` for a vector field of shape ``grid + (d,)``."""
    v = np.asarray(v, dtype=float)
    return _partials(v, h, v.shape[-1])


# ---------------------------------------------------------------- algebra


def isotropic_basis(u, tag: str = "symskew") -> list[np.ndarray]:
    """``[E0, E1, E2, E3]`` for the chosen basis."""
    u = np.asarray(u, dtype=float)
    eye = np.eye(u.shape[-1])
    e1 = np.trace(u) * eye
    if tag == "symskew":
        return [eye, e1, sym(u), ant(u)]
    if tag == "transpose":
        return [eye, e1, u.copy(), u.T.copy()]
    raise ValueError(f"unknown basis tag {tag!r}; expected one of {BASES}")


@dataclass(frozen=True)
class RheologyCoeffs:
    """Rheological coefficients; each may be a constant or a function of ``invariants(U)``.

    ``r0`` is the Pascal pressure and enters as ``-r0 I``.
    """

    r0: Coeff = 0.0
    r1: Coeff = 0.0
    r2: Coeff = 0.0
    r3: Coeff = 0.0
    basis: str = "symskew"

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis tag {self.basis!r}; expected one of {BASES}")

    def values(self, u=None) -> tuple[float, float, float, float]:
        inv = invariants(u) if u is not None else None
        out = []
        for r in (self.r0, self.r1, self.r2, self.r3):
            if callable(r):
                if inv is None:
                    raise ValueError("invariant-dependent coefficients need U to evaluate")
                r = r(inv)
            out.append(float(r))
        return tuple(out)

    @property
    def constant(self) -> bool:
        return not any(callable(r) for r in (self.r0, self.r1, self.r2, self.r3))

    def as_sym_ant(self) -> "RheologyCoeffs":
        """Equivalent constant coefficients in the ``symskew`` basis.

        ``r2 U + r3 U^T = (r2 + r3) sym U + (r2 - r3) ant U``.
        """
        r0, r1, r2, r3 = self.values()
        if self.basis == "symskew":
            return self
        return RheologyCoeffs(r0, r1, r2 + r3, r2 - r3, "symskew")


def ideal_fluid(pressure: float) -> RheologyCoeffs:
    return RheologyCoeffs(pressure, 0.0, 0.0, 0.0)


def navier_stokes_lame(pressure: float, r1: float, r2: float) -> RheologyCoeffs:
    return RheologyCoeffs(pressure, r1, r2, 0.0)


def constitutive_apply(r: RheologyCoeffs, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    r0, r1, r2, r3 = r.values(u)
    e0, e1, e2, e3 = isotropic_basis(u, r.basis)
    return -r0 * e0 + r1 * e1 + r2 * e2 + r3 * e3


@dataclass(frozen=True)
class Coeffs2D:
    """Coefficients of the full 2D isotropic relation (``rt*`` are the tilde terms)."""

    r0: float = 0.0
    rt0: float = 0.0
    r1: float = 0.0
    rt1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    r4: float = 0.0
    r5: float = 0.0


def pfaffian_trace(u) -> float:
    """``pf U = tr(J U)`` with ``J`` the 2D rotation generator."""
    return float(np.trace(J2 @ np.asarray(u, dtype=float)))


def constitutive_apply_2d(c: Coeffs2D, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(2, 2)
    eye = np.eye(2)
    return (-c.r0 * eye + c.rt0 * J2 + c.r1 * np.trace(u) * eye + c.rt1 * pfaffian_trace(u) * J2
            + c.r2 * u + c.r3 * u.T + c.r4 * (J2 @ u) + c.r5 * (J2 @ u @ J2))


@dataclass(frozen=True)
class BasisReport:
    rank: int
    singular_values: np.ndarray
    residuals: dict  # E6..E9 -> least-squares residual norm
    coefficients: dict  # E6..E9 -> coordinates in (E2, E3, E4, E5)


def basis_matrices_2d(u) -> dict:
    u = np.asarray(u, dtype=float).reshape(2, 2)
    return {
        "E2": u, "E3": u.T, "E4": J2 @ u, "E5": J2 @ u.T,
        "E6": u @ J2, "E7": u.T @ J2, "E8": J2 @ u @ J2, "E9": J2 @ u.T @ J2,
    }


def basis_independence_2d(u, rtol: float = 1e-10) -> BasisReport:
    """Rank of ``{E2..E5}`` and the expansion of ``E6..E9`` in it."""
    e = basis_matrices_2d(u)
    basis = np.column_stack([e[k].ravel() for k in ("E2", "E3", "E4", "E5")])
    s = np.linalg.svd(basis, compute_uv=False)
    rank = int(np.sum(s > rtol * max(s[0], 1e-300)))
    if rank < 4:
        raise DegenerateU(
            f"E2..E5 have rank {rank} < 4 for this U (scalar, symmetric or rotation-like U is not generic)")
    res, coef = {}, {}
    for k in ("E6", "E7", "E8", "E9"):
        x = np.linalg.solve(basis, e[k].ravel())
        coef[k] = x
        res[k] = float(np.linalg.norm(basis @ x - e[k].ravel()))
    return BasisReport(rank, s, res, coef)


def _check_dim(dim: int):
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")


def constitutive_invert(r: RheologyCoeffs, t, dim: int = None) -> np.ndarray:
    """Solve ``T = f(U)`` for ``U`` (constant coefficients only).

    ``U = n0 I + n1 tr(T) I + n2 sym T + n3 ant T`` with ``tr I = dim``.
    Raises :class:`IncorrectContinuum` when ``(r1 dim + r2) r2 r3`` vanishes.
    """
    t = np.asarray(t, dtype=float)
    dim = t.shape[-1] if dim is None else dim
    _check_dim(dim)
    if t.shape != (dim, dim):
        raise ValueError(f"stress matrix must be {dim}x{dim}")
    if not r.constant:
        raise ValueError("inversion needs constant rheological coefficients")
    r0, r1, r2, r3 = r.as_sym_ant().values()
    a = r1 * dim + r2
    if abs(a * r2 * r3) <= INVERT_TOL:
        raise IncorrectContinuum(
            f"relation is not invertible: (r1*trI + r2)*r2*r3 = {a * r2 * r3!r} "
            f"(r1*trI + r2 = {a!r}, r2 = {r2!r}, r3 = {r3!r}); incorrect continuum")
    n0 = r0 / a
    n1 = -r1 / (r2 * a)
    n2 = 1.0 / r2
    n3 = 1.0 / r3
    eye = np.eye(dim)
    return n0 * eye + n1 * np.trace(t) * eye + n2 * sym(t) + n3 * ant(t)


@dataclass(frozen=True)
class Moduli:
    young: float
    shear: float
    poisson: float

    def identity_residual(self) -> float:
        """Relative residual of ``young = 2 shear (1 + poisson)``."""
        rhs = 2.0 * self.shear * (1.0 + self.poisson)
        return abs(self.young - rhs) / max(abs(self.young), abs(rhs), 1e-300)


def moduli(r: RheologyCoeffs, dim: int = 3) -> Moduli:
    """Young, shear and Poisson values from the coefficients as given (in their own basis)."""
    _check_dim(dim)
    _, r1, r2, _ = r.values()
    den = r1 * (dim - 1) + r2
    if den == 0.0 or r2 == 0.0:
        raise DegenerateCoeffs(f"moduli undefined: r1*(trI-1) + r2 = {den!r}, r2 = {r2!r}")
    nu = r1 / den
    mu = 0.5 * r2
    eps = r2 * (r1 * dim + r2) / den
    return Moduli(eps, mu, nu)


# ---------------------------------------------------------------- fields


def div_stress_field(t: np.ndarray, h) -> np.ndarray:
    """Row-wise divergence of a matrix field ``grid + (d, d)``."""
    t = np.asarray(t, dtype=float)
    dim = t.shape[-1]
    return np.einsum("...jkk->...j", _partials(t, h, dim))


def _coeff_field(c, shape: tuple) -> tuple[np.ndarray, bool]:
    a = np.asarray(c, dtype=float)
    if a.ndim == 0:
        return np.full(shape, float(a)), True
    if a.shape != shape:
        raise ValueError(f"coefficient field shape {a.shape} does not match grid {shape}")
    return a, False


def div_stress_termwise(u: np.ndarray, coeffs: Sequence, h, basis: str = "symskew") -> np.ndarray:
    """``Div T`` for ``T = -r0 I + r1 tr(U) I + r2 E2 + r3 E3`` assembled term by term.

    ``coeffs`` is ``(r0, r1, r2, r3)``, each a scalar or a field on the grid;
    gradient terms of constant coefficients are skipped.  With the ``symskew``
    basis::

        Div T = -grad r0 + tr U grad r1 + r1 grad tr U
                + r2 (Div U + Div U^T) / 2 + r3 (Div U - Div U^T) / 2
                + sym U grad r2 + ant U grad r3
    """
    u = np.asarray(u, dtype=float)
    dim = u.shape[-1]
    grid = u.shape[:dim]
    _check_grid(u.shape, dim)
    r0, r1, r2, r3 = (_coeff_field(c, grid) for c in coeffs)
    if basis == "transpose":
        # r2 U + r3 U^T = (r2 + r3) sym U + (r2 - r3) ant U
        const = r2[1] and r3[1]
        r2, r3 = (r2[0] + r3[0], const), (r2[0] - r3[0], const)
    elif basis != "symskew":
        raise ValueError(f"unknown basis tag {basis!r}")
    du = _partials(u, h, dim)  # du[..., j, i, k] = d U_ji / d x_k
    div_u = np.einsum("...jkk->...j", du)
    div_ut = np.einsum("...kjk->...j", du)
    tr_u = np.trace(u, axis1=-2, axis2=-1)
    grad_tr = np.einsum("...iik->...k", du)

    def grad(f):
        return _partials(f, h, dim)

    out = (r1[0][..., None] * grad_tr
           + 0.5 * r2[0][..., None] * (div_u + div_ut)
           + 0.5 * r3[0][..., None] * (div_u - div_ut))
    if not r0[1]:
        out = out - grad(r0[0])
    if not r1[1]:
        out = out + tr_u[..., None] * grad(r1[0])
    if not r2[1]:
        out = out + np.einsum("...ij,...j->...i", sym(u), grad(r2[0]))
    if not r3[1]:
        out = out + np.einsum("...ij,...j->...i", ant(u), grad(r3[0]))
    return out


def assemble_stress_field(u: np.ndarray, coeffs: Sequence, basis: str = "symskew") -> np.ndarray:
    """Pointwise ``T`` for coefficient scalars/fields (companion of :func:`div_stress_termwise`)."""
    u = np.asarray(u, dtype=float)
    dim = u.shape[-1]
    grid = u.shape[:dim]
    r0, r1, r2, r3 = (_coeff_field(c, grid)[0][..., None, None] for c in coeffs)
    eye = np.eye(dim)
    tr_u = np.trace(u, axis1=-2, axis2=-1)[..., None, None]
    ut = np.swapaxes(u, -1, -2)
    if basis == "symskew":
        e2, e3 = sym(u), ant(u)
    elif basis == "transpose":
        e2, e3 = u, ut
    else:
        raise ValueError(f"unknown basis tag {basis!r}")
    return -r0 * eye + r1 * tr_u * eye + r2 * e2 + r3 * e3


@dataclass(frozen=True)
class MomentumResidual:
    momentum: np.ndarray  # grid + (d,)
    continuity: np.ndarray  # grid


def momentum_residual(rho: Sequence[np.ndarray], v: Sequence[np.ndarray], stress: np.ndarray,
                      gravity, h, dt: float) -> MomentumResidual:
    """Pointwise residuals of the continuum equations of motion.

    ``rho`` and ``v`` are pairs of samples at ``t`` and ``t + dt``; ``stress``
    is taken at the mid-time.  The acceleration is the material derivative
    ``dv/dt + (grad v) v`` evaluated with mid-time averages.
    """
    rho0, rho1 = (np.asarray(x, dtype=float) for x in rho)
    v0, v1 = (np.asarray(x, dtype=float) for x in v)
    if dt <= 0:
        raise ValueError("timestep must be positive")
    dim = v0.shape[-1]
    rho_m = 0.5 * (rho0 + rho1)
    v_m = 0.5 * (v0 + v1)
    accel = (v1 - v0) / dt + np.einsum("...ij,...j->...i", velocity_gradient(v_m, h), v_m)
    g = np.broadcast_to(np.asarray(gravity, dtype=float), v_m.shape)
    mom = rho_m[..., None] * (accel - g) - div_stress_field(stress, h)
    flux = _partials(rho_m[..., None] * v_m, h, dim)
    cont = (rho1 - rho0) / dt + np.einsum("...kk->...", flux)
    return MomentumResidual(mom, cont)


# ---------------------------------------------------------------- CSV I/O


def read_matrix_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        m = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"matrix CSV must contain only numbers: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {m.shape}")
    return m


def format_matrix_csv(m: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(m):
        w.writerow(["%.17g" % (x + 0.0) for x in row])
    return buf.getvalue()


AXES = ("x", "y", "z")


@dataclass(frozen=True)
class GridField:
    """Matrix field on a rectangular lattice, read from long-format CSV."""

    axes: tuple  # coordinate arrays per axis
    values: np.ndarray  # grid + (d, d)
    prefix: str  # "T" or "U"


def read_field_csv(text: str) -> GridField:
    """Parse ``x,y[,z],P11,P12,...`` rows (``P`` is ``T`` or ``U``) into a grid field."""
    reader = csv.DictReader(io.StringIO(text))
    cols = reader.fieldnames or []
    dim = 3 if "z" in cols else 2
    prefix = "U" if "U11" in cols else "T"
    names = [f"{prefix}{i + 1}{j + 1}" for i in range(dim) for j in range(dim)]
    missing = [c for c in AXES[:dim] + tuple(names) if c not in cols]
    if missing:
        raise ValueError(f"field CSV missing columns: {', '.join(missing)}")
    rows = list(reader)
    coords = np.array([[float(r[a]) for a in AXES[:dim]] for r in rows])
    vals = np.array([[float(r[c]) for c in names] for r in rows])
    axes = tuple(np.unique(coords[:, k]) for k in range(dim))
    shape = tuple(a.size for a in axes)
    if int(np.prod(shape)) != len(rows):
        raise ValueError(f"field CSV is not a complete rectangular lattice ({len(rows)} rows for grid {shape})")
    idx = tuple(np.searchsorted(axes[k], coords[:, k]) for k in range(dim))
    grid = np.full(shape + (dim * dim,), np.nan)
    grid[idx] = vals
    if np.isnan(grid).any():
        raise ValueError("field CSV has duplicate or missing lattice points")
    return GridField(axes, grid.reshape(shape + (dim, dim)), prefix)


def format_vector_field_csv(axes: tuple, values: np.ndarray, prefix: str = "div") -> str:
    dim = len(axes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(AXES[:dim]) + [f"{prefix}{k + 1}" for k in range(dim)])
    for idx in np.ndindex(*values.shape[:dim]):
        w.writerow(["%.17g" % axes[k][idx[k]] for k in range(dim)] + ["%.17g" % (x + 0.0) for x in values[idx]])
    return buf.getvalue()
