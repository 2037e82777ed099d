import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from screwdyn import points as pd
from screwdyn.errors import CoincidentPoints, RankDeficient, SingularGram
from screwdyn.integrators import integrate

from conftest import vectors


def test_two_body_forces():
    f = pd.gravity_forces([pd.MassPoint(1.0, (0, 0, 0)), pd.MassPoint(1.0, (1, 0, 0))], 1.0)
    assert np.allclose(f[0], (1, 0, 0)) and np.allclose(f[1], (-1, 0, 0))
    assert np.array_equal(pd.gravity_forces([pd.MassPoint(2.0, (1, 2, 3))], 1.0)[0], np.zeros(3))
    with pytest.raises(CoincidentPoints):
        pd.gravity_forces([pd.MassPoint(1.0, (0, 0, 0)), pd.MassPoint(1.0, (0, 0, 0))], 1.0)


def test_gravity_pairs_skew(rng):
    for _ in range(50):
        pos, m = rng.normal(size=(3, 3)), rng.uniform(0.1, 3, 3)
        f = pd.gravity_forces_array(pos, m, 1.3)
        assert np.max(np.abs(f.sum(axis=0))) < 1e-12
    pos, m = rng.normal(size=(2, 3)), np.array([1.5, 0.5])
    f = pd.gravity_forces_array(pos, m, 1.0)
    sep = pos[1] - pos[0]
    assert np.linalg.norm(np.cross(f[0], sep)) < 1e-12
    assert f[0] @ sep > 0  # attraction


def test_free_accel():
    p = pd.MassPoint(2.0, (0, 0, 0))
    assert np.array_equal(pd.free_accel(p, (0, 0, 0)), np.zeros(3))
    assert np.array_equal(pd.free_accel(p, (2, 0, 0)), (1, 0, 0))
    with pytest.raises(ValueError):
        pd.MassPoint(0.0, (0, 0, 0))


def test_kepler_circular_orbit():
    gamma, m, a = 1.0, np.array([1.0, 1.0]), 1.0
    w = math.sqrt(gamma * m.sum() / a**3)
    period = 2 * math.pi / w
    y0 = np.concatenate([[-0.5, 0, 0, 0.5, 0, 0], [0, -0.5 * w, 0, 0, 0.5 * w, 0]])

    def rhs(t, y):
        f = pd.gravity_forces_array(y[:6].reshape(2, 3), m, gamma)
        return np.concatenate([y[6:], (f / m[:, None]).reshape(6)])

    y1 = integrate(rhs, y0, 0.0, period, period / 2000)
    assert np.max(np.abs(y1 - y0)) < 1e-4


def test_projections_on_sphere(rng):
    s = pd.sphere()
    q_south = np.array([0.0, 0.3])  # r = (0, 0, -1), normal e3 up to sign
    pn = pd.normal_projection(s, np.array([1e-9, 0.3]))
    assert np.allclose(pn, np.diag([0, 0, 1]), atol=1e-8)
    for _ in range(50):
        q = np.array([rng.uniform(0.2, 2.9), rng.uniform(-3, 3)])
        pn = pd.normal_projection(s, q)
        assert np.allclose(pn @ pn, pn, atol=1e-10) and np.allclose(pn, pn.T, atol=1e-10)
        nu = pd.normal_basis(s, q)
        assert np.max(np.abs(pd.tangent_map(s, q) @ nu)) < 1e-10
        pt = pd.tangent_projection(s, q)
        assert np.allclose(pt @ pt, pt, atol=1e-10) and np.allclose(pt + pn, np.eye(3), atol=1e-10)
    with pytest.raises(RankDeficient):
        pd.tangent_map(s, q_south)


def test_circle_uniform_motion_and_centripetal():
    c = pd.circle(2.0)
    w, m = 3.0, 1.5
    for q in (0.0, 0.7, -2.0):
        assert np.allclose(pd.constrained_accel(c, [q], [w], np.zeros(3), m), 0, atol=1e-12)
        force = pd.constraint_force(c, [q], [w], np.zeros(3), m)
        v = 2.0 * w
        assert abs(np.linalg.norm(force) - m * v**2 / 2.0) < 1e-10
        r = c.embedding([q])
        assert np.allclose(force / np.linalg.norm(force), -r / np.linalg.norm(r), atol=1e-12)


def test_analytic_and_fd_curvature_agree(rng):
    for man in (pd.circle(1.3), pd.sphere(0.7)):
        for _ in range(10):
            q = rng.uniform(0.3, 2.5, man.dim_q)
            qd = rng.normal(size=man.dim_q)
            assert np.allclose(pd.curvature_matrix(man, q, qd), pd.curvature_matrix_fd(man, q, qd), atol=1e-7)


def test_line_and_plane():
    ln = pd.line(direction=(0, 1, 0))
    assert np.allclose(pd.constrained_accel(ln, [0.3], [1.0], (0, 4, 0), 2.0), [2.0])
    pl = pd.plane()
    f = np.array([0.2, -0.1, -3.0])
    c = pd.constraint_force(pl, [0.5, 0.5], [0.0, 0.0], f, 1.0)
    assert np.allclose(c, -pd.normal_projection(pl, [0.5, 0.5]) @ f)
    assert np.allclose(c, (0, 0, 3.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 2.9), st.floats(-3, 3), vectors, vectors)
def test_constraint_force_is_normal(th, ph, qd, f):
    s = pd.sphere(1.2)
    q = np.array([th, ph])
    c = pd.constraint_force(s, q, qd[:2], f, 0.8)
    pt = pd.tangent_projection(s, q)
    assert np.max(np.abs(pt @ c)) < 1e-10 * max(1.0, np.linalg.norm(c))
    assert np.allclose(pd.normal_projection(s, q) @ c, c, atol=1e-10 * max(1.0, np.linalg.norm(c)))


def test_spherical_pendulum_matches_reference():
    s, g, m = pd.sphere(1.0), 9.81, 1.0
    grav = np.array([0.0, 0.0, -g])

    def rhs(t, y):
        return np.concatenate([y[2:], pd.constrained_accel(s, y[:2], y[2:], m * grav, m)])

    y0 = np.array([1.0, 0.0, 0.0, 2.0])
    y1 = integrate(rhs, y0, 0.0, 1.0, 1e-3)

    # classical equations in (polar angle from -z, azimuth), solved independently
    def classical(t, y):
        th, ph, thd, phd = y
        return [thd, phd, math.sin(th) * math.cos(th) * phd**2 - g * math.sin(th),
                -2.0 * thd * phd * math.cos(th) / math.sin(th)]

    ref = solve_ivp(classical, (0, 1), y0, method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    assert np.max(np.abs(y1 - ref)) < 1e-6


def test_velocity_constraint_constant_speed(rng):
    sigma = lambda r, v, t: np.array([v @ v - 1.0])
    for _ in range(10):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        a = pd.velocity_constraint_accel(sigma, rng.normal(size=3), v)
        assert abs(a @ v) < 1e-8


def test_velocity_constraint_singular():
    with pytest.raises(SingularGram):
        pd.velocity_constraint_accel(lambda r, v, t: np.array([r @ r - 1.0]), (1, 0, 0), (0, 1, 0))


def test_velocity_constraint_affine(rng):
    for _ in range(20):
        a_r, a_v, b, c = rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), rng.normal(size=2), rng.normal()
        sigma = lambda r, v, t: a_r @ r + a_v @ v + b * t + c
        r, v, t = rng.normal(size=3), rng.normal(size=3), rng.normal()
        acc = pd.velocity_constraint_accel(sigma, r, v, t, jacobians=lambda r, v, t: (a_r, a_v, b))
        # d sigma/dt along (v, acc) vanishes
        assert np.max(np.abs(a_r @ v + a_v @ acc + b)) < 1e-10
        acc_fd = pd.velocity_constraint_accel(sigma, r, v, t)
        assert np.allclose(acc, acc_fd, atol=1e-6)
