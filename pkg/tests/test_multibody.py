import numpy as np
import pytest

from screwdyn import multibody as mb
from screwdyn.body import spatial_inertia
from screwdyn.errors import DegenerateSelection, QuaternionLagrange
from screwdyn.integrators import integrate
from screwdyn.models import branched_tree, double_pendulum, spatial_chain
from screwdyn.spatial import Kind, MotionTransform, motion_group_element, uncross

from conftest import random_rotation, random_transform
from oracles import double_pendulum_accel

G = np.array([0.0, -9.81, 0.0])
TREES = {
    "double": lambda: double_pendulum(1.2, 0.8, 1.0, 0.7),
    "chain3": lambda: spatial_chain(3),
    "branched": branched_tree,
    "float_euler": lambda: spatial_chain(3, root="free6", rotation="euler"),
    "float_fedorov": lambda: spatial_chain(2, root="free6", rotation="fedorov"),
}


def random_state(tree, rng, scale=1.0):
    q = tree.neutral_q() + 0.5 * rng.normal(size=tree.nq)
    for i, b in enumerate(tree.bodies):
        if b.joint.kind == "free6" and b.joint.rotation == "euler":
            s = tree.q_slices[i]
            q[s.start + 4] = np.clip(q[s.start + 4], -1.0, 1.0)  # keep away from gimbal lock
    q = tree.normalize(q)
    rates = scale * rng.normal(size=tree.nv)
    return q, rates


def test_relative_twist_transform(rng):
    assert np.array_equal(mb.relative_twist_transform(MotionTransform.identity()), np.eye(6))
    c = random_rotation(rng)
    blk = mb.relative_twist_transform(MotionTransform(c, np.zeros(3)))
    assert np.allclose(blk, np.block([[c, np.zeros((3, 3))], [np.zeros((3, 3)), c]]))
    for _ in range(20):
        t = random_transform(rng)
        assert np.allclose(mb.relative_twist_transform(t), motion_group_element(t, Kind.TWIST), atol=1e-12)


def test_joint_validation():
    with pytest.raises(ValueError):
        mb.Joint("revolute", (1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        mb.Joint("hinge", (1.0, 0.0, 0.0))
    th = np.eye(6)
    with pytest.raises(ValueError):
        mb.MultibodyTree([mb.Body("a", th, mb.Joint("fixed"), parent=0)])


@pytest.mark.parametrize("name", sorted(TREES))
def test_L_structure_and_A(name, rng):
    tree = TREES[name]()
    q, rates = random_state(tree, rng)
    s = mb.assemble_system(tree, q, rates)
    n = tree.n
    for p in range(n):
        assert np.allclose(s.L[6 * p:6 * p + 6, 6 * p:6 * p + 6], np.eye(6))
        assert np.all(s.L[6 * p:6 * p + 6, 6 * (p + 1):] == 0)
    assert np.allclose(s.A, s.A.T) and np.linalg.eigvalsh(s.A).min() > -1e-12
    assert np.allclose(mb.absolute_velocities_recursive(tree, q, rates), s.V_a, atol=1e-12)


def test_velocity_examples():
    tree = double_pendulum()
    assert np.array_equal(mb.absolute_velocities(tree, [0.3, 0.2], [0.0, 0.0]), np.zeros(12))
    single = mb.MultibodyTree([mb.Body("b", np.eye(6), mb.Joint("revolute", (0.0, 1.0, 0.0)))])
    assert np.allclose(mb.absolute_velocities(single, [0.4], [2.0]), (0, 0, 0, 0, 2.0, 0))


def _fd_body_twists(tree, q, rates, h):
    qdot = tree.qdot_from_rates(q, rates)
    plus, minus, mid = tree.world_poses(q + h * qdot), tree.world_poses(q - h * qdot), tree.world_poses(q)
    out = []
    for (cp, dp), (cm, dm), (c, _) in zip(plus, minus, mid):
        cdot, ddot = (cp - cm) / (2 * h), (dp - dm) / (2 * h)
        out.append(np.concatenate([c.T @ ddot, uncross(c.T @ cdot, tol=1e-4)]))
    return np.concatenate(out)


@pytest.mark.parametrize("name", ["chain3", "branched", "float_fedorov"])
def test_composition_rule_fd(name, rng):
    tree = TREES[name]()
    for _ in range(5):
        q, rates = random_state(tree, rng)
        v = mb.absolute_velocities(tree, q, rates)
        e1 = np.max(np.abs(_fd_body_twists(tree, q, rates, 1e-3) - v))
        e2 = np.max(np.abs(_fd_body_twists(tree, q, rates, 5e-4) - v))
        assert e2 < e1 / 3.5 or e2 < 1e-10
        assert np.max(np.abs(_fd_body_twists(tree, q, rates, 1e-5) - v)) < 1e-8


@pytest.mark.parametrize("name", sorted(TREES))
def test_Ldot_matches_fd(name, rng):
    tree = TREES[name]()
    q, rates = random_state(tree, rng)
    qdot = tree.qdot_from_rates(q, rates)
    s = mb.assemble_system(tree, q, rates)
    errs = []
    for h in (1e-3, 5e-4):
        lp = mb.assemble_system(tree, q + h * qdot, rates).L
        lm = mb.assemble_system(tree, q - h * qdot, rates).L
        errs.append(np.max(np.abs((lp - lm) / (2 * h) - s.Ldot)))
    assert errs[1] < errs[0] / 3.5 or errs[1] < 1e-10


@pytest.mark.parametrize("name", ["float_euler", "float_fedorov"])
def test_Mdot_matches_fd(name, rng):
    tree = TREES[name]()
    q, rates = random_state(tree, rng)
    qdot = tree.qdot_from_rates(q, rates)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (tree.motion_matrix(q + h * qdot) - tree.motion_matrix(q - h * qdot)) / (2 * h)
        errs.append(np.max(np.abs(fd - tree.motion_matrix_rate(q, qdot))))
    assert errs[1] < errs[0] / 3.5


def test_frozen_system_has_zero_accel():
    tree = spatial_chain(3)
    assert np.allclose(mb.forward_dynamics_newton_euler(tree, [0.1, 0.2, 0.3], np.zeros(3)), 0)


def test_double_pendulum_closed_form(rng):
    m1, m2, l1, l2 = 1.2, 0.8, 1.0, 0.7
    tree = double_pendulum(m1, m2, l1, l2)
    loads = mb.AppliedLoads(gravity=G)
    for _ in range(50):
        q, qd = rng.uniform(-3, 3, 2), rng.normal(size=2) * 2
        acc = mb.forward_dynamics_newton_euler(tree, q, qd, loads)
        assert np.allclose(acc, double_pendulum_accel(q, qd, m1, m2, l1, l2, 9.81), atol=1e-9)


@pytest.mark.parametrize("name", sorted(TREES))
def test_newton_euler_vs_lagrange(name, rng):
    tree = TREES[name]()
    loads = mb.AppliedLoads(gravity=G, world_wrenches={0: rng.normal(size=6)},
                            body_wrenches={tree.n - 1: rng.normal(size=6)},
                            joint_forces=rng.normal(size=tree.nv))
    for _ in range(10):
        q, rates = random_state(tree, rng)
        nu_dot = mb.forward_dynamics_newton_euler(tree, q, rates, loads)
        qdot = tree.qdot_from_rates(q, rates)
        lag = mb.lagrange_matrices(tree, q, qdot, loads)
        assert np.allclose(lag.A, lag.A.T, atol=1e-10)
        qdd = lag.accel(qdot)
        assert np.allclose(lag.A @ qdd + lag.B @ qdot, lag.F, atol=1e-9)
        assert np.allclose(qdd, mb.qddot_from_rates_accel(tree, q, qdot, nu_dot), atol=1e-9)


def test_single_free_body_fedorov_mass_matrix(rng):
    th = spatial_inertia(2.0, (0.1, 0.2, -0.1), np.diag([0.3, 0.4, 0.5]))
    tree = mb.MultibodyTree([mb.Body("b", th, mb.Joint("free6", rotation="fedorov"))])
    q, qd = rng.normal(size=6), rng.normal(size=6)
    m = tree.motion_matrix(q)
    assert np.allclose(mb.lagrange_matrices(tree, q, qd).A, m.T @ th @ m, atol=1e-12)


def test_single_free_body_matches_newton_euler(rng):
    from screwdyn.body import newton_euler_accel
    th = spatial_inertia(2.0, (0.1, 0.2, -0.1), np.diag([0.3, 0.4, 0.5]))
    tree = mb.MultibodyTree([mb.Body("b", th, mb.Joint("free6"))])
    q = tree.normalize(rng.normal(size=7))
    v, w = rng.normal(size=6), rng.normal(size=6)
    acc = mb.forward_dynamics_newton_euler(tree, q, v, mb.AppliedLoads(body_wrenches={0: w}))
    assert np.allclose(acc, newton_euler_accel(th, v, w), atol=1e-12)


def test_quaternion_lagrange_refused():
    tree = mb.MultibodyTree([mb.Body("b", np.eye(6), mb.Joint("free6"))])
    with pytest.raises(QuaternionLagrange):
        mb.lagrange_matrices(tree, tree.neutral_q(), np.zeros(7))


def test_reduce_identity(rng):
    tree = spatial_chain(3)
    q, qd = rng.normal(size=3), rng.normal(size=3)
    full = mb.lagrange_matrices(tree, q, qd)
    red = mb.reduce_coordinates(tree, np.eye(3), q, qd)
    assert np.allclose(red.A, full.A) and np.allclose(red.B, full.B) and np.allclose(red.F, full.F)
    with pytest.raises(DegenerateSelection):
        mb.reduce_coordinates(tree, np.array([[1.0, 1.0], [0, 0], [0, 0]]), [0, 0], [0, 0])


def test_reduce_matches_locked_joint(rng):
    # locking the last joint of a chain equals replacing it with a fixed joint
    tree = spatial_chain(3)
    locked_angle = 0.4
    last = tree.bodies[2]
    c, d = last.joint.relative_pose([locked_angle])
    fixed = mb.Joint("fixed", offset=MotionTransform(c, d))
    oracle = mb.MultibodyTree(list(tree.bodies[:2]) + [mb.Body(last.label, last.inertia, fixed, parent=1)])
    N = np.eye(3)[:, :2]
    loads = mb.AppliedLoads(gravity=G)
    for _ in range(10):
        qc, qdc = rng.normal(size=2), rng.normal(size=2)
        red = mb.reduce_coordinates(tree, N, qc, qdc, loads, q_offset=(0.0, 0.0, locked_angle))
        assert red.A.shape == (2, 2)
        expected = mb.forward_dynamics_newton_euler(oracle, qc, qdc, loads)
        assert np.allclose(red.accel(qdc), expected, atol=1e-9)


def test_work_energy_rate(rng):
    tree = branched_tree()
    loads = mb.AppliedLoads(gravity=G, world_wrenches={2: rng.normal(size=6)},
                            body_wrenches={3: rng.normal(size=6)}, joint_forces=rng.normal(size=tree.nv))
    for _ in range(10):
        q, rates = random_state(tree, rng)
        nu_dot = mb.forward_dynamics_newton_euler(tree, q, rates, loads)
        s = mb.assemble_system(tree, q, rates, loads)
        va_dot = s.L @ tree.E @ nu_dot + s.Ldot @ s.V_r
        dke = float(s.V_a @ tree.A @ va_dot)
        assert abs(dke - mb.applied_power(tree, q, rates, loads)) < 1e-8


def test_chain_energy_conservation():
    tree = spatial_chain(3)
    loads = mb.AppliedLoads(gravity=G)

    def energy(y):
        kin, pot = mb.body_energies(tree, y[:3], y[3:], G)
        return kin.sum() + pot.sum()

    y0 = np.array([0.3, -0.5, 0.8, 1.0, -0.5, 0.7])
    e0 = energy(y0)
    # the long t=5, h=1e-4 run lives in scripts/chain_energy.py; here check the drift shrinks at order 4
    drift = [abs(energy(integrate(mb.newton_euler_rhs(tree, loads), y0, 0.0, 1.0, h)) - e0) for h in (1e-3, 5e-4)]
    assert drift[1] < 1e-6
    assert drift[0] / drift[1] > 10


def test_lagrange_rhs_matches_newton_euler_rhs(rng):
    tree = TREES["float_euler"]()
    q, rates = random_state(tree, rng)
    qdot = tree.qdot_from_rates(q, rates)
    loads = mb.AppliedLoads(gravity=G)
    y_ne = integrate(mb.newton_euler_rhs(tree, loads), np.r_[q, rates], 0.0, 0.1, 1e-3)
    y_la = integrate(mb.lagrange_rhs(tree, loads), np.r_[q, qdot], 0.0, 0.1, 1e-3)
    assert np.allclose(y_ne[:tree.nq], y_la[:tree.nq], atol=1e-9)
