import numpy as np
import pytest
from hypothesis import given, settings

from screwdyn.errors import NotOrthonormal, NotSkew
from screwdyn.spatial import (
    Kind,
    MotionTransform,
    ScrewElement,
    as_rotation,
    classify_screw,
    compose,
    cross_matrix,
    inverse,
    motion_group_element,
    motion_transform_rate,
    phi_matrix,
    reciprocal_product,
    shift_reduction_point,
    transform_screw,
    uncross,
    wrench_factorizations,
)
from screwdyn.rotations import rot_z

from conftest import random_rotation, random_transform, vectors


def test_cross_matrix_pattern():
    expected = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.array_equal(cross_matrix((1, 2, 3)), expected)
    assert np.array_equal(uncross(expected), [1, 2, 3])
    assert np.array_equal(cross_matrix((0, 0, 0)), np.zeros((3, 3)))
    assert np.array_equal(uncross(np.zeros((3, 3))), np.zeros(3))


@given(vectors, vectors)
def test_cross_matrix_matches_cross(f, g):
    assert np.allclose(cross_matrix(f) @ g, np.cross(f, g), atol=1e-12)
    assert np.allclose(uncross(cross_matrix(f)), f, atol=0)


def test_uncross_rejects_symmetric():
    with pytest.raises(NotSkew):
        uncross(np.eye(3))


def test_shift_example():
    s = ScrewElement((0, 0, 1), (0, 0, 0))
    out = shift_reduction_point(s, (1, 0, 0))
    assert np.allclose(out.moment, (0, -1, 0))
    assert np.array_equal(out.resultant, s.resultant)
    same = shift_reduction_point(s, (0, 0, 0))
    assert np.array_equal(same.moment, s.moment)


@given(vectors, vectors, vectors)
def test_shift_round_trip(r, m, ab):
    s = ScrewElement(r, m)
    back = shift_reduction_point(shift_reduction_point(s, ab), -ab)
    assert np.allclose(back.moment, m, atol=1e-10)


def test_classify_examples():
    assert classify_screw(ScrewElement((0, 0, 0), (1, 0, 0))) == "couple"
    assert classify_screw(ScrewElement((1, 0, 0), (2, 0, 0))) == "slider"
    assert classify_screw(ScrewElement((1, 0, 0), (0, 1, 0))) == "general"
    assert classify_screw(ScrewElement((0, 0, 0), (0, 0, 0))) == "slider"


@given(vectors, vectors)
def test_slider_stays_slider_along_axis(r, t):
    if np.linalg.norm(r) < 1e-3:
        return
    s = ScrewElement(r, np.zeros(3))
    moved = shift_reduction_point(s, np.dot(t, r) * r)
    assert classify_screw(moved, tol=1e-9) == "slider"


def test_group_element_special_cases():
    assert np.array_equal(motion_group_element(MotionTransform.identity()), np.eye(6))
    c = rot_z(0.7)
    l = motion_group_element(MotionTransform(c, np.zeros(3)))
    assert np.allclose(l[:3, :3], c) and np.allclose(l[3:, 3:], c)
    assert np.allclose(l[:3, 3:], 0) and np.allclose(l[3:, :3], 0)
    lt = motion_group_element(MotionTransform(np.eye(3), (1, 0, 0)), Kind.WRENCH)
    assert np.allclose(lt[3:, :3], cross_matrix((1, 0, 0)))
    assert np.allclose(lt[:3, 3:], 0)


def test_group_axioms(rng):
    for _ in range(200):
        a, b, c = (random_transform(rng) for _ in range(3))
        for kind in (Kind.WRENCH, Kind.TWIST):
            la, lb, lc = (motion_group_element(t, kind) for t in (a, b, c))
            assert np.allclose(motion_group_element(compose(a, b), kind), la @ lb, atol=1e-12)
            assert np.allclose(motion_group_element(inverse(a), kind), np.linalg.inv(la), atol=1e-12)
            assert np.allclose(motion_group_element(compose(compose(a, b), c), kind),
                               motion_group_element(compose(a, compose(b, c)), kind), atol=1e-12)
        ident = compose(a, inverse(a))
        assert np.allclose(ident.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(ident.displacement, 0, atol=1e-12)
        twice = inverse(inverse(a))
        assert np.allclose(twice.displacement, a.displacement, atol=1e-12)
        same = compose(a, MotionTransform.identity())
        assert np.allclose(same.rotation, a.rotation) and np.allclose(same.displacement, a.displacement)


def test_factorizations_agree(rng):
    for _ in range(100):
        t = random_transform(rng)
        left, right = wrench_factorizations(t)
        assert np.allclose(left, right, atol=1e-12)
        assert np.allclose(left, motion_group_element(t), atol=1e-12)


def test_transform_screw_cases(rng):
    w = rng.normal(size=6)
    assert np.allclose(transform_screw(MotionTransform.identity(), w), w)
    pure = transform_screw(MotionTransform(random_rotation(rng), np.zeros(3)), np.r_[1.0, 2.0, 3.0, 0, 0, 0])
    assert np.allclose(pure[3:], 0)
    # d points from the reference origin to the moving origin, i.e. a->b
    d = rng.normal(size=3)
    moved = transform_screw(MotionTransform(np.eye(3), d), w)
    shifted = shift_reduction_point(ScrewElement(w[:3], w[3:]), d)
    assert np.allclose(moved, shifted.as6(), atol=1e-12)


def test_reciprocal_product_is_frame_invariant(rng):
    for _ in range(50):
        t = random_transform(rng)
        w, v = rng.normal(size=6), rng.normal(size=6)
        p0 = reciprocal_product(w, v)
        p1 = reciprocal_product(transform_screw(t, w, Kind.WRENCH), transform_screw(t, v, Kind.TWIST))
        assert abs(p0 - p1) < 1e-12 * max(1.0, abs(p0))


def test_phi_matrix(rng):
    assert np.array_equal(phi_matrix(np.zeros(6)), np.zeros((6, 6)))
    e3 = cross_matrix((0, 0, 1))
    p = phi_matrix((0, 0, 0, 0, 0, 1))
    assert np.allclose(p[:3, :3], e3) and np.allclose(p[3:, 3:], e3) and np.allclose(p[3:, :3], 0)
    for _ in range(20):
        v = rng.normal(size=6)
        assert np.allclose(phi_matrix(v, "twist") + phi_matrix(v, "wrench").T, 0, atol=0)


def test_motion_transform_rate_fd(rng):
    assert np.array_equal(motion_transform_rate(MotionTransform.identity(), np.zeros(6)), np.zeros((6, 6)))
    from scipy.linalg import expm

    def pose(t, v, t0):
        # exact body-frame screw motion for constant quasi-velocity
        xi = np.zeros((4, 4))
        xi[:3, :3] = cross_matrix(v[3:])
        xi[:3, 3] = v[:3]
        g0 = np.eye(4)
        g0[:3, :3], g0[:3, 3] = t0.rotation, t0.displacement
        g = g0 @ expm(xi * t)
        return MotionTransform(g[:3, :3], g[:3, 3])

    for kind in (Kind.WRENCH, Kind.TWIST):
        t0, v = random_transform(rng), rng.normal(size=6)
        errs = []
        for h in (1e-3, 5e-4):
            fd = (motion_group_element(pose(h, v, t0), kind) - motion_group_element(pose(-h, v, t0), kind)) / (2 * h)
            errs.append(np.max(np.abs(fd - motion_transform_rate(t0, v, kind))))
        assert errs[1] < errs[0] / 3.5


def test_as_rotation_projects_small_drift():
    c = rot_z(0.3) + 1e-8
    out = as_rotation(c)
    assert np.allclose(out.T @ out, np.eye(3), atol=1e-14)
    with pytest.raises(NotOrthonormal):
        as_rotation(rot_z(0.3) + 1e-3)
    with pytest.raises(NotOrthonormal):
        as_rotation(np.diag([1.0, 1.0, -1.0]))


@settings(max_examples=50)
@given(vectors, vectors)
def test_transform_is_frozen(a, b):
    t = MotionTransform(np.eye(3), a)
    with pytest.raises(ValueError):
        t.displacement[0] = 1.0
