import numpy as np
import pytest
from hypothesis import strategies as st

from screwdyn import rotations as rp
from screwdyn.spatial import MotionTransform


def random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    return rp.rotation_from_quat(q / np.linalg.norm(q))


def random_transform(rng, scale=2.0) -> MotionTransform:
    return MotionTransform(random_rotation(rng), rng.uniform(-scale, scale, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=3, max_size=3).map(np.array)
unit_quats = (st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4)
              .map(np.array)
              .filter(lambda q: np.linalg.norm(q) > 0.1)
              .map(lambda q: q / np.linalg.norm(q)))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
