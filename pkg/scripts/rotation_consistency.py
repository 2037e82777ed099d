"""Integrate one angular-velocity history with every rotation parameterization.

Prints the largest pairwise gap between the resulting rotation matrices for a
range of step sizes, plus the unrenormalized quaternion norm drift.
"""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from screwdyn import rotations as rp
from screwdyn.integrators import integrate


@dataclass
class Config:
    t: float = 1.0
    steps: tuple = (1e-1, 5e-2, 1e-2, 1e-3)


def omega(t):
    return np.array([math.sin(t), math.cos(t), 0.5])


KINDS = {
    "euler": (np.zeros(3), lambda t, y: rp.euler_rate(y, omega(t)), rp.euler_to_rotation),
    "matrix": (np.eye(3).ravel(), lambda t, y: rp.rotation_rate(y.reshape(3, 3), omega(t)).ravel(),
               lambda y: y.reshape(3, 3)),
    "fedorov": (np.zeros(3), lambda t, y: rp.fedorov_rate(y, omega(t)), rp.rotation_from_fedorov),
    "quat": (np.array([1.0, 0.0, 0.0, 0.0]), lambda t, y: rp.quat_rate(y, omega(t)), None),
}


def main(cfg: Config):
    print(f"{'h':>8} {'max pairwise gap':>18} {'|q|-1':>10}")
    for h in cfg.steps:
        mats, qnorm = {}, 0.0
        for name, (y0, f, to_c) in KINDS.items():
            y = integrate(f, y0, 0.0, cfg.t, h)
            if name == "quat":
                qnorm = abs(np.linalg.norm(y) - 1.0)
                to_c = lambda v: rp.rotation_from_quat(v / np.linalg.norm(v))  # noqa: E731
            mats[name] = to_c(y)
        names = sorted(mats)
        gap = max(np.abs(mats[a] - mats[b]).max() for i, a in enumerate(names) for b in names[i + 1:])
        print(f"{h:8.0e} {gap:18.3e} {qnorm:10.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t", type=float, default=Config.t)
    main(Config(t=p.parse_args().t))
