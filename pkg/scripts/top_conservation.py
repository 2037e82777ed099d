"""Invariant drift of a torque-free asymmetric top versus step size."""
import argparse
from dataclasses import dataclass

import numpy as np

from screwdyn import body as bd
from screwdyn import rotations as rp
from screwdyn.integrators import integrate
from screwdyn.spatial import MotionTransform


@dataclass
class Config:
    t: float = 1.0
    principal: tuple = (1.0, 2.0, 3.0)
    omega0: tuple = (0.3, 1.0, 0.2)
    steps: tuple = (1e-2, 1e-3, 1e-4)


def main(cfg: Config):
    theta = bd.spatial_inertia(1.0, (0, 0, 0), np.diag(cfg.principal))
    v0 = np.r_[0.0, 0.0, 0.0, cfg.omega0]
    e0 = bd.kinetic_energy(theta, v0)
    m0 = bd.spatial_momentum_world(theta, MotionTransform.identity(), v0)
    print(f"{'h':>8} {'energy':>10} {'|L_body|':>10} {'world momentum':>15}")
    for h in cfg.steps:
        drift = np.zeros(3)

        def watch(i, t, y):
            v = y[7:]
            pose = MotionTransform(rp.rotation_from_quat(y[3:7] / np.linalg.norm(y[3:7])), y[:3])
            drift[:] = np.maximum(drift, [
                abs(bd.kinetic_energy(theta, v) - e0),
                abs(np.linalg.norm((theta @ v)[3:]) - np.linalg.norm(m0[3:])),
                np.abs(bd.spatial_momentum_world(theta, pose, v) - m0).max()])

        integrate(bd.free_body_rhs(theta), np.r_[np.zeros(3), 1.0, 0, 0, 0, v0], 0.0, cfg.t, h, callback=watch)
        print(f"{h:8.0e} {drift[0]:10.2e} {drift[1]:10.2e} {drift[2]:15.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t", type=float, default=Config.t)
    main(Config(t=p.parse_args().t))
