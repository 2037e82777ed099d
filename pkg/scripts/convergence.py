"""Observed order of the RK4 integrator on the double-pendulum config.

Halves h repeatedly and reports the ratio of successive end-state differences,
which tends to 16 for a fourth-order method.
"""
import argparse
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from screwdyn.scenario import load_scenarios
from screwdyn.simulate import run

ROOT = Path(__file__).resolve().parent.parent


@dataclass
class Config:
    config: Path = ROOT / "configs" / "double_pendulum.json"
    duration: float = 2.0
    steps: list = field(default_factory=lambda: [0.04, 0.02, 0.01, 0.005, 0.0025])


def end_state(base: dict, h: float, duration: float) -> np.ndarray:
    d = json.loads(json.dumps(base))
    d["integrator"].update(h=h, duration=duration, output_every=10**9)
    return run(load_scenarios(json.dumps(d))[0]).final_state


def main(cfg: Config):
    base = json.loads(cfg.config.read_text())
    ys = [end_state(base, h, cfg.duration) for h in cfg.steps]
    diffs = [np.linalg.norm(a - b) for a, b in zip(ys, ys[1:])]
    print(f"{'h':>10} {'|y_h - y_h/2|':>16} {'ratio':>8} {'order':>6}")
    for i, (h, d) in enumerate(zip(cfg.steps, diffs)):
        if i == 0:
            print(f"{h:10.5f} {d:16.3e}")
        else:
            r = diffs[i - 1] / d
            print(f"{h:10.5f} {d:16.3e} {r:8.2f} {math.log2(r):6.2f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=Config.config)
    p.add_argument("--duration", type=float, default=Config.duration)
    a = p.parse_args()
    main(Config(config=a.config, duration=a.duration))
