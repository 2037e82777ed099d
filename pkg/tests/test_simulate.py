import copy
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

from screwdyn import rotations as rp
from screwdyn.scenario import load_scenarios
from screwdyn.simulate import CSV_HEADER, format_csv, format_jsonl, parse_csv, run, run_many
from screwdyn.spatial import cross_matrix

def open_config(name):
    return (Path(__file__).resolve().parent.parent / "configs" / name).read_text()


FREE = {
    "schema": 1, "name": "free",
    "system": {"type": "rigid_body", "mass": 2.0, "com": [0.1, 0.0, -0.1], "inertia": [0.5, 0.7, 0.9],
               "position": [0.5, -0.2, 0.1], "orientation": {"euler": [0.3, -0.2, 0.6]}},
    "integrator": {"method": "rk4", "h": 0.001, "duration": 1.0, "output_every": 100},
}


def _scenario(d):
    return load_scenarios(json.dumps(d))[0]


def test_constant_twist_is_screw_motion():
    # spin about a principal axis through the centre of mass, translating along that axis
    d = copy.deepcopy(FREE)
    d["system"].update(com=[0, 0, 0], twist=[0.0, 0.0, 0.4, 0.0, 0.0, 1.5])
    res = run(_scenario(d))
    assert res.status == "ok"
    v = np.array(d["system"]["twist"], dtype=float)
    xi = np.zeros((4, 4))
    xi[:3, :3] = cross_matrix(v[3:])
    xi[:3, 3] = v[:3]
    g0 = np.eye(4)
    g0[:3, :3] = rp.euler_to_rotation(d["system"]["orientation"]["euler"])
    g0[:3, 3] = d["system"]["position"]
    for rec in res.records:
        g = g0 @ expm(xi * rec.t)
        assert np.allclose(rp.rotation_from_quat(rec.quat), g[:3, :3], atol=1e-10)
        assert np.allclose(rec.position, g[:3, 3], atol=1e-10)
        assert np.allclose(rec.linear + rec.angular, v, atol=1e-12)


@pytest.mark.parametrize("rotation", ["quat", "euler", "fedorov"])
def test_rotation_choices_agree(rotation):
    d = copy.deepcopy(FREE)
    d["system"]["twist"] = [0.1, 0.2, -0.1, 0.3, -0.5, 0.4]
    d["rotation"] = rotation
    res = run(_scenario(d))
    d["rotation"] = "quat"
    ref = run(_scenario(d))
    for a, b in zip(res.records, ref.records):
        assert np.allclose(rp.rotation_from_quat(a.quat), rp.rotation_from_quat(b.quat), atol=1e-9)
        assert np.allclose(a.position, b.position, atol=1e-9)


def _double_pendulum_end(h):
    d = json.loads(open_config("double_pendulum.json"))
    d["integrator"].update(h=h, duration=1.0, output_every=1)
    res = run(_scenario(d))
    return res.final_state


def test_double_pendulum_order_four():
    ys = [_double_pendulum_end(h) for h in (0.02, 0.01, 0.005)]
    ratio = np.linalg.norm(ys[0] - ys[1]) / np.linalg.norm(ys[1] - ys[2])
    assert 12 < ratio < 20


def test_spherical_pendulum_energy_and_residual():
    d = {"schema": 1, "name": "sp",
         "system": {"type": "points", "form": "generalized", "points": [
             {"mass": 0.5, "position": [0.6, 0.0, -0.8], "velocity": [0.0, 1.5, 0.0],
              "constraint": {"manifold": "sphere", "radius": 1.0}}]},
         "forces": {"gravity": [0, 0, -9.81]},
         "integrator": {"h": 0.002, "duration": 4.0, "output_every": 50}}
    res = run(_scenario(d))
    assert res.status == "ok"
    assert res.energy_drift < 1e-7
    assert res.max_constraint_residual < 1e-12


def test_cartesian_pendulum_residual():
    d = json.loads(open_config("pendulum.json"))
    d["integrator"].update(duration=3.0)
    res = run(_scenario(d))
    assert res.status == "ok" and res.max_constraint_residual < 1e-6


def test_project_constraints_flag():
    d = json.loads(open_config("pendulum.json"))
    d["integrator"].update(h=0.01, duration=3.0)
    loose = run(_scenario(d)).max_constraint_residual
    d["flags"] = {"project_constraints": True}
    tight = run(_scenario(d)).max_constraint_residual
    assert tight < 1e-12 < loose


def test_off_manifold_start_is_config_error():
    from screwdyn.errors import ConfigError
    d = json.loads(open_config("pendulum.json"))
    d["system"]["points"][0]["position"] = [0.0, 1.1, 0.0]
    with pytest.raises(ConfigError):
        run(_scenario(d))


def test_divergence_reported():
    res = run(load_scenarios(open_config("diverge.json"))[0])
    assert res.status == "diverged"
    assert "last finite time" in res.message
    assert all(math.isfinite(x) for r in res.records for x in r.row()[2:])


def test_gimbal_lock_fails_with_time():
    # constant pitch rate lands exactly on theta = pi/2 after five Euler steps
    d = copy.deepcopy(FREE)
    d["rotation"] = "euler"
    d["system"].update(com=[0, 0, 0], orientation={"euler": [0.0, math.pi / 2 - 0.05, 0.0]},
                       twist=[0, 0, 0, 0, 1.0, 0])
    d["integrator"].update(method="euler", h=0.01, duration=1.0)
    res = run(_scenario(d))
    assert res.status == "failed" and "GimbalLock" in res.message and "t=" in res.message
    assert res.steps == 5


def test_gimbal_lock_initial_orientation_rejected():
    from screwdyn.errors import ConfigError
    d = copy.deepcopy(FREE)
    d["rotation"] = "euler"
    d["system"]["orientation"] = {"euler": [0.0, math.pi / 2, 0.0]}
    with pytest.raises(ConfigError, match="system.orientation"):
        run(_scenario(d))


def test_batch_threads_match_serial():
    scenarios = load_scenarios(open_config("batch.json"))
    serial = [format_csv(r.records) for r in run_many(scenarios, threads=1)]
    threaded = [format_csv(r.records) for r in run_many(scenarios, threads=4)]
    assert serial == threaded


def test_outputs_and_determinism():
    s = _scenario(dict(FREE, integrator={"h": 0.01, "duration": 0.2, "output_every": 5}))
    a, b = run(s), run(s)
    text = format_csv(a.records)
    assert text == format_csv(b.records)
    assert text.split("\r\n")[0] == ",".join(CSV_HEADER)
    rows = parse_csv(text)
    assert len(rows) == len(a.records) and rows[0]["body"] == "body"
    lines = format_jsonl(a.records).splitlines()
    assert list(json.loads(lines[0])) == list(CSV_HEADER)
    times = [r.t for r in a.records]
    assert times == sorted(times)


def test_summary_keys():
    res = run(_scenario(dict(FREE, integrator={"h": 0.01, "duration": 0.05})))
    keys = [k for k, _ in res.summary()]
    assert {"energy_drift", "max_constraint_residual", "status"} <= set(keys)


