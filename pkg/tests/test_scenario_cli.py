import json
import math
import time

import numpy as np
import pytest

from conftest import CA_FIELD, CA_MU
from qsteer.cli import main, simulate, synthesize
from qsteer.errors import ScenarioError
from qsteer.propagator import HBAR
from qsteer.scenario import (
    ca_scenario,
    complex_matrix_to_json,
    load_json,
    load_scenario,
    parse_schedule,
    parse_scenario,
    read_trajectory_csv,
    save_scenario,
    schedule_to_json,
    trajectory_columns,
)


def scenario_doc(**kw):
    doc = {
        "name": "toy",
        "system": {"energies": [0.0, 1.0, 2.7],
                   "einstein": [[0, 1.0, 0.4], [0, 0, 0.7], [0, 0, 0]],
                   "dipole": [[0, 1.0, 0.2], [0, 0, 0.5], [0, 0, 0]]},
        "initial_state": complex_matrix_to_json(np.diag([0.2, 0.3, 0.5])),
        "target_state": complex_matrix_to_json(np.diag([0.5, 0.3, 0.2])),
    }
    doc.update(kw)
    return doc


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return str(p)


def test_scenario_round_trip(tmp_path):
    s = ca_scenario()
    save_scenario(s, tmp_path / "ca.json")
    assert load_scenario(tmp_path / "ca.json").same_as(s)
    t = parse_scenario(scenario_doc())
    assert parse_scenario(json.loads(json.dumps(t.to_json()))).same_as(t)


@pytest.mark.parametrize("edit, path", [
    (lambda d: d["system"].pop("einstein"), "system.einstein"),
    (lambda d: d["system"]["energies"].__setitem__(1, "x"), "system.energies[1]"),
    (lambda d: d.__setitem__("mode", "fast"), "mode"),
    (lambda d: d.__setitem__("epsilon", 2.0), "epsilon"),
    (lambda d: d.__setitem__("target_state", complex_matrix_to_json(np.diag([1.2, -0.1, -0.1]))),
     "target_state"),
    (lambda d: d.__setitem__("pulse", {"steps_per_period": 5}), "pulse.steps_per_period"),
    (lambda d: d.__setitem__("mode", "physical"), "mode"),
    (lambda d: d["system"]["einstein"][1].__setitem__(1, 0.3), "system"),
])
def test_scenario_errors_name_the_field(edit, path):
    doc = scenario_doc()
    edit(doc)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(doc)
    assert info.value.path == path


def test_schedule_round_trip(tmp_path):
    s = ca_scenario()
    sched = synthesize(s)
    doc = json.loads(json.dumps(schedule_to_json(sched, 2)))
    back = parse_schedule(doc, 2)
    assert [type(x) for x in back.segments] == [type(x) for x in sched.segments]
    assert back.segments[1].pulse == sched.segments[1].pulse
    assert back.segments[0].duration == sched.segments[0].duration
    assert doc["segments"][0]["occupation_labels"] == {"n_12": 0.5}


def test_cli_pipeline(tmp_path, capsys):
    scen = write(tmp_path, "s.json", scenario_doc())
    sched = str(tmp_path / "sched.json")
    assert main(["synthesize", "--scenario", scen, "--out", sched]) == 0
    occ = load_json(sched)["segments"][0]["occupation_labels"]
    p = [0.5, 0.3, 0.2]
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        assert occ[f"n_{i + 1}{j + 1}"] == pytest.approx(p[j] / (p[i] - p[j]), rel=1e-12)

    prefix = str(tmp_path / "run")
    assert main(["simulate", "--scenario", scen, "--schedule", sched,
                 "--out-prefix", prefix, "--samples", "40"]) == 0
    data = read_trajectory_csv(prefix + ".csv")
    assert data["columns"] == trajectory_columns(3)
    assert np.all(np.diff(data["t_s"]) > 0)
    assert np.all(np.diff(data["seg_index"]) >= 0)
    assert data["dist_target"][-1] < 1e-6
    with open(prefix + ".csv", "rb") as fh:
        assert fh.readline().endswith(b"\r\n")
    summary = load_json(prefix + "_summary.json")
    assert summary["final_dist_target"] < 1e-6
    for k in range(2):
        assert read_trajectory_csv(f"{prefix}_seg{k}.csv")["columns"] == trajectory_columns(3)


def test_two_level_csv_has_bloch_columns():
    cols = trajectory_columns(2)
    assert cols[-3:] == ["bloch_x", "bloch_y", "bloch_z"]
    assert "re_rho_12" in cols and "pop_2" in cols


def test_zero_duration_schedule_reproduces_input(tmp_path):
    scen = write(tmp_path, "s.json", scenario_doc())
    sched = write(tmp_path, "z.json", {"format": "qsteer-schedule/1", "dim": 3, "segments": [
        {"type": "ideal_unitary", "unitary": complex_matrix_to_json(np.eye(3))}]})
    prefix = str(tmp_path / "z")
    assert main(["simulate", "--scenario", scen, "--schedule", sched, "--out-prefix", prefix]) == 0
    data = read_trajectory_csv(prefix + ".csv")
    assert np.allclose([data[f"pop_{k}"][-1] for k in (1, 2, 3)], [0.2, 0.3, 0.5], atol=1e-15)


def test_exit_code_invalid(tmp_path, capsys):
    doc = scenario_doc()
    doc["system"]["energies"] = [0.0, 1.0]
    assert main(["synthesize", "--scenario", write(tmp_path, "b.json", doc),
                 "--out", str(tmp_path / "o.json")]) == 2
    assert "system.einstein" in capsys.readouterr().err
    assert main(["verify", "--scenario", str(tmp_path / "missing.json")]) == 2


def test_exit_code_infeasible(tmp_path, capsys):
    doc = scenario_doc(target_state=complex_matrix_to_json(np.diag([0.4, 0.4, 0.2])))
    assert main(["synthesize", "--scenario", write(tmp_path, "d.json", doc),
                 "--out", str(tmp_path / "o.json")]) == 4
    assert "DegenerateSpectrum" in capsys.readouterr().err


def test_verify_ca_passes(tmp_path, capsys):
    path = tmp_path / "ca.json"
    save_scenario(ca_scenario(), path)
    assert main(["verify", "--scenario", str(path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS unitary_controllability" in out


def test_verify_flags_closed_system(tmp_path, capsys):
    doc = scenario_doc()
    doc["system"]["einstein"] = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    assert main(["verify", "--scenario", write(tmp_path, "c.json", doc)]) == 1
    assert "FAIL steady_state" in capsys.readouterr().out


def test_verify_flags_uncontrollable(tmp_path, capsys):
    doc = scenario_doc()
    doc["system"]["dipole"] = [[1.0, 0, 0], [0, 2.0, 0], [0, 0, 0.5]]
    assert main(["verify", "--scenario", write(tmp_path, "u.json", doc)]) == 1
    assert "not unitarily controllable" in capsys.readouterr().out


def test_example_ca(tmp_path, capsys):
    start = time.perf_counter()
    assert main(["example", "ca", "--out-prefix", str(tmp_path / "ca")]) == 0
    elapsed = time.perf_counter() - start
    summary = json.loads(capsys.readouterr().out)
    assert elapsed < 60
    assert summary["final_dist_target"] < 1e-3
    assert summary["gap"] == pytest.approx(4.4e8, rel=1e-12)
    assert load_scenario(tmp_path / "ca_scenario.json").same_as(ca_scenario())
    assert (tmp_path / "ca_seg1.csv").exists()


def test_example_ca_ideal(capsys):
    assert main(["example", "ca", "--mode", "ideal", "--samples", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["final_dist_target"] < 1e-8


def test_pulse_override_matches_rotation_formula():
    # a pi-pulse cut short at 1310 fs leaves rotation angle theta < pi; the
    # state lands at distance sqrt(a^2 + c^2) from the target with
    # a = (1 + cos theta) / 4 and c = |sin theta| / 4
    s = ca_scenario()
    s = type(s)(**{**s.__dict__, "pulse_duration": 1310e-15})
    traj, summary = simulate(s, synthesize(s), samples=20)
    theta = CA_MU * CA_FIELD / HBAR * 1310e-15
    a, c = (1 + math.cos(theta)) / 4, abs(math.sin(theta)) / 4
    assert summary["final_dist_target"] == pytest.approx(math.hypot(a, c), abs=1e-3)
    assert abs(traj.final.populations[1] - 0.75) == pytest.approx(a, abs=1e-3)
