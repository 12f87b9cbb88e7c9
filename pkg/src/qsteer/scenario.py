"""Scenario, schedule and trajectory file formats.

Scenarios and schedules are UTF-8 JSON. Complex matrices are nested lists of
``[re, im]`` pairs. Floats are written in Python's shortest round-trip form,
so reading a file back reproduces every value bit for bit. Trajectories are
RFC 4180 CSV with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import QSteerError, ScenarioError
from .liouville import SpectralDensity
from .propagator import Trajectory
from .schedule import (
    CoherentPulse,
    ControlSchedule,
    IdealUnitary,
    IncoherentSoak,
    PulseParams,
)
from .states import DensityMatrix, SystemSpec, basis_state, validate_density

SCHEDULE_FORMAT = "qsteer-schedule/1"
MODES = ("ideal", "physical")
RATE_CONVENTIONS = ("literal", "lifetime")


# --- helpers ---------------------------------------------------------------


def _require(obj: Dict[str, Any], key: str, path: str):
    if not isinstance(obj, dict):
        raise ScenarioError(path, "expected an object")
    if key not in obj:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def _number(x, path: str, allow_none=False) -> Optional[float]:
    if x is None and allow_none:
        return None
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ScenarioError(path, f"expected a finite number, got {x!r}")
    return float(x)


def _real_table(raw, path: str, n: Optional[int] = None) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(path, "expected a non-empty list of rows")
    rows = []
    for r, row in enumerate(raw):
        if not isinstance(row, list):
            raise ScenarioError(f"{path}[{r}]", "expected a list")
        rows.append([_number(x, f"{path}[{r}][{c}]") for c, x in enumerate(row)])
    size = n if n is not None else len(rows)
    if len(rows) != size or any(len(r) != size for r in rows):
        raise ScenarioError(path, f"expected a {size}x{size} table")
    return np.array(rows)


def complex_matrix_to_json(m) -> List[List[List[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_matrix_from_json(raw, path: str, n: Optional[int] = None) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(path, "expected a non-empty list of rows")
    size = n if n is not None else len(raw)
    if len(raw) != size:
        raise ScenarioError(path, f"expected {size} rows, got {len(raw)}")
    out = np.zeros((size, size), dtype=complex)
    for r, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != size:
            raise ScenarioError(f"{path}[{r}]", f"expected {size} entries")
        for c, z in enumerate(row):
            p = f"{path}[{r}][{c}]"
            if not isinstance(z, list) or len(z) != 2:
                raise ScenarioError(p, "expected [re, im]")
            out[r, c] = complex(_number(z[0], p + "[0]"), _number(z[1], p + "[1]"))
    return out


def _state(raw, path: str, n: int) -> DensityMatrix:
    m = complex_matrix_from_json(raw, path, n)
    try:
        return validate_density(m)
    except QSteerError as exc:
        raise ScenarioError(path, str(exc)) from exc


# --- scenario --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to synthesize and simulate one state transfer.

    ``einstein`` holds the coefficients as written in the file; with
    ``rate_convention="lifetime"`` they are halved when building the system,
    so that the vacuum decay rate of ``j -> i`` equals ``A_ij``.
    """

    energies: np.ndarray
    einstein: np.ndarray
    dipole: np.ndarray
    initial_state: DensityMatrix
    target_state: DensityMatrix
    mode: str = "ideal"
    field_amplitude: Optional[float] = None
    epsilon: float = 1e-8
    rate_convention: str = "literal"
    rwa: bool = False
    steps_per_period: Optional[float] = None
    soak_duration: Optional[float] = None
    pulse_duration: Optional[float] = None
    name: str = ""

    @property
    def dim(self) -> int:
        return len(self.energies)

    def system(self) -> SystemSpec:
        factor = 0.5 if self.rate_convention == "lifetime" else 1.0
        return SystemSpec(self.energies, np.asarray(self.einstein) * factor, self.dipole)

    def pulse_step(self) -> Optional[float]:
        if self.steps_per_period is None or self.dim != 2:
            return None
        carrier = self.energies[1] - self.energies[0]
        return 2 * math.pi / carrier / self.steps_per_period

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "system": {
                "energies": [float(e) for e in self.energies],
                "einstein": np.asarray(self.einstein, dtype=float).tolist(),
                "dipole": np.asarray(self.dipole, dtype=float).tolist(),
            },
            "initial_state": complex_matrix_to_json(self.initial_state.mat),
            "target_state": complex_matrix_to_json(self.target_state.mat),
            "mode": self.mode,
            "field_amplitude": self.field_amplitude,
            "epsilon": self.epsilon,
            "rate_convention": self.rate_convention,
            "pulse": {"rwa": self.rwa, "steps_per_period": self.steps_per_period},
            "overrides": {"soak_duration": self.soak_duration,
                          "pulse_duration": self.pulse_duration},
        }

    def same_as(self, other: "Scenario") -> bool:
        def eq(a, b):
            return np.array_equal(np.asarray(a), np.asarray(b))
        return (
            eq(self.energies, other.energies) and eq(self.einstein, other.einstein)
            and eq(self.dipole, other.dipole)
            and eq(self.initial_state.mat, other.initial_state.mat)
            and eq(self.target_state.mat, other.target_state.mat)
            and (self.mode, self.field_amplitude, self.epsilon, self.rate_convention, self.rwa,
                 self.steps_per_period, self.soak_duration, self.pulse_duration, self.name)
            == (other.mode, other.field_amplitude, other.epsilon, other.rate_convention,
                other.rwa, other.steps_per_period, other.soak_duration, other.pulse_duration,
                other.name)
        )


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    """Validate a decoded scenario document; errors name the offending field."""
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    sysd = _require(data, "system", "")
    energies_raw = _require(sysd, "energies", "system")
    if not isinstance(energies_raw, list) or len(energies_raw) < 2:
        raise ScenarioError("system.energies", "expected a list of at least 2 numbers")
    energies = np.array([_number(e, f"system.energies[{k}]") for k, e in enumerate(energies_raw)])
    n = energies.size
    einstein = _real_table(_require(sysd, "einstein", "system"), "system.einstein", n)
    dipole_raw = sysd.get("dipole")
    dipole = np.zeros((n, n)) if dipole_raw is None else _real_table(dipole_raw, "system.dipole", n)
    try:
        SystemSpec(energies, einstein, dipole)
    except QSteerError as exc:
        raise ScenarioError("system", str(exc)) from exc

    rho_i = _state(_require(data, "initial_state", ""), "initial_state", n)
    rho_f = _state(_require(data, "target_state", ""), "target_state", n)

    mode = data.get("mode", "ideal")
    if mode not in MODES:
        raise ScenarioError("mode", f"expected one of {MODES}, got {mode!r}")
    field_amp = _number(data.get("field_amplitude"), "field_amplitude", allow_none=True)
    if mode == "physical":
        if n != 2:
            raise ScenarioError("mode", "physical mode supports 2-level systems only")
        if field_amp is None or field_amp <= 0:
            raise ScenarioError("field_amplitude", "physical mode needs a positive field amplitude")
    epsilon = _number(data.get("epsilon", 1e-8), "epsilon")
    if not 0 < epsilon < 1:
        raise ScenarioError("epsilon", "must lie in (0, 1)")
    conv = data.get("rate_convention", "literal")
    if conv not in RATE_CONVENTIONS:
        raise ScenarioError("rate_convention", f"expected one of {RATE_CONVENTIONS}, got {conv!r}")

    pulse = data.get("pulse") or {}
    if not isinstance(pulse, dict):
        raise ScenarioError("pulse", "expected an object")
    rwa = pulse.get("rwa", False)
    if not isinstance(rwa, bool):
        raise ScenarioError("pulse.rwa", "expected true or false")
    spp = _number(pulse.get("steps_per_period"), "pulse.steps_per_period", allow_none=True)
    if spp is not None and spp < 20:
        raise ScenarioError("pulse.steps_per_period", "must be >= 20")

    over = data.get("overrides") or {}
    if not isinstance(over, dict):
        raise ScenarioError("overrides", "expected an object")
    soak = _number(over.get("soak_duration"), "overrides.soak_duration", allow_none=True)
    pdur = _number(over.get("pulse_duration"), "overrides.pulse_duration", allow_none=True)
    for key, val in (("soak_duration", soak), ("pulse_duration", pdur)):
        if val is not None and val < 0:
            raise ScenarioError(f"overrides.{key}", "must be >= 0")
    name = data.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("name", "expected a string")
    return Scenario(energies, einstein, dipole, rho_i, rho_f, mode, field_amp, epsilon, conv,
                    rwa, spp, soak, pdur, name)


def load_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read file: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON: {exc}") from exc


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    return parse_scenario(load_json(path))


def save_scenario(scenario: Scenario, path) -> None:
    dump_json(scenario.to_json(), path)


def ca_scenario(mode: str = "physical") -> Scenario:
    """Two calcium levels 4^1S and 4^1P: cool to |0><0| start, aim at 1/4|0><0| + 3/4|1><1|."""
    return Scenario(
        energies=np.array([0.0, 4.5e15]),
        einstein=np.array([[0.0, 2.2e8], [0.0, 0.0]]),
        dipole=np.array([[0.0, 2.4e-29], [0.0, 0.0]]),
        initial_state=basis_state(2, 0),
        target_state=validate_density(np.diag([0.25, 0.75])),
        mode=mode,
        field_amplitude=1e7,
        epsilon=1e-8,
        rate_convention="literal",
        rwa=False,
        steps_per_period=160.0,
        soak_duration=50e-9,
        pulse_duration=None,
        name="ca",
    )


# --- schedules -------------------------------------------------------------


def _occupation_labels(density: SpectralDensity) -> Dict[str, float]:
    return {f"n_{i + 1}{j + 1}": v for (i, j), v in sorted(density.occupation.items())}


def schedule_to_json(schedule: ControlSchedule, dim: int) -> Dict[str, Any]:
    segs = []
    for seg in schedule.segments:
        if isinstance(seg, IncoherentSoak):
            segs.append({
                "type": "incoherent_soak",
                "duration": seg.duration,
                "occupation": seg.density.as_table(dim).tolist(),
                "occupation_labels": _occupation_labels(seg.density),
            })
        elif isinstance(seg, CoherentPulse):
            p = seg.pulse
            segs.append({
                "type": "coherent_pulse",
                "carrier": p.carrier, "rabi": p.rabi, "phase": p.phase,
                "duration": p.duration, "rwa": p.rwa, "transition": list(p.transition),
                "rotation_angle": p.rotation_angle, "step": seg.step,
            })
        else:
            segs.append({"type": "ideal_unitary", "duration": seg.duration,
                         "unitary": complex_matrix_to_json(seg.unitary)})
    meta: Dict[str, Any] = {"predicted_error": schedule.predicted_error}
    if schedule.target is not None:
        meta["target"] = complex_matrix_to_json(schedule.target.mat)
    if schedule.intermediate is not None:
        meta["intermediate"] = complex_matrix_to_json(schedule.intermediate.mat)
    ex = schedule.extras
    if "eigenvalues" in ex:
        meta["eigenvalues"] = [float(x) for x in ex["eigenvalues"]]
    if "unitary" in ex:
        meta["unitary"] = complex_matrix_to_json(ex["unitary"])
    for key in ("gap", "tau_rel", "mode", "epsilon"):
        if key in ex:
            meta[key] = ex[key]
    return {"format": SCHEDULE_FORMAT, "dim": dim, "segments": segs, "metadata": meta}


def parse_schedule(data: Dict[str, Any], dim: int) -> ControlSchedule:
    if not isinstance(data, dict):
        raise ScenarioError("", "schedule must be a JSON object")
    if data.get("format") != SCHEDULE_FORMAT:
        raise ScenarioError("format", f"expected {SCHEDULE_FORMAT!r}")
    if data.get("dim") != dim:
        raise ScenarioError("dim", f"schedule is for dim {data.get('dim')}, scenario has {dim}")
    raw_segs = _require(data, "segments", "")
    if not isinstance(raw_segs, list):
        raise ScenarioError("segments", "expected a list")
    segs = []
    for k, s in enumerate(raw_segs):
        path = f"segments[{k}]"
        kind = _require(s, "type", path)
        try:
            if kind == "incoherent_soak":
                occ = _real_table(_require(s, "occupation", path), path + ".occupation", dim)
                segs.append(IncoherentSoak(
                    SpectralDensity({(i, j): occ[i, j] for i in range(dim)
                                     for j in range(i + 1, dim)}),
                    _number(_require(s, "duration", path), path + ".duration")))
            elif kind == "coherent_pulse":
                f = {key: _number(_require(s, key, path), f"{path}.{key}")
                     for key in ("carrier", "rabi", "phase", "duration")}
                tr = s.get("transition", [0, 1])
                segs.append(CoherentPulse(
                    PulseParams(f["carrier"], f["rabi"], f["phase"], f["duration"],
                                bool(s.get("rwa", False)), (int(tr[0]), int(tr[1]))),
                    _number(s.get("step"), path + ".step", allow_none=True)))
            elif kind == "ideal_unitary":
                segs.append(IdealUnitary(
                    complex_matrix_from_json(_require(s, "unitary", path), path + ".unitary", dim),
                    _number(s.get("duration", 0.0), path + ".duration")))
            else:
                raise ScenarioError(path + ".type", f"unknown segment type {kind!r}")
        except ScenarioError:
            raise
        except QSteerError as exc:
            raise ScenarioError(path, str(exc)) from exc
    meta = data.get("metadata") or {}
    target = _state(meta["target"], "metadata.target", dim) if "target" in meta else None
    inter = (_state(meta["intermediate"], "metadata.intermediate", dim)
             if "intermediate" in meta else None)
    extras = {k: meta[k] for k in ("gap", "tau_rel", "mode", "epsilon") if k in meta}
    if "eigenvalues" in meta:
        extras["eigenvalues"] = np.array(meta["eigenvalues"], dtype=float)
    if "unitary" in meta:
        extras["unitary"] = complex_matrix_from_json(meta["unitary"], "metadata.unitary", dim)
    try:
        return ControlSchedule(tuple(segs), target, inter, meta.get("predicted_error"), extras)
    except QSteerError as exc:
        raise ScenarioError("segments", str(exc)) from exc


# --- trajectories ----------------------------------------------------------


def trajectory_columns(dim: int) -> List[str]:
    cols = ["t_s", "seg_index"] + [f"pop_{k + 1}" for k in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            cols += [f"re_rho_{i + 1}{j + 1}", f"im_rho_{i + 1}{j + 1}"]
    cols += ["purity", "dist_target", "dist_intermediate", "frob_target"]
    if dim == 2:
        cols += ["bloch_x", "bloch_y", "bloch_z"]
    return cols


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_rows(traj: Trajectory) -> List[List[str]]:
    n = traj.dim
    m = traj.metrics()
    nan = np.full(len(traj), np.nan)
    rows = []
    for k, (t, s) in enumerate(zip(traj.times, traj.states)):
        mat = np.asarray(s.mat)
        row = [_fmt(t), str(int(traj.seg_index[k]))]
        row += [_fmt(mat[i, i].real) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                row += [_fmt(mat[i, j].real), _fmt(mat[i, j].imag)]
        row += [_fmt(m["purity"][k]), _fmt(m.get("dist_target", nan)[k]),
                _fmt(m.get("dist_intermediate", nan)[k]), _fmt(m.get("frob_target", nan)[k])]
        if n == 2:
            row += [_fmt(v) for v in m["bloch"][k]]
        rows.append(row)
    return rows


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(trajectory_columns(traj.dim))
        w.writerows(trajectory_rows(traj))


def read_trajectory_csv(path) -> Dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(x) for x in row] for row in r])
    return {"columns": header, **{c: data[:, k] for k, c in enumerate(header)}}
