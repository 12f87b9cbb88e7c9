"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 numerical failure, 4 infeasible target.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Tuple

import numpy as np

from . import kernels
from .controllability import system_closure
from .errors import InfeasibleError, NumericalError, QSteerError, ValidationError
from .liouville import build_dissipator, cp_check, spectral_gap, steady_state, steady_state_residual
from .propagator import DEFAULT_SAMPLES, Trajectory, evolve_incoherent, run_schedule
from .protocol import optimal_density, synthesize_schedule
from .schedule import ControlSchedule, IncoherentSoak
from .scenario import (
    Scenario,
    ca_scenario,
    dump_json,
    load_json,
    load_scenario,
    parse_schedule,
    save_scenario,
    schedule_to_json,
    write_trajectory_csv,
)
from .states import decompose_target, random_density, trace_distance

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


def synthesize(scenario: Scenario) -> ControlSchedule:
    return synthesize_schedule(
        scenario.system(),
        scenario.initial_state,
        scenario.target_state,
        mode=scenario.mode,
        epsilon=scenario.epsilon,
        field_amplitude=scenario.field_amplitude,
        rwa=scenario.rwa,
        step=scenario.pulse_step(),
        soak_override=scenario.soak_duration,
        pulse_override=scenario.pulse_duration,
    )


def simulate(scenario: Scenario, schedule: ControlSchedule, samples: int = DEFAULT_SAMPLES):
    """Run ``schedule`` from the scenario's initial state; returns (trajectory, summary)."""
    system = scenario.system()
    traj = run_schedule(system, schedule, scenario.initial_state, sample_count=samples,
                        step=scenario.pulse_step())
    if traj.target is None:
        traj = traj.with_references(scenario.target_state, traj.intermediate)
    stages = []
    for k, (seg, part) in enumerate(zip(schedule.segments, traj.parts)):
        entry = {"seg_index": k, "type": type(seg).__name__,
                 "t_start": float(part.times[0]), "t_end": float(part.times[-1])}
        end = part.final
        entry["dist_target_end"] = trace_distance(end, traj.target)
        if traj.intermediate is not None:
            entry["dist_intermediate_end"] = trace_distance(end, traj.intermediate)
        stages.append(entry)
    summary = {
        "scenario": scenario.name,
        "mode": scenario.mode,
        "final_dist_target": trace_distance(traj.final, traj.target),
        "final_frob_target": float(np.linalg.norm(np.asarray(traj.final.mat)
                                                  - np.asarray(traj.target.mat))),
        "final_dist_intermediate": (trace_distance(traj.final, traj.intermediate)
                                    if traj.intermediate is not None else None),
        "final_populations": [float(x) for x in traj.final.populations],
        "predicted_error": schedule.predicted_error,
        "gap": None,
        "tau_rel": None,
        "stages": stages,
        "total_time": float(traj.times[-1]),
        "samples": len(traj),
        "kernel_backend": kernels.BACKEND,
    }
    soak = next((s for s in schedule.segments if isinstance(s, IncoherentSoak)), None)
    if soak is not None:
        gap = spectral_gap(build_dissipator(system, soak.density))
        summary["gap"] = gap
        summary["tau_rel"] = 1.0 / gap
    return traj, summary


def write_outputs(traj: Trajectory, summary: dict, prefix: str) -> List[str]:
    paths = [f"{prefix}.csv"]
    write_trajectory_csv(traj, paths[0])
    for k, part in enumerate(traj.parts):
        p = f"{prefix}_seg{k}.csv"
        write_trajectory_csv(part.with_references(traj.target, traj.intermediate), p)
        paths.append(p)
    summary = dict(summary, files=paths[:])
    paths.append(f"{prefix}_summary.json")
    dump_json(summary, paths[-1])
    return paths


# --- verify ----------------------------------------------------------------


def verify_checks(scenario: Scenario, seed: int = 0) -> List[Tuple[str, bool, str]]:
    """Run the diagnostics for ``scenario``; returns ``(name, passed, detail)`` triples."""
    checks: List[Tuple[str, bool, str]] = []
    system = scenario.system()

    rep = system_closure(system)
    checks.append(("unitary_controllability", rep.controllable,
                   f"Lie closure dimension {rep.dimension} of {rep.full_dimension}"
                   + ("" if rep.controllable else "; not unitarily controllable")))

    issues = system.general_position_issues()
    checks.append(("general_position", not issues, "; ".join(issues) or "ok"))

    try:
        p = decompose_target(scenario.target_state).eigenvalues
    except InfeasibleError as exc:
        checks.append(("target_nondegenerate", False, str(exc)))
        return checks
    checks.append(("target_nondegenerate", True, f"eigenvalues {np.round(p, 12).tolist()}"))

    L = build_dissipator(system, optimal_density(p))
    sup = L.superop
    rng = np.random.default_rng(seed)
    x = rng.normal(size=sup.shape[0]) + 1j * rng.normal(size=sup.shape[0])
    h = x.reshape(system.dim, system.dim)
    h = h + h.conj().T
    scale = float(np.max(np.abs(sup)))
    tr_err = abs(np.trace(L.apply(h))) / scale
    herm_err = float(np.max(np.abs(L.apply(h) - L.apply(h).conj().T))) / scale
    re_max = float(np.max(L.eigenvalues().real)) / scale
    checks.append(("trace_preserving", tr_err <= 1e-10, f"relative error {tr_err:.2e}"))
    checks.append(("hermiticity_preserving", herm_err <= 1e-10, f"relative error {herm_err:.2e}"))
    checks.append(("spectrum_stable", re_max <= 1e-10, f"max Re(lambda)/scale {re_max:.2e}"))

    try:
        ss = steady_state(L)
        gap = spectral_gap(L)
    except QSteerError as exc:
        checks.append(("steady_state", False, f"{type(exc).__name__}: {exc}"))
        return checks
    dist = float(np.max(np.abs(np.asarray(ss.mat) - np.diag(p))))
    resid = steady_state_residual(L, np.diag(p))
    checks.append(("steady_state", dist <= 1e-8,
                   f"max |rho_ss - diag(p)| = {dist:.2e}; relative residual {resid:.2e}"))
    checks.append(("spectral_gap", gap > 0, f"gap {gap:.6g} 1/s, tau_rel {1 / gap:.6g} s"))

    for mult in (0.1, 1.0, 10.0):
        r = cp_check(L, mult / gap)
        checks.append((f"cp_check_{mult:g}_tau", r.passed,
                       f"min Choi eigenvalue {r.choi_min_eigenvalue:.2e}, "
                       f"trace error {r.trace_error:.2e}"))

    a = random_density(system.dim, rng)
    b = random_density(system.dim, rng)
    ta = evolve_incoherent(L, a, 5.0 / gap, 50)
    tb = evolve_incoherent(L, b, 5.0 / gap, 50)
    d = np.array([trace_distance(u, v) for u, v in zip(ta.states, tb.states)])
    worst = float(np.max(np.diff(d))) if d.size > 1 else 0.0
    checks.append(("contractivity", worst <= 1e-10, f"largest increase {worst:.2e}"))
    return checks


# --- commands --------------------------------------------------------------


def cmd_synthesize(args) -> int:
    scenario = load_scenario(args.scenario)
    schedule = synthesize(scenario)
    dump_json(schedule_to_json(schedule, scenario.dim), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    schedule = parse_schedule(load_json(args.schedule), scenario.dim)
    traj, summary = simulate(scenario, schedule, args.samples)
    for p in write_outputs(traj, summary, args.out_prefix):
        print(f"wrote {p}")
    print(f"final trace distance to target: {summary['final_dist_target']:.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    checks = verify_checks(scenario, args.seed)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_CHECK_FAILED


def cmd_example(args) -> int:
    scenario = ca_scenario(args.mode)
    schedule = synthesize(scenario)
    traj, summary = simulate(scenario, schedule, args.samples)
    if args.out_prefix:
        save_scenario(scenario, f"{args.out_prefix}_scenario.json")
        dump_json(schedule_to_json(schedule, scenario.dim), f"{args.out_prefix}_schedule.json")
        write_outputs(traj, summary, args.out_prefix)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsteer",
        description="Steer open quantum systems with incoherent light and coherent pulses.")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for randomized checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="build the two-stage control schedule")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run a schedule and write the trajectory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check controllability and Liouvillian diagnostics")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example", help="run a built-in scenario")
    p.add_argument("name", choices=["ca"])
    p.add_argument("--mode", choices=["ideal", "physical"], default="physical")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_example)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "samples", 2) < 2:
        print("error: --samples must be >= 2", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleError as exc:
        print(f"infeasible: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
