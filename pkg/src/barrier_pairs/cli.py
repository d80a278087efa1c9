"""Command-line front end: synthesize, verify, simulate, export-region.

Exit codes: 0 success, 1 config/parse error or unknown coordinates,
2 empty bank, 3 verification failure, 4 start outside the safe set,
5 constraint violation during simulation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .exceptions import BarrierPairError, EmptyBank, StartOutsideSafeSet, VerificationFailed
from .ldi import linearize
from .plants import InvertedPendulum
from .sim import PENDULUM_SCENARIOS, Scenario, edge_trajectories, run_scenario
from .supervisor import DEFAULT_EPS_HI, DEFAULT_EPS_LO, SupervisorState
from .synthesis import Certificate, synthesize_bank, verify_certificate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY_BANK = 2
EXIT_VERIFY = 3
EXIT_START_OUTSIDE = 4
EXIT_VIOLATION = 5

SEED_ENV = "BF_SEED"
EDGE_SCENARIO = "edge-trajectories"
EDGE_RECORD_EVERY = 100
MC_SAMPLES = 1000

logger = logging.getLogger("barrier_pairs.cli")


def seed_from_env() -> int:
    value = os.environ.get(SEED_ENV, "0")
    try:
        return int(value)
    except ValueError:
        raise io.FormatError(f"{SEED_ENV} must be an integer, got {value!r}") from None


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_synthesize(args) -> int:
    run = io.load_config(args.config)
    try:
        bank = synthesize_bank(run.plant, run.equilibria, run.synthesis)
    except EmptyBank as exc:
        return _fail(EXIT_EMPTY_BANK, exc)
    skipped = {x_e: reason for x_e, reason in bank.skipped}
    pairs = iter(bank)
    print(f"{'#':>3}  {'x_e':<40} {'status':<9} {'log_det':>12} {'min_margin':>11}")
    for k, x_e in enumerate(run.equilibria):
        label = np.array2string(x_e, precision=4, separator=",")
        key = tuple(x_e.tolist())
        if key in skipped:
            print(f"{k:>3}  {label:<40} {'skipped':<9} {skipped[key]}")
            continue
        pair = next(pairs)
        print(f"{k:>3}  {label:<40} {'feasible':<9} {pair.log_det:>12.6f} {min(pair.margins.values()):>11.3e}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.save_bank(args.out, run.plant, run.synthesis, bank)
    print(f"wrote {len(bank)} pairs to {args.out} ({len(skipped)} skipped)")
    return EXIT_OK


def boundary_samples(pair, count, rng) -> np.ndarray:
    """Uniformly oriented points on ``{B = 0}`` of a pair."""
    d = rng.standard_normal((count, pair.n_states))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    L = np.linalg.cholesky(pair.Q)
    return pair.x_e + d @ L.T


def verify_pair(pair, plant, config, rng, samples=MC_SAMPLES):
    """Recheck one stored pair against a rebuilt LDI; return ``(ok, min_margin, detail)``."""
    ldi = linearize(plant, pair.x_e)
    if not np.allclose(ldi.u_e, pair.u_e, rtol=0, atol=1e-9):
        return False, -np.inf, "stored u_e does not match the equilibrium input"
    cert = Certificate(pair.Q, pair.K @ pair.Q, pair.log_det or 0.0)
    try:
        margins = verify_certificate(cert, ldi, config)
    except VerificationFailed as exc:
        return False, min(exc.violations.values()), f"{exc.constraint} violated"
    x = boundary_samples(pair, samples, rng)
    dx = x - ldi.x_e
    state_excess = np.abs(dx @ ldi.state_rows.T) - ldi.state_bounds
    du = (x - pair.x_e) @ pair.K.T
    input_excess = np.abs(du @ ldi.input_rows.T) - ldi.input_bounds
    tol = 1e-9
    if state_excess.max() > tol or input_excess.max() > tol:
        return False, min(margins.values()), "boundary samples leave the validity box"
    return True, min(margins.values()), "ok"


def cmd_verify(args) -> int:
    loaded = io.load_bank(args.bank)
    rng = np.random.default_rng(seed_from_env())
    failures = []
    for n, pair in enumerate(loaded.bank):
        try:
            ok, margin, detail = verify_pair(pair, loaded.plant, loaded.config, rng)
        except BarrierPairError as exc:
            ok, margin, detail = False, -np.inf, f"{type(exc).__name__}: {exc}"
        label = np.array2string(pair.x_e, precision=4, separator=",")
        print(f"{n:>3}  {label:<40} {'pass' if ok else 'FAIL':<5} {margin:>11.3e}  {detail}")
        if not ok:
            failures.append(n)
    if failures:
        print(f"{len(failures)} of {len(loaded.bank)} pairs failed: {failures}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(loaded.bank)} pairs verified")
    return EXIT_OK


def _state_maxima(plant, states, inputs) -> dict:
    summary = {f"max_abs_{name}": float(np.abs(states[:, k]).max()) for k, name in enumerate(plant.state_names)}
    summary["max_abs_input"] = float(np.abs(inputs).max())
    return summary


def _simulate_scenario(args, loaded, out: Path) -> int:
    if not isinstance(loaded.plant, InvertedPendulum):
        return _fail(EXIT_CONFIG, f"scenario {args.scenario!r} needs a pendulum bank")
    base = PENDULUM_SCENARIOS[args.scenario]
    scenario = Scenario(
        base.name,
        base.plant,
        base.knots,
        base.x0,
        args.horizon if args.horizon is not None else base.horizon,
        args.step if args.step is not None else base.step,
    )
    try:
        traj, report = run_scenario(
            scenario,
            loaded.bank,
            loaded.plant,
            args.eps_hi,
            args.eps_lo,
            record_every=args.record_every or 1,
            lookahead=not args.no_lookahead,
        )
    except StartOutsideSafeSet as exc:
        return _fail(EXIT_START_OUTSIDE, exc)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / f"{scenario.name}.csv")
    summary = {
        "scenario": scenario.name,
        "step": scenario.step,
        "horizon": scenario.horizon,
        "eps_hi": args.eps_hi,
        "eps_lo": args.eps_lo,
        "lookahead": not args.no_lookahead,
    }
    summary.update(_state_maxima(loaded.plant, traj.states, traj.u_applied))
    summary.update(
        {
            "max_barrier": report.max_barrier,
            "state_violations": report.state_violations,
            "input_violations": report.input_violations,
            "requested_input_violations": report.requested_input_violations,
            "violations": report.total,
            "switch_count": report.switch_count,
        }
    )
    (out / "summary.json").write_text(io.dumps(summary))
    print(io.dumps(summary), end="")
    return EXIT_VIOLATION if report.total else EXIT_OK


def _simulate_edges(args, loaded, out: Path) -> int:
    plant, bank = loaded.plant, loaded.bank
    runs = edge_trajectories(
        bank,
        plant,
        horizon=args.horizon,
        lam=loaded.config.lam,
        h=args.step if args.step is not None else 1e-3,
        level=args.eps_lo,
        record_every=args.record_every or EDGE_RECORD_EVERY,
    )
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    all_states, all_inputs = [], []
    for (i, j), batch in runs.items():
        for k, (traj, report) in enumerate(batch):
            name = f"edge_{plant.state_names[i]}_{plant.state_names[j]}_{k:02d}.csv"
            traj.to_csv(out / name)
            all_states.append(traj.states)
            all_inputs.append(traj.u_applied)
            entries.append(
                {
                    "file": name,
                    "start": traj.states[0],
                    "max_barrier": report.max_barrier,
                    "final_barrier": float(traj.barrier_values[-1]),
                    "violations": report.total,
                }
            )
    violations = sum(e["violations"] for e in entries)
    summary = {"scenario": EDGE_SCENARIO, "trajectories": len(entries)}
    summary.update(_state_maxima(plant, np.concatenate(all_states), np.concatenate(all_inputs)))
    summary.update(
        {
            "max_barrier": max(e["max_barrier"] for e in entries),
            "max_final_barrier": max(e["final_barrier"] for e in entries),
            "violations": violations,
            "runs": entries,
        }
    )
    (out / "summary.json").write_text(io.dumps(summary))
    print(
        f"{len(entries)} trajectories: max B {summary['max_barrier']:.4g}, "
        f"max final B {summary['max_final_barrier']:.6g}, violations {violations}"
    )
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_simulate(args) -> int:
    loaded = io.load_bank(args.bank)
    try:
        SupervisorState(eps_hi=args.eps_hi, eps_lo=args.eps_lo)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, exc)
    if args.step is not None and not args.step > 0:
        return _fail(EXIT_CONFIG, "--step must be positive")
    if args.record_every is not None and args.record_every < 1:
        return _fail(EXIT_CONFIG, "--record-every must be at least 1")
    out = Path(args.out)
    if args.scenario == EDGE_SCENARIO:
        return _simulate_edges(args, loaded, out)
    return _simulate_scenario(args, loaded, out)


def cmd_export_region(args) -> int:
    loaded = io.load_bank(args.bank)
    coords = io.parse_projection(args.proj, loaded.plant)
    names = [loaded.plant.state_names[c] for c in coords]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.export_region(args.out, loaded.bank, coords, names)
    print(f"wrote {len(loaded.bank)} x {io.REGION_POINTS} boundary points to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrier-pairs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-equilibrium progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="build a barrier-pair bank from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="recheck every pair of a bank")
    p.add_argument("--bank", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run a reference scenario or the edge-trajectory batch")
    p.add_argument("--bank", required=True)
    p.add_argument("--scenario", required=True, choices=sorted(PENDULUM_SCENARIOS) + [EDGE_SCENARIO])
    p.add_argument("--out", required=True)
    p.add_argument("--eps-hi", type=float, default=DEFAULT_EPS_HI)
    p.add_argument("--eps-lo", type=float, default=DEFAULT_EPS_LO)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--record-every", type=int, default=None, help="CSV row stride")
    p.add_argument(
        "--no-lookahead", action="store_true", help="switch on the sampled barrier only, without one-step prediction"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-region", help="write projected ellipse boundaries as CSV")
    p.add_argument("--bank", required=True)
    p.add_argument("--proj", required=True, help="two coordinates, e.g. theta,theta_dot or x0,x2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_region)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (io.FormatError, OSError) as exc:
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":
    sys.exit(main())
