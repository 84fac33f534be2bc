"""Command-line front end: run scenarios, validate signals, emit bound data.

Exit codes: 0 success (validation passed), 1 validation failed, 2 usage
error, 3 input parse/IO error.  Every run writes a manifest sufficient to
reproduce it byte for byte; no timestamps enter the outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .blowup import BlowUpParams, terminal_time
from .errors import DomainError, InvalidDwellError
from .hybrid import SolverConfig, map_time_scale, simulate
from .scenarios import (
    build_consensus,
    build_intermittent,
    build_nesmr,
    build_ptpsg,
    build_scalar_reset,
    consensus_reference,
    game_reference,
    intermittent_reference,
    momentum_decay_constants,
)
from .stability import check_pt_bound, decay_constants
from .switching import (
    AatParams,
    AdtParams,
    GeneratorPolicy,
    bu_adt_bound,
    generate_signal,
    read_signal_csv,
    validate_bu_aat,
    validate_bu_adt,
    write_signal_csv,
)

SCENARIOS = ("consensus", "intermittent", "nesmr", "ptpsg", "scalar-reset")
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "none")
FIGURE_HORIZON_FRAC = {"fig3": 0.999, "fig4": 0.999, "fig5": 0.999, "fig6": 0.99, "none": 0.99}


def _fmt(v) -> str:
    return f"{v:.17g}"


def _build_scenario(name, args):
    if getattr(args, "spec", None):
        from .scenarios import load_spec_json

        spec_name, spec = load_spec_json(args.spec)
        if name in ("nesmr", "ptpsg"):
            spec_name = name  # the same game document drives both builds
        builders = {
            "consensus": build_consensus,
            "intermittent": build_intermittent,
            "ptpsg": build_ptpsg,
        }
        if spec_name == "nesmr":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return build_nesmr(spec)
        return builders[spec_name](spec)
    if name == "consensus":
        spec = consensus_reference()
    elif name == "intermittent":
        spec = intermittent_reference()
    elif name in ("nesmr", "ptpsg"):
        spec = game_reference()
    elif name == "scalar-reset":
        params = BlowUpParams(
            args.T if args.T is not None else 1.0,
            args.k if args.k is not None else 1.0,
            args.mu0 if args.mu0 is not None else 1.0,
        )
        return build_scalar_reset(params)
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(name)

    params = BlowUpParams(
        args.T if args.T is not None else spec.params.T,
        args.k if args.k is not None else spec.params.k,
        args.mu0 if args.mu0 is not None else spec.params.mu0,
    )
    adt = AdtParams(
        args.tau_d if args.tau_d is not None else spec.adt.tau_d,
        args.n0 if args.n0 is not None else spec.adt.N0,
    )
    spec.params = params  # dataclass specs are plain mutable containers
    spec.adt = adt
    if name == "intermittent":
        spec.aat = AatParams(
            args.tau_a if args.tau_a is not None else spec.aat.tau_a,
            args.t0_budget if args.t0_budget is not None else spec.aat.T0,
        )
    if name == "consensus":
        return build_consensus(spec)
    if name == "intermittent":
        return build_intermittent(spec)
    if name == "nesmr":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return build_nesmr(spec)
    return build_ptpsg(spec)


def _scenario_error(scn, x):
    if scn.name in ("nesmr",):
        n = scn.system.n // 2
        return float(np.linalg.norm(np.asarray(x)[:n] - scn.offset[:n]))
    return float(np.linalg.norm(np.asarray(x) - scn.offset))


def _bounds_report(scn, arc):
    meta = scn.metadata
    if scn.name == "nesmr":
        reasons = list(meta.get("warnings", []))
        if reasons:
            return {"certified": False, "reasons": reasons}
        consts = meta["decay_constants"]
    else:
        try:
            consts = decay_constants(scn.certificate, scn.adt, scn.aat)
        except InvalidDwellError as exc:
            return {"certified": False, "reasons": [str(exc)]}
    u_sup = meta.get("input_sup", 0.0)
    report = check_pt_bound(
        arc,
        consts,
        scn.params,
        scn.certificate.delta,
        scn.offset,
        u_sup=u_sup,
        ell=scn.certificate.ell,
    )
    doc = report.to_json()
    doc["certified"] = True
    return doc


def _write_errors_csv(path, columns, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def run_single(args, seed: int, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.figure == "fig2":
        return cmd_bounds(args, out_dir)
    if args.scenario is None and args.spec:
        import json as _json

        args.scenario = _json.loads(Path(args.spec).read_text())["scenario"]
    if args.scenario is None:
        print("error: one of --scenario or --spec is required", file=sys.stderr)
        return 2

    expected = {"fig3": "consensus", "fig4": "consensus", "fig5": "intermittent", "fig6": "nesmr"}
    if args.figure in expected and args.scenario != expected[args.figure]:
        print(
            f"error: figure {args.figure} expects --scenario {expected[args.figure]}",
            file=sys.stderr,
        )
        return 2

    scn = _build_scenario(args.scenario, args)
    cfg = SolverConfig(method=args.solver, rtol=args.tol, atol=args.tol * 1e-2)
    horizon = FIGURE_HORIZON_FRAC[args.figure] * terminal_time(scn.params)
    policy = GeneratorPolicy(seed=seed)
    signal, sched = generate_signal(
        scn.params, scn.adt, scn.aat, policy, horizon, modes=scn.modes, unstable=scn.unstable
    )
    rng = np.random.default_rng(seed)
    x0 = scn.initial_state(rng)

    if args.scale == "dilated":
        arc = map_time_scale(
            simulate(scn.system, x0, sched, horizon, "dilated", scn.params, cfg),
            scn.params,
            "contract",
        )
    else:
        arc = simulate(scn.system, x0, sched, horizon, "original", scn.params, cfg)

    arc.to_csv(out_dir / "trajectory.csv")
    arc.to_json(out_dir / "trajectory.json")
    write_signal_csv(signal, out_dir / "signal.csv", out_dir / "signal.json")

    err_rows = [
        (t, s, _scenario_error(scn, x)) for t, s, j, q, tau, rho, mu, x in arc.rows()
    ]
    columns = ["t", "s", "error"]

    if args.figure == "fig6":
        base = _build_scenario("ptpsg", args)
        arc_b = map_time_scale(
            simulate(base.system, x0[: base.system.n], sched, horizon, "dilated", scn.params, cfg),
            scn.params,
            "contract",
        )
        arc_b.to_csv(out_dir / "trajectory_ptpsg.csv")
        base_err = [
            _scenario_error(base, x) for t, s, j, q, tau, rho, mu, x in arc_b.rows()
        ]
        err_rows = [
            (t, s, e, eb) for (t, s, e), eb in zip(err_rows, base_err)
        ]
        columns = ["t", "s", "nesmr", "ptpsg"]

    _write_errors_csv(out_dir / "errors.csv", columns, err_rows)

    bounds_doc = _bounds_report(scn, arc)
    with open(out_dir / "bounds.json", "w") as f:
        json.dump(bounds_doc, f, indent=2, sort_keys=True, default=float)
        f.write("\n")

    manifest = {
        "command": "run",
        "version": __version__,
        "scenario": args.scenario,
        "figure": args.figure,
        "seed": seed,
        "scale": args.scale,
        "solver": {"method": args.solver, "tol": args.tol},
        "params": {"T": scn.params.T, "k": scn.params.k, "mu0": scn.params.mu0},
        "adt": {"tau_d": scn.adt.tau_d, "N0": scn.adt.N0},
        "aat": None if scn.aat is None else {"tau_a": scn.aat.tau_a, "T0": scn.aat.T0},
        "horizon": horizon,
        "initial_state": [float(v) for v in x0],
        "jump_count": arc.jump_count,
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0


def cmd_run(args) -> int:
    out_root = Path(args.out)
    seeds = [int(s) for s in str(args.seed).split(",")]
    if len(seeds) == 1:
        return run_single(args, seeds[0], out_root)
    jobs = max(1, args.jobs)
    codes = []
    if jobs == 1:
        for s in seeds:
            codes.append(run_single(args, s, out_root / f"seed-{s}"))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_single, args, s, out_root / f"seed-{s}") for s in seeds
            ]
            codes = [f.result() for f in futures]
    return max(codes)


def cmd_validate_signal(args) -> int:
    try:
        params = BlowUpParams(args.T, args.k, args.mu0)
        signal = read_signal_csv(args.signal, args.sidecar)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        print(f"error: could not parse signal: {exc}", file=sys.stderr)
        return 3
    try:
        adt_report = validate_bu_adt(signal, params, AdtParams(args.tau_d, args.n0))
        doc = {"bu_adt": adt_report.to_json()}
        ok = adt_report.passed
        if args.tau_a is not None:
            aat_report = validate_bu_aat(
                signal, params, AatParams(args.tau_a, args.t0_budget or 0.0)
            )
            doc["bu_aat"] = aat_report.to_json()
            ok = ok and aat_report.passed
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    doc["pass"] = ok
    text = json.dumps(doc, indent=2, sort_keys=True, default=float)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if ok else 1


def cmd_bounds(args, out_dir=None) -> int:
    out_dir = Path(args.out) if out_dir is None else out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = [float(v) for v in str(args.k_list).split(",")]
    mu0 = args.mu0 if args.mu0 is not None else 1.0
    T = args.T if args.T is not None else 10.0
    adt = AdtParams(args.tau_d if args.tau_d is not None else 1.0,
                    args.n0 if args.n0 is not None else 1.0)
    n_grid = args.grid
    rows = []
    max_terminal = 0.0
    for k in ks:
        params = BlowUpParams(T, k, mu0)
        ups = terminal_time(params)
        max_terminal = max(max_terminal, ups)
        # first grid point is exactly delta = 0, last (1 - 1e-6) * terminal
        deltas = ups * (1.0 - np.geomspace(1.0, 1e-6, n_grid))
        for d in deltas:
            rows.append((d, f"{k:g}", bu_adt_bound(params, adt, 0.0, d)))
    # classical dwell-time reference line (the large-T limit at mu0 = 1)
    for d in np.linspace(0.0, max_terminal, n_grid):
        rows.append((d, "adt", d / adt.tau_d + adt.N0))
    with open(out_dir / "bounds.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["delta", "k", "bound"])
        for d, k, b in rows:
            writer.writerow([_fmt(d), k, _fmt(b)])
    manifest = {
        "command": "bounds",
        "version": __version__,
        "params": {"T": T, "mu0": mu0},
        "adt": {"tau_d": adt.tau_d, "N0": adt.N0},
        "k_list": ks,
        "grid": n_grid,
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pt-hybrid",
        description="Prescribed-time switching-systems toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_out = os.environ.get("PT_HYBRID_OUT", "out")

    run = sub.add_parser("run", help="simulate a scenario and emit figure data")
    run.add_argument("--scenario", choices=SCENARIOS, default=None)
    run.add_argument("--spec", default=None, help="scenario spec JSON document")
    run.add_argument("--figure", choices=FIGURES, default="none")
    run.add_argument("--seed", default="0", help="seed or comma-separated seed list")
    run.add_argument("--T", type=float, default=None)
    run.add_argument("--k", type=float, default=None)
    run.add_argument("--mu0", type=float, default=None)
    run.add_argument("--tau-d", dest="tau_d", type=float, default=None)
    run.add_argument("--tau-a", dest="tau_a", type=float, default=None)
    run.add_argument("--n0", type=float, default=None)
    run.add_argument("--t0-budget", dest="t0_budget", type=float, default=None)
    run.add_argument("--out", default=default_out)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--solver", choices=("rk4", "rk45"), default="rk45")
    run.add_argument("--tol", type=float, default=1e-8)
    run.add_argument("--scale", choices=("original", "dilated"), default="dilated")
    run.add_argument("--grid", type=int, default=200, help="grid size for fig2 data")
    run.add_argument("--k-list", dest="k_list", default="1,2,3,4")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate-signal", help="check a signal against its class")
    val.add_argument("--signal", required=True, help="CSV with start_time,mode rows")
    val.add_argument("--sidecar", required=True, help="JSON with mode sets and end_time")
    val.add_argument("--T", type=float, required=True)
    val.add_argument("--k", type=float, default=1.0)
    val.add_argument("--mu0", type=float, default=1.0)
    val.add_argument("--tau-d", dest="tau_d", type=float, required=True)
    val.add_argument("--n0", type=float, required=True)
    val.add_argument("--tau-a", dest="tau_a", type=float, default=None)
    val.add_argument("--t0-budget", dest="t0_budget", type=float, default=None)
    val.add_argument("--out", default=None)
    val.set_defaults(func=cmd_validate_signal)

    bounds = sub.add_parser("bounds", help="emit switch-allowance curves (fig2 data)")
    bounds.add_argument("--T", type=float, default=10.0)
    bounds.add_argument("--mu0", type=float, default=1.0)
    bounds.add_argument("--tau-d", dest="tau_d", type=float, default=1.0)
    bounds.add_argument("--n0", type=float, default=1.0)
    bounds.add_argument("--k-list", dest="k_list", default="1,2,3,4")
    bounds.add_argument("--grid", type=int, default=200)
    bounds.add_argument("--out", default=default_out)
    bounds.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
