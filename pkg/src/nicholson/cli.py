"""Command-line interface.

Subcommands::

    nicholson check <model.json> [--omega W] [--out PATH]
    nicholson simulate <model.json> --history EXPR --t-end T [--csv PATH]
    nicholson verify <model.json> [--pairs "0.5,2;0.2,4"] [...]
    nicholson periodic <model.json> --omega W [--csv PATH]
    nicholson map --K K --a-plus A --zeta-plus Z [--sweep] [--x0 X]
    nicholson repro {classic,er2019,ex41,ex42,ex43} [--out-dir DIR]

Exit codes: 0 when every requested check is certified or
simulation-consistent, 1 on a hard failure (a simulation contradicts a
certified statement, an orbit sweep finds a cycle, or the integrator aborts),
2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import criteria as cr
from . import experiments as xp
from . import interval_map as im
from .expr import ExprError
from .integrate import IntegratorError, integrate
from .model import ModelError, load_model
from itertools import islice

EXIT_OK = 0
EXIT_HARD_FAIL = 1
EXIT_USAGE = 2


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(fh.read())


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def cmd_check(args) -> int:
    model = _load(args.model)
    report = cr.build_report(model, omega=args.omega, grid=args.grid)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load(args.model)
    t_end = args.t_end if args.t_end is not None else xp.default_t_end(model)
    traj = integrate(model, xp._as_phi(args.history), t_end, step=args.step)
    if args.csv:
        traj.write_csv(args.csv, stride=args.stride)
    summary = {
        "t_end": t_end,
        "step": args.step,
        "x_end": traj.eval_at(t_end),
        "nodes": len(traj.ts),
        "csv": args.csv,
    }
    _emit(json.dumps(summary, indent=2, sort_keys=True), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _load(args.model)
    report = cr.build_report(model)
    t_end = args.t_end if args.t_end is not None else xp.default_t_end(model)
    out = xp.ExperimentReport(scenario="verify",
                              meta={"model": args.model, "step": args.step,
                                    "t_end": t_end, "tail": args.tail},
                              criteria={"model": report.to_json_dict()})
    histories = [h for h in (args.history or ["0.5", "1", "2"])]
    if report.stats.gamma <= 1.0:
        out.sections.append(xp.verify_extinction(
            model, histories, t_end=min(t_end, 200.0),
            tail_fraction=args.tail, step=args.step))
    else:
        out.sections.append(xp.verify_permanence(
            model, histories, t_end=t_end, tail_fraction=args.tail,
            step=args.step, report=report))
        if args.pairs:
            pairs = []
            for chunk in args.pairs.split(";"):
                a, b = chunk.split(",")
                pairs.append((a.strip(), b.strip()))
            out.sections.append(xp.verify_attractivity(
                model, pairs, t_end=t_end, tol=args.tol,
                tail_fraction=args.tail, step=args.step))
        if report.K is not None and report.verdicts["K1"].passed:
            traj = integrate(model, xp._as_phi(histories[0]), t_end,
                             step=args.step)
            out.sections.append(xp.straddle_check(
                model, report.K, traj, tail_fraction=args.tail))
    _emit(out.to_json(), args.out)
    return EXIT_HARD_FAIL if out.hard_failure else EXIT_OK


def cmd_periodic(args) -> int:
    model = _load(args.model)
    report = cr.build_report(model, omega=args.omega)
    out = xp.ExperimentReport(scenario="periodic",
                              meta={"model": args.model, "omega": args.omega,
                                    "step": args.step, "tol": args.tol},
                              criteria={"model": report.to_json_dict()})
    certified = all(
        report.verdicts[name].passed for name in ("periodic2",)
        if name in report.verdicts) and any(
        report.verdicts[name].passed
        for name in ("periodic1", "periodic_alternative")
        if name in report.verdicts)
    sol = xp.find_periodic_solution(
        model, args.omega, n_history_nodes=args.nodes,
        max_iter=args.max_iter, tol=args.tol, step=args.step)
    facts = xp.periodic_cone_facts(model, sol)
    facts.update(residual=sol.residual, iterations=sol.iterations,
                 certification="certified" if certified
                 else "simulation-consistent")
    out.sections.append(xp.Section(
        "periodic solution",
        "pass" if facts["ratio_ok"] and facts["M_star_ok"] else "fail",
        facts))
    if args.csv:
        sol.trajectory.write_csv(args.csv, stride=args.stride)
        out.artifacts.append(args.csv)
    if args.track:
        out.sections.append(xp.verify_periodic_attractor(
            model, sol, [h for h in args.track], t_end=args.t_end or 300.0,
            tol=args.track_tol, step=args.step, certified=certified))
    _emit(out.to_json(), args.out)
    return EXIT_HARD_FAIL if out.hard_failure else EXIT_OK


def cmd_map(args) -> int:
    spec = im.from_zeta(args.K, args.a_plus, args.zeta_plus,
                        domain_hi=args.domain_hi or 0.0,
                        diagnostic=args.diagnostic)
    payload = {
        "K": args.K,
        "a_plus": args.a_plus,
        "zeta_plus": args.zeta_plus,
        "theta0": spec.theta0,
        "stability_margin": spec.stability_margin,
        "derivative_at_K": im.derivative_at_K(spec),
    }
    code = EXIT_OK
    if args.sweep:
        sweep = im.global_attractor_sweep(spec, n_seeds=args.seeds,
                                          max_n=args.max_n, tol=args.tol)
        payload["sweep"] = sweep.to_json_dict()
        code = EXIT_OK if sweep.passed else EXIT_HARD_FAIL
    if args.x0 is not None:
        orbit = im.iterate(spec, args.x0, max_n=args.max_n, tol=args.tol)
        payload["orbit"] = {
            "x0": args.x0,
            "verdict": orbit.verdict,
            "iterations": orbit.n_iterations,
            "final_x": orbit.final_x,
            "prefix": list(islice(orbit.orbit, 16)),
        }
        if args.orbit_csv:
            orbit.write_csv(args.orbit_csv)
        if not orbit.converging:
            code = EXIT_HARD_FAIL
    _emit(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return code


def cmd_repro(args) -> int:
    report = xp.reproduce_example(args.name, out_dir=args.out_dir,
                                  step=args.step, t_end=args.t_end,
                                  tail_fraction=args.tail)
    _emit(report.to_json(), args.out)
    return EXIT_HARD_FAIL if report.hard_failure else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nicholson",
        description="Analyse and simulate nonautonomous blowfly-type delay "
                    "equations with paired incubation/maturation delays.")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("check", help="criteria report for a model config")
    pc.add_argument("model")
    pc.add_argument("--omega", type=float, default=None,
                    help="period for the periodic-solution criteria")
    pc.add_argument("--grid", type=int, default=2048)
    pc.add_argument("--out", default=None)
    pc.set_defaults(fn=cmd_check)

    ps = sub.add_parser("simulate", help="integrate one history, export CSV")
    ps.add_argument("model")
    ps.add_argument("--history", required=True,
                    help="history expression of t on [-tau, 0]")
    ps.add_argument("--t-end", type=float, default=None)
    ps.add_argument("--step", type=float, default=xp.DEFAULT_STEP)
    ps.add_argument("--csv", default=None)
    ps.add_argument("--stride", type=int, default=1)
    ps.add_argument("--out", default=None)
    ps.set_defaults(fn=cmd_simulate)

    pv = sub.add_parser("verify",
                        help="simulation checks of permanence/attractivity")
    pv.add_argument("model")
    pv.add_argument("--history", action="append", default=None,
                    help="history expression (repeatable)")
    pv.add_argument("--pairs", default=None,
                    help="semicolon-separated history pairs, e.g. '0.5,2;0.2,4'")
    pv.add_argument("--t-end", type=float, default=None)
    pv.add_argument("--step", type=float, default=xp.DEFAULT_STEP)
    pv.add_argument("--tail", type=float, default=xp.DEFAULT_TAIL)
    pv.add_argument("--tol", type=float, default=1e-4)
    pv.add_argument("--out", default=None)
    pv.set_defaults(fn=cmd_verify)

    pp = sub.add_parser("periodic", help="locate a periodic solution")
    pp.add_argument("model")
    pp.add_argument("--omega", type=float, required=True)
    pp.add_argument("--nodes", type=int, default=129)
    pp.add_argument("--max-iter", type=int, default=2000)
    pp.add_argument("--tol", type=float, default=1e-10)
    pp.add_argument("--step", type=float, default=xp.DEFAULT_STEP)
    pp.add_argument("--csv", default=None)
    pp.add_argument("--stride", type=int, default=1)
    pp.add_argument("--track", action="append", default=None,
                    help="history to track against the solution (repeatable)")
    pp.add_argument("--track-tol", type=float, default=1e-4)
    pp.add_argument("--t-end", type=float, default=None)
    pp.add_argument("--out", default=None)
    pp.set_defaults(fn=cmd_periodic)

    pm = sub.add_parser("map", help="analyse the auxiliary interval map")
    pm.add_argument("--K", type=float, required=True)
    pm.add_argument("--a-plus", type=float, required=True)
    pm.add_argument("--zeta-plus", type=float, required=True)
    pm.add_argument("--sweep", action="store_true")
    pm.add_argument("--seeds", type=int, default=64)
    pm.add_argument("--x0", type=float, default=None)
    pm.add_argument("--max-n", type=int, default=1_000_000)
    pm.add_argument("--tol", type=float, default=1e-8)
    pm.add_argument("--domain-hi", type=float, default=None)
    pm.add_argument("--diagnostic", action="store_true",
                    help="build the map even when the stability margin "
                         "exceeds 1")
    pm.add_argument("--orbit-csv", default=None)
    pm.add_argument("--out", default=None)
    pm.set_defaults(fn=cmd_map)

    pr = sub.add_parser("repro", help="run a built-in scenario pipeline")
    pr.add_argument("name", choices=xp.SCENARIOS)
    pr.add_argument("--out-dir", default=None)
    pr.add_argument("--step", type=float, default=xp.DEFAULT_STEP)
    pr.add_argument("--t-end", type=float, default=None)
    pr.add_argument("--tail", type=float, default=xp.DEFAULT_TAIL)
    pr.add_argument("--out", default=None)
    pr.set_defaults(fn=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, ExprError, FileNotFoundError, json.JSONDecodeError,
            im.MapConstructionError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegratorError, cr.CriteriaError, xp.ExperimentError,
            im.MapError) as err:
        print(f"failure: {err}", file=sys.stderr)
        return EXIT_HARD_FAIL


if __name__ == "__main__":
    sys.exit(main())
