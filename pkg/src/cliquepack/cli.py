"""Command-line entry point: ``cliquepack {predict,simulate,pack,verify,zeta}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .cliques import DEFAULT_INDEX_CAP, CapacityError
from .experiments import (
    ConfigError,
    ExperimentConfig,
    replicate,
    zeta_monte_carlo,
    zeta_sweep,
)
from .graph import EdgeListError, GraphState, Seed
from .process import parse_packing, run_to_exhaustion, verify_packing
from .theory import (
    TheoryParams,
    exact_zeta2,
    find_k0,
    first_step_below,
    heuristic_duration,
    nominal_schedule,
    upper_bound_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_VERIFY = 4

OUT_DIR_ENV = "CLIQUEPACK_OUT_DIR"


def _version_line(config: dict) -> str:
    return f"# cliquepack {__version__} config={json.dumps(config, sort_keys=True)}"


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        print(_version_line(payload["config"]))
        for line in text_lines:
            print(line)


def _resolve_k(args) -> int:
    if (args.k is None) == (args.C is None):
        raise ConfigError("supply exactly one of --k or --C")
    if args.n < 2:
        raise ConfigError("--n must be >= 2")
    if not 0 < args.p < 1:
        raise ConfigError("--p must lie in (0, 1)")
    k = args.k if args.k is not None else find_k0(args.n, args.p) - args.C
    if not 1 <= k <= args.n:
        raise ConfigError(f"resolved k={k} must satisfy 1 <= k <= n")
    return k


# ---------------------------------------------------------------- subcommands
def cmd_predict(args) -> int:
    k = _resolve_k(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = TheoryParams.from_npk(args.n, args.p, k)
    config = {"subcommand": "predict", "n": args.n, "p": args.p, "k": k, "C": args.C,
              "beta": args.beta, "epsilon": args.epsilon}
    payload: dict = {"config": config, "version": __version__, "params": params.to_dict(), "warnings": []}
    lines = [
        f"k0 = {params.k0}   k = {k}   gamma = {params.gamma:.6f}   delta = {params.delta:.6f}",
        f"m_star = {params.m_star}   nominal e0 = {params.e0_nominal:.1f}",
    ]
    if params.gamma <= 2:
        msg = f"gamma = {params.gamma:.4f} <= 2: out of regime, trajectory and upper-bound predictions do not apply"
        payload["warnings"].append(msg)
        lines.append("WARNING: " + msg)
    else:
        m_conj, m_traj = heuristic_duration(args.n, args.p, k)
        sched = nominal_schedule(params, params.m_star)
        _, log_qt_traj = first_step_below(params.e0_nominal, k, float(sched.Qt[0]), float(args.n) ** 2)
        ub = upper_bound_report(args.n, args.p, k, args.beta, args.epsilon, params.gamma)
        payload["heuristic_duration"] = {"m_conj": m_conj, "m_traj": m_traj}
        payload["schedule"] = {
            "Qtilde0": float(sched.Qt[0]), "gQ0": float(sched.gQ[0]), "gY0": float(sched.gY[0]),
            "log_Qtilde_at_m_traj": log_qt_traj,
            "gQ_at_m_star": float(sched.gQ[-1]),
            "gY_at_m_star": float(sched.gY[-1]),
            "gY_at_m_star_below_n_pow_minus_delta_over_4": bool(sched.gY[-1] <= args.n ** (-params.delta / 4)),
        }
        payload["upper_bound"] = ub.to_dict()
        lines += [
            f"heuristic duration: conjectured {m_conj:.3f}, trajectory scan m(Qt <= n^2) = {m_traj}",
            f"Qtilde(0) = {sched.Qt[0]:.6g}   gQ(0) = {sched.gQ[0]:.4f}   gY(0) = {sched.gY[0]:.4f}",
            f"t0 = {ub.t0:.6g}   t(beta={args.beta}, eps={args.epsilon}) = {ub.t_threshold:.6g}",
            f"log first moment = {ub.log_first_moment:.6g}   bracket = {ub.bracket_value:.6g}"
            f"   (target eps(gamma-2) ln n / 6 = {ub.bracket_target:.6g})",
        ]
        lines += [f"note: {s}" for s in ub.notes]
    if params.m_star == 0:
        note = "m_star = 0: the trajectory theorem is vacuous at this scale"
        payload["warnings"].append(note)
        lines.append("note: " + note)
    _emit(args, payload, lines)
    return EXIT_OK


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_DIR_ENV) or "cliquepack-out")


def cmd_simulate(args) -> int:
    if args.exhaustion:
        horizon: str | int = "exhaustion"
    elif args.m_star:
        horizon = "m_star"
    elif args.horizon is not None:
        horizon = args.horizon
    else:
        horizon = "exhaustion"
    out = _out_dir(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        config = ExperimentConfig(
            n=args.n, p=args.p, k=args.k, C=args.C, replicas=args.replicas, master_seed=args.seed,
            horizon=horizon, tracked_edges=args.tracked_edges, cap=args.cap, jobs=args.jobs,
            out_dir=str(out), paranoid=args.paranoid,
        )
    report = replicate(config)
    if report.failed:
        print(f"resource cap exceeded: {report.failed[0]['error']}", file=sys.stderr)
        return EXIT_CAP
    if args.csv:
        print(_version_line(report.config))
        sys.stdout.write(report.to_csv())
    elif args.json:
        sys.stdout.write(report.to_json())
    else:
        print(_version_line(report.config))
        s = report.summary
        print(f"k = {config.k}   replicas = {config.replicas}   out = {out}")
        print(f"M: {s['M_values']}")
        print(f"median max |Q/Qt - 1| over window = {s['median_max_dev_Q']}"
              f"   (threshold {s['adherence_threshold']})")
        print(f"packings valid: {s['packings_valid']}   initial checks passed: "
              f"{s['init_checks_pass_count']}/{config.replicas}")
        for w in config.warnings:
            print("note: " + w)
    return EXIT_OK


def cmd_pack(args) -> int:
    g = GraphState.load(args.graph)
    if not 2 <= args.k <= g.n:
        raise ConfigError(f"--k must satisfy 2 <= k <= n={g.n}")
    result, trace = run_to_exhaustion(g, args.k, Seed(args.seed).generator(), cap=args.cap, tracked_edges=0)
    if args.output:
        Path(args.output).write_text(result.to_lines())
    payload = {"config": {"subcommand": "pack", "graph": str(args.graph), "k": args.k, "seed": args.seed},
               "version": __version__, **result.to_dict()}
    lines = [f"M = {result.M}   final k-clique count = {result.final_clique_count}   "
             f"valid = {result.verification.passed}"]
    if not args.output and not args.json:
        lines.append(result.to_lines().rstrip("\n"))
    _emit(args, payload, lines)
    return EXIT_OK if result.verification.passed else EXIT_VERIFY


def cmd_verify(args) -> int:
    g = GraphState.load(args.graph)
    packing = parse_packing(Path(args.packing).read_text(), args.k)
    k = args.k if args.k is not None else (len(packing[0]) if packing else 2)
    rep = verify_packing(g, packing, k)
    payload = {"config": {"subcommand": "verify", "graph": str(args.graph), "packing": str(args.packing), "k": k},
               "version": __version__, **rep.to_dict()}
    if rep.passed:
        lines = [f"PASS: {rep.checked} edge-disjoint {k}-cliques"]
    else:
        lines = [f"FAIL: {rep.reason} at clique {rep.clique_index} witness {rep.witness}"
                 + (f" (also used by clique {rep.other_index})" if rep.other_index is not None else "")]
    _emit(args, payload, lines)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _parse_ts(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",")]


def cmd_zeta(args) -> int:
    ts = _parse_ts(args.t)
    if any(t < 1 for t in ts) or args.trials < 1:
        raise ConfigError("--t and --trials must be >= 1")
    if not 1 <= args.k <= args.n:
        raise ConfigError("need 1 <= k <= n")
    config = {"subcommand": "zeta", "n": args.n, "k": args.k, "t": args.t, "trials": args.trials, "seed": args.seed}
    if len(ts) > 1:
        rows = zeta_sweep(args.n, args.k, ts, args.trials, args.seed, beta=args.beta)
        if args.csv or not args.json:
            print(_version_line(config))
            print("t,estimate,stderr,heuristic_log")
            for r in rows:
                print(f"{r['t']},{r['estimate']!r},{r['stderr']!r},{r['heuristic_log']!r}")
        else:
            print(json.dumps({"config": config, "version": __version__, "rows": rows}, indent=2, sort_keys=True))
        return EXIT_OK
    t = ts[0]
    est, se = zeta_monte_carlo(args.n, args.k, t, args.trials, Seed(args.seed))
    payload = {"config": config, "version": __version__, "estimate": est, "stderr": se}
    lines = [f"zeta({args.n},{args.k},{t}) ~ {est:.6f} +- {se:.6f}"]
    if t == 2:
        exact = exact_zeta2(args.n, args.k)
        payload["exact"] = float(exact)
        payload["z_score"] = (est - float(exact)) / se if se > 0 else 0.0
        lines.append(f"exact = {exact} = {float(exact):.6f}")
    _emit(args, payload, lines)
    return EXIT_OK


# ---------------------------------------------------------------------- parser
def _add_npk(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int)
    g.add_argument("--C", type=int, help="use k = k0 - C")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cliquepack", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cliquepack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="theory values for (n, p, k)")
    _add_npk(p)
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=0.5)
    _add_format(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run the removal process on G(n, p) replicas")
    _add_npk(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=1)
    h = p.add_mutually_exclusive_group()
    h.add_argument("--horizon", type=int)
    h.add_argument("--exhaustion", action="store_true")
    h.add_argument("--m-star", action="store_true")
    p.add_argument("--tracked-edges", type=int, default=64)
    p.add_argument("--cap", type=int, default=DEFAULT_INDEX_CAP)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--paranoid", action="store_true")
    p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./cliquepack-out)")
    _add_format(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pack", help="extract a packing from a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_INDEX_CAP)
    p.add_argument("--output")
    _add_format(p)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("verify", help="check a packing file against a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--packing", required=True)
    p.add_argument("--k", type=int)
    _add_format(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("zeta", help="Monte Carlo estimate of zeta(n, k, t)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", default="2", help="an integer, a list 1,2,3 or a range 1..12")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.25)
    _add_format(p)
    p.set_defaults(func=cmd_zeta)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, EdgeListError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
