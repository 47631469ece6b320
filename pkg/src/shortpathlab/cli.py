"""Command-line interface.

Subcommands: gen, solve, sweep-b, phase-b, run, fit, verify, report.
``run`` takes a YAML config (schema documented in the README); flags mirror
config keys and override them.  Exit codes: 0 success, 2 validation,
3 convergence, 4 capacity, 1 anything else (including verify failures).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import yaml

from .chains import make_chain
from .cost import CostSpec, independence_constraints, make_csp_penalized
from .errors import ValidationError, exit_code_for
from .experiment import (
    ExperimentConfig,
    fit_exponent,
    load_rows,
    render_csv,
    run_experiment,
)
from .instances import InstanceSpec, gen_graph, load_graph, save_graph, two_log_n_over_n
from .report import render_report
from .shortpath import ShortPathProblem, phase_transition_b, profile, runtime_optimal_b
from .statespace import build_statespace
from .theory import condition_report
from .verify import verify_suite


def _add_instance_flags(p: argparse.ArgumentParser):
    p.add_argument("--problem", required=True,
                   choices=["maxcut-hamming", "maxbisection", "mis", "mis-penalized",
                            "csp-penalized", "ising", "sk"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--graph", help="load the graph from a file instead of generating")
    p.add_argument("--graph-model", default="erdos-renyi",
                   choices=["erdos-renyi", "random-regular", "complete"])
    p.add_argument("--p-edge", type=float, help="ER edge probability; default 2*ln(n)/n")
    p.add_argument("--degree", type=int, help="degree for random-regular")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, help="Hamming weight; default floor(sqrt(n))")
    p.add_argument("--penalty", type=float, help="rho for mis-penalized; default n")
    p.add_argument("--lam", type=float, default=1.0, help="hardcore fugacity")
    p.add_argument("--beta", type=float, default=0.2, help="Glauber inverse temperature")
    p.add_argument("--zeta", type=float, default=0.0, help="laziness")
    p.add_argument("--eta", type=float, default=0.5)


def _build_single(args) -> ShortPathProblem:
    n = args.n
    if args.graph:
        graph = load_graph(args.graph)
        if graph.n != n:
            raise ValidationError(f"graph file has n={graph.n}, flag says {n}")
        if args.problem == "sk" and graph.weights is None:
            raise ValidationError("sk needs a weighted graph")
    else:
        spec = InstanceSpec(
            graph_model=args.graph_model, cost_kind=args.problem, seed=args.seed,
            n=n,
            p_edge=(args.p_edge if args.p_edge is not None else two_log_n_over_n(n))
            if args.graph_model == "erdos-renyi" else None,
            degree=args.degree,
            k=args.k,
        )
        graph = gen_graph(spec)
    problem_kind = args.problem
    if problem_kind in ("maxcut-hamming", "maxbisection"):
        k = args.k if args.k is not None else (
            n // 2 if problem_kind == "maxbisection" else int(math.isqrt(n)))
        space = build_statespace("hamming-slice", n, k=k)
        cost = CostSpec(kind=problem_kind, graph=graph, k=k)
        chain = make_chain("transposition-walk", space, zeta=args.zeta)
    elif problem_kind == "mis":
        space = build_statespace("independent-sets", n, graph=graph)
        cost = CostSpec(kind="mis", graph=graph)
        chain = make_chain("glauber-hardcore", space, lam=args.lam, zeta=args.zeta)
    elif problem_kind == "mis-penalized":
        space = build_statespace("hypercube", n)
        rho = args.penalty if args.penalty is not None else float(n)
        cost = CostSpec(kind="mis-penalized", graph=graph, penalty=rho)
        chain = make_chain("hypercube-walk", space, zeta=args.zeta)
    elif problem_kind == "csp-penalized":
        space = build_statespace("hypercube", n)
        cost = make_csp_penalized(CostSpec(kind="mis", graph=graph),
                                  independence_constraints(graph), space)
        chain = make_chain("hypercube-walk", space, zeta=args.zeta)
    elif problem_kind == "ising":
        space = build_statespace("hypercube", n)
        cost = CostSpec(kind="ising", graph=graph)
        chain = make_chain("glauber-ising", space, graph=graph, beta=args.beta,
                           zeta=args.zeta)
    else:
        space = build_statespace("hypercube", n)
        cost = CostSpec(kind="sk", graph=graph)
        chain = make_chain("glauber-sk", space, graph=graph, beta=args.beta,
                           zeta=args.zeta)
    return ShortPathProblem.build(cost, space, chain)


def _metrics_dict(m) -> dict:
    return {
        "b": m.b, "eta": m.eta, "overlap_init": m.overlap_init,
        "overlap_opt": m.overlap_opt, "gap_D": m.gap_D, "gap_Hb": m.gap_Hb,
        "e_b": m.e_b, "eff_runtime": m.eff_runtime, "trace_dist": m.trace_dist,
        "degenerate": m.degenerate,
    }


def _cmd_gen(args) -> int:
    spec = InstanceSpec(
        graph_model=args.graph_model, cost_kind=args.problem, seed=args.seed,
        n=args.n,
        p_edge=(args.p_edge if args.p_edge is not None else two_log_n_over_n(args.n))
        if args.graph_model == "erdos-renyi" else None,
        degree=args.degree, k=args.k,
    )
    g = gen_graph(spec)
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.m} weighted={int(g.weights is not None)}")
    return 0


def _cmd_solve(args) -> int:
    problem = _build_single(args)
    m = profile(problem, args.b, args.eta)
    out = {"metrics": _metrics_dict(m),
           "e_star": problem.summary.e_star,
           "pi_estar": problem.summary.pi_estar,
           "M": problem.space.M}
    if args.conditions:
        rep = condition_report(problem, args.eta, args.b)
        out["conditions"] = json.loads(rep.to_json())
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _parse_grid(text: str) -> list[float]:
    # "start:stop:step" or comma-separated values
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        out = []
        b = start
        while b <= stop + 1e-12:
            out.append(round(b, 10))
            b += step
        return out
    return [float(x) for x in text.split(",")]


def _cmd_sweep_b(args) -> int:
    problem = _build_single(args)
    grid = _parse_grid(args.b_grid)
    rows = []
    for b in grid:
        m = profile(problem, b, args.eta)
        rows.append({
            "n": args.n, "k": getattr(problem.space, "k", None), "seed": args.seed,
            "instance-id": 0, "M": problem.space.M, "b": b, "eta": args.eta,
            "e_star": problem.summary.e_star, "pi_estar": problem.summary.pi_estar,
            "overlap_init": m.overlap_init, "overlap_opt": m.overlap_opt,
            "gap_D": m.gap_D, "gap_Hb": m.gap_Hb, "e_b": m.e_b,
            "eff_runtime": m.eff_runtime, "delta_p_eta": None, "pseudo_lip": None,
            "gamma_emp": None, "phase_b": None,
        })
    text = render_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        sys.stdout.write(text)
    if args.pick_optimal:
        b_opt, m = runtime_optimal_b(problem, args.eta, grid)
        print(json.dumps({"runtime_optimal_b": b_opt, "metrics": _metrics_dict(m)}))
    return 0


def _cmd_phase_b(args) -> int:
    problem = _build_single(args)
    pt = phase_transition_b(problem, args.eta, threshold=args.threshold,
                            b_lo=args.b_lo, b_hi=args.b_hi, tol=args.tol)
    print(json.dumps({
        "phase_b": pt.b, "saturated": pt.saturated, "monotone": pt.monotone,
        "used_grid_fallback": pt.used_grid_fallback,
        "trajectory": [[b, ov] for b, ov in pt.trajectory],
    }, indent=2))
    return 0


_RUN_OVERRIDES = ("seed", "instances_per_n", "eta", "workers", "output")


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    for key in _RUN_OVERRIDES:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    cfg = ExperimentConfig.from_dict(raw)
    res = run_experiment(cfg)
    where = res.csv_path or "stdout"
    if res.csv_path is None:
        sys.stdout.write(res.csv_text())
    print(f"# {len(res.rows)} rows, {len(res.failures)} failures -> {where}",
          file=sys.stderr)
    for n, i, reason in res.failures:
        print(f"# failed n={n} instance={i}: {reason}", file=sys.stderr)
    return 0


def _cmd_fit(args) -> int:
    rows = load_rows(args.csv)
    fit = fit_exponent(rows, size_column=args.size_column,
                       response_column=args.response)
    print(json.dumps(fit.to_dict(), indent=2))
    return 0


def _cmd_verify(args) -> int:
    rep = verify_suite(args.level)
    print(rep.to_json())
    return 0 if rep.passed else 1


def _cmd_report(args) -> int:
    written = render_report(args.csv, out_dir=args.out_dir,
                            kinds=tuple(args.kinds.split(",")))
    for path in written:
        print(f"wrote {path}")
    if not written:
        print("no figure could be rendered from this CSV", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shortpathlab",
                                 description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and save a graph instance")
    _add_instance_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("solve", help="profile a single instance at one b")
    _add_instance_flags(p)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--conditions", action="store_true",
                   help="include the condition report")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep-b", help="profile a single instance over a b grid")
    _add_instance_flags(p)
    p.add_argument("--b-grid", default="0:1.25:0.05",
                   help="start:stop:step or comma-separated values")
    p.add_argument("--out")
    p.add_argument("--pick-optimal", action="store_true")
    p.set_defaults(fn=_cmd_sweep_b)

    p = sub.add_parser("phase-b", help="phase-transition b for a single instance")
    _add_instance_flags(p)
    p.add_argument("--threshold", type=float, default=0.99)
    p.add_argument("--b-lo", type=float, default=0.0)
    p.add_argument("--b-hi", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(fn=_cmd_phase_b)

    p = sub.add_parser("run", help="run an ensemble experiment from a config")
    p.add_argument("--config", required=True, help="YAML config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--instances-per-n", dest="instances_per_n", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("fit", help="worst-case exponent fit from a CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--size-column", default="M")
    p.add_argument("--response", default="inv_overlap_opt")
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("verify", help="run the cross-module property suite")
    p.add_argument("--level", choices=["fast", "full"], default="fast")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="render figures from a CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--kinds", default="scaling,phase,sweep")
    p.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - map to documented exit codes
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
