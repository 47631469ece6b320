"""Experiment orchestration: ensemble sweeps, exponent fitting, CSV artifacts.

A config describes a (problem, chain) family, an n-range, and a b policy;
``run_experiment`` builds every instance, profiles it at the policy-selected
couplings, and emits one CSV row per (n, instance, b) with all short-path
metrics plus the per-row condition columns.  Instance seeds derive from
(seed, n, instance_id) via the documented splitmix64 key schedule, so the
CSV is byte-identical across reruns and worker counts.

CSV schema v1 columns:
    n, k, seed, instance-id, M, b, eta, e_star, pi_estar, overlap_init,
    overlap_opt, gap_D, gap_Hb, e_b, eff_runtime, delta_p_eta, pseudo_lip,
    gamma_emp, phase_b (nullable)
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .chains import ChainKernel, discriminant, make_chain
from .cost import (
    CostSpec,
    independence_constraints,
    make_csp_penalized,
    mean_energy_closed_form,
)
from .errors import ShortPathLabError, ValidationError
from .instances import InstanceSpec, gen_graph, two_log_n_over_n
from .rng import derive_seed
from .shortpath import (
    ShortPathProblem,
    phase_transition_b,
    profile,
    runtime_optimal_b,
)
from .spectral import SparseOperator, SpectralResult, lowest_two_eigs
from .statespace import build_statespace
from .theory import delta_p_stability, pseudo_lipschitz, spectral_density

CSV_COLUMNS = [
    "n", "k", "seed", "instance-id", "M", "b", "eta", "e_star", "pi_estar",
    "overlap_init", "overlap_opt", "gap_D", "gap_Hb", "e_b", "eff_runtime",
    "delta_p_eta", "pseudo_lip", "gamma_emp", "phase_b",
]

DEFAULT_B_GRID = tuple(round(0.05 * i, 2) for i in range(0, 26))  # 0 .. 1.25

CHAIN_FOR_COST = {
    "maxcut-hamming": "transposition-walk",
    "maxbisection": "transposition-walk",
    "mis": "glauber-hardcore",
    "mis-penalized": "hypercube-walk",
    "csp-penalized": "hypercube-walk",
    "ising": "glauber-ising",
    "sk": "glauber-sk",
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    n_values: tuple[int, ...]
    chain: str | None = None
    instances_per_n: int = 100
    eta: float = 0.5
    b_policy: str = "fixed"                        # fixed | phase-transition | runtime-optimal
    b_values: tuple[float, ...] = (0.0,)
    b_grid: tuple[float, ...] = DEFAULT_B_GRID
    seed: int = 0
    graph_model: str = "erdos-renyi"
    p_edge_rule: str = "2ln(n)/n"                  # 2ln(n)/n | p/(n-1) | const
    p_edge_value: float | None = None              # p for p/(n-1), value for const
    degree: int | None = None
    k_rule: str = "sqrt"                           # sqrt | half | fixed
    k_value: int | None = None
    penalty_rule: str = "n"                        # n | fixed
    penalty_value: float | None = None
    lam: float | None = None
    beta: float | None = None
    zeta: float = 0.0
    shift_rule: str = "none"                       # none | mean (MaxCut kinds)
    phase_b_hi: float = 2.0
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.problem not in CHAIN_FOR_COST:
            raise ValidationError(f"unknown problem kind {self.problem!r}")
        if not self.n_values:
            raise ValidationError("n_values must be nonempty")
        if self.instances_per_n < 1:
            raise ValidationError("instances_per_n must be >= 1")
        if self.b_policy not in ("fixed", "phase-transition", "runtime-optimal"):
            raise ValidationError(f"unknown b policy {self.b_policy!r}")
        if self.shift_rule not in ("none", "mean"):
            raise ValidationError(f"unknown shift rule {self.shift_rule!r}")
        if self.shift_rule == "mean" and self.problem not in ("maxcut-hamming", "maxbisection"):
            raise ValidationError("the closed-form mean shift applies to MaxCut kinds only")

    @property
    def chain_kind(self) -> str:
        return self.chain or CHAIN_FOR_COST[self.problem]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for key in ("n_values", "b_values", "b_grid"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def resolve_p_edge(cfg: ExperimentConfig, n: int) -> float:
    if cfg.p_edge_rule == "2ln(n)/n":
        return two_log_n_over_n(n)
    if cfg.p_edge_rule == "p/(n-1)":
        if cfg.p_edge_value is None:
            raise ValidationError("p/(n-1) rule needs p_edge_value (the average degree p)")
        return min(1.0, cfg.p_edge_value / (n - 1))
    if cfg.p_edge_rule == "const":
        if cfg.p_edge_value is None:
            raise ValidationError("const rule needs p_edge_value")
        return cfg.p_edge_value
    raise ValidationError(f"unknown p_edge rule {cfg.p_edge_rule!r}")


def resolve_k(cfg: ExperimentConfig, n: int) -> int | None:
    if cfg.problem == "maxbisection":
        return n // 2
    if cfg.problem != "maxcut-hamming":
        return None
    if cfg.k_rule == "sqrt":
        return int(math.isqrt(n))
    if cfg.k_rule == "half":
        return n // 2
    if cfg.k_rule == "fixed":
        if cfg.k_value is None:
            raise ValidationError("fixed k rule needs k_value")
        return cfg.k_value
    raise ValidationError(f"unknown k rule {cfg.k_rule!r}")


def resolve_penalty(cfg: ExperimentConfig, n: int) -> float:
    if cfg.penalty_rule == "n":
        return float(n)
    if cfg.penalty_rule == "fixed":
        if cfg.penalty_value is None:
            raise ValidationError("fixed penalty rule needs penalty_value")
        return cfg.penalty_value
    raise ValidationError(f"unknown penalty rule {cfg.penalty_rule!r}")


def instance_seed(cfg_seed: int, n: int, instance_id: int) -> int:
    """Per-instance 64-bit seed from the documented key schedule."""
    return derive_seed(cfg_seed, n, instance_id)


def build_instance(cfg: ExperimentConfig, n: int, instance_id: int):
    """(graph, space, cost, chain) for one ensemble member."""
    seed = instance_seed(cfg.seed, n, instance_id)
    k = resolve_k(cfg, n)
    spec = InstanceSpec(
        graph_model=cfg.graph_model, cost_kind=cfg.problem, seed=seed, n=n,
        p_edge=resolve_p_edge(cfg, n) if cfg.graph_model == "erdos-renyi" else None,
        degree=cfg.degree, k=k,
        penalty=resolve_penalty(cfg, n) if cfg.problem == "mis-penalized" else None,
    )
    graph = gen_graph(spec)
    problem = cfg.problem
    if problem in ("maxcut-hamming", "maxbisection"):
        space = build_statespace("hamming-slice", n, k=k)
        cost = CostSpec(kind=problem, graph=graph, k=k)
        if cfg.shift_rule == "mean":
            # mean-center via the exact closed form so E_pi[H] = 0
            cost = CostSpec(kind=problem, graph=graph, k=k,
                            shift=mean_energy_closed_form(cost, k))
        chain = make_chain("transposition-walk", space, zeta=cfg.zeta)
    elif problem == "mis":
        if cfg.lam is None:
            raise ValidationError("mis ensembles need the fugacity lam")
        space = build_statespace("independent-sets", n, graph=graph)
        cost = CostSpec(kind="mis", graph=graph)
        chain = make_chain("glauber-hardcore", space, lam=cfg.lam, zeta=cfg.zeta)
    elif problem == "mis-penalized":
        space = build_statespace("hypercube", n)
        cost = CostSpec(kind="mis-penalized", graph=graph, penalty=spec.penalty)
        chain = make_chain("hypercube-walk", space, zeta=cfg.zeta)
    elif problem == "csp-penalized":
        space = build_statespace("hypercube", n)
        base = CostSpec(kind="mis", graph=graph)
        cost = make_csp_penalized(base, independence_constraints(graph), space)
        chain = make_chain("hypercube-walk", space, zeta=cfg.zeta)
    elif problem == "ising":
        if cfg.beta is None:
            raise ValidationError("ising ensembles need beta")
        space = build_statespace("hypercube", n)
        cost = CostSpec(kind="ising", graph=graph)
        chain = make_chain("glauber-ising", space, graph=graph, beta=cfg.beta, zeta=cfg.zeta)
    else:  # sk
        if cfg.beta is None:
            raise ValidationError("sk ensembles need beta")
        space = build_statespace("hypercube", n)
        cost = CostSpec(kind="sk", graph=graph)
        chain = make_chain("glauber-sk", space, graph=graph, beta=cfg.beta, zeta=cfg.zeta)
    return graph, space, cost, chain


# Structural discriminants (transposition/hypercube) do not depend on the
# graph, so one copy and one -D spectrum serve every instance of an (n, k).
_STRUCTURAL_CACHE: dict[tuple, tuple[SparseOperator, SpectralResult]] = {}


def _shared_disc(chain: ChainKernel, cfg: ExperimentConfig):
    if chain.kind not in ("hypercube-walk", "transposition-walk"):
        return discriminant(chain), None
    key = (chain.kind, chain.n, getattr(chain.space, "k", None), cfg.zeta)
    hit = _STRUCTURAL_CACHE.get(key)
    if hit is None:
        disc = discriminant(chain)
        neg = SparseOperator(dim=disc.dim, indptr=disc.indptr,
                             indices=disc.indices, data=-disc.data, symmetric=True)
        hit = (disc, lowest_two_eigs(neg))
        _STRUCTURAL_CACHE[key] = hit
    return hit


def clear_structural_cache():
    _STRUCTURAL_CACHE.clear()


def run_instance(cfg: ExperimentConfig, n: int, instance_id: int) -> list[dict]:
    """All CSV rows for one instance (one per selected b)."""
    graph, space, cost, chain = build_instance(cfg, n, instance_id)
    disc, d_result = _shared_disc(chain, cfg)
    problem = ShortPathProblem.build(cost, space, chain, disc=disc, d_result=d_result)

    eta = cfg.eta
    phase_b = None
    if cfg.b_policy == "fixed":
        bs = list(cfg.b_values)
    elif cfg.b_policy == "phase-transition":
        pt = phase_transition_b(problem, eta, b_hi=cfg.phase_b_hi)
        phase_b = pt.b
        bs = [pt.b]
    else:
        b_opt, _ = runtime_optimal_b(problem, eta, cfg.b_grid)
        bs = [b_opt]

    d_eta, _ = delta_p_stability(chain, cost, eta)
    lip = pseudo_lipschitz(chain, cost)
    _, gamma_emp = spectral_density(cost, space, problem.dist, eta, problem.summary)

    rows = []
    for b in bs:
        m = profile(problem, b, eta)
        rows.append({
            "n": n, "k": resolve_k(cfg, n), "seed": instance_seed(cfg.seed, n, instance_id),
            "instance-id": instance_id, "M": space.M, "b": b, "eta": eta,
            "e_star": problem.summary.e_star, "pi_estar": problem.summary.pi_estar,
            "overlap_init": m.overlap_init, "overlap_opt": m.overlap_opt,
            "gap_D": m.gap_D, "gap_Hb": m.gap_Hb, "e_b": m.e_b,
            "eff_runtime": m.eff_runtime, "delta_p_eta": d_eta,
            "pseudo_lip": lip, "gamma_emp": gamma_emp, "phase_b": phase_b,
        })
    return rows


def _job(args):
    cfg, n, instance_id = args
    try:
        return (n, instance_id, run_instance(cfg, n, instance_id), None)
    except Exception as exc:  # noqa: BLE001 - failures are recorded, not fatal
        return (n, instance_id, [], f"{type(exc).__name__}: {exc}")


@dataclass
class ExperimentResult:
    rows: list[dict]
    failures: list[tuple[int, int, str]]
    csv_path: str | None = None

    def csv_text(self) -> str:
        return render_csv(self.rows)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full ensemble; deterministic output regardless of worker count.

    Per-instance failures are recorded and skipped; the run fails only when
    more than 10% of the instances fail.
    """
    jobs = [(cfg, n, i) for n in cfg.n_values for i in range(cfg.instances_per_n)]
    results = []
    workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=4))
    else:
        results = [_job(j) for j in jobs]

    rows: list[dict] = []
    failures: list[tuple[int, int, str]] = []
    for n, instance_id, instance_rows, err in results:
        if err is not None:
            failures.append((n, instance_id, err))
        else:
            rows.extend(instance_rows)
    if len(failures) > 0.10 * len(jobs):
        raise ShortPathLabError(
            f"{len(failures)}/{len(jobs)} instances failed; first: {failures[0]}"
        )
    rows.sort(key=lambda r: (r["n"], r["instance-id"], r["b"]))
    path = None
    if cfg.output:
        path = cfg.output
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(render_csv(rows))
    return ExperimentResult(rows=rows, failures=failures, csv_path=path)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def load_rows(path) -> list[dict]:
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        return [dict(r) for r in reader]


# ---------------------------------------------------------------------------
# worst-case exponent fitting
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    exponent: float
    stderr: float
    ci95: tuple[float, float]
    intercept: float
    points: list   # (log2 size, log2 response) per n, worst case

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent, "stderr": self.stderr,
            "ci95": list(self.ci95), "intercept": self.intercept,
            "points": [list(p) for p in self.points],
        }


def _row_value(row: dict, column: str) -> float:
    if column == "inv_overlap_opt":
        return 1.0 / float(row["overlap_opt"])
    if column == "inv_overlap_init":
        return 1.0 / float(row["overlap_init"])
    return float(row[column])


def fit_exponent(rows, size_column: str = "M", response_column: str = "inv_overlap_opt",
                 aggregation: str = "worst-per-n") -> FitResult:
    """OLS of log2(worst response per n) against log2(feasible size).

    ci95 = exponent +- 1.96 * stderr.  Requires three or more distinct n.
    """
    if aggregation != "worst-per-n":
        raise ValidationError(f"unknown aggregation {aggregation!r}")
    per_n: dict[int, tuple[float, float]] = {}
    for row in rows:
        n = int(row["n"])
        resp = _row_value(row, response_column)
        size = float(row[size_column])
        if not (math.isfinite(resp) and resp > 0 and size > 0):
            raise ValidationError(
                f"non-positive or non-finite response {resp} at n={n}"
            )
        if n not in per_n or resp > per_n[n][1]:
            per_n[n] = (size, resp)
    if len(per_n) < 3:
        raise ValidationError(f"need >= 3 distinct n values, got {len(per_n)}")
    pts = sorted((math.log2(size), math.log2(resp)) for size, resp in per_n.values())
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    m = len(x)
    xbar, ybar = x.mean(), y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - ybar)).sum() / sxx)
    intercept = float(ybar - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = max(m - 2, 1)
    stderr = float(math.sqrt((resid @ resid) / dof / sxx))
    ci = (slope - 1.96 * stderr, slope + 1.96 * stderr)
    return FitResult(exponent=slope, stderr=stderr, ci95=ci, intercept=intercept,
                     points=pts)
