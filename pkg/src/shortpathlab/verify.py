"""Cross-module property suite behind the ``verify`` subcommand.

Fast level: the structural invariants (stochasticity, detailed balance,
discriminant eigenpair, b=0 limits, closed-form matches, eigensolver oracle
agreement, condition-ordering chains, H_b monotonicity in b).  Full level
adds ensemble smoke runs at the upper end of the desk scale.  Output is a
machine-readable report; any hard failure makes the process exit nonzero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import spectral
from .chains import detailed_balance_residual, discriminant, make_chain, stationary
from .cost import CostSpec, ground_truth, mean_energy_closed_form
from .errors import ShortPathLabError
from .experiment import ExperimentConfig, fit_exponent, run_experiment
from .instances import Graph, InstanceSpec, gen_graph
from .rng import make_rng
from .shortpath import ShortPathProblem, phase_transition_b, profile
from .spectral import assemble_Hb, lowest_two_eigs
from .statespace import build_statespace
from .theory import delta_p_stability, ls_constant_estimate, pseudo_lipschitz


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: str


@dataclass
class VerifyReport:
    level: str
    passed: bool
    checks: list

    def to_json(self) -> str:
        return json.dumps(
            {"level": self.level, "passed": self.passed,
             "checks": [asdict(c) for c in self.checks]},
            indent=2,
        )


def _er_graph(n: int, seed: int, p: float | None = None) -> Graph:
    spec = InstanceSpec(graph_model="erdos-renyi", cost_kind="maxcut-hamming",
                        seed=seed, n=n,
                        p_edge=p if p is not None else min(1.0, 2 * math.log(n) / n))
    return gen_graph(spec)


def _sample_problems(small: bool = True):
    """A representative (cost, space, chain) per pairing, small sizes."""
    out = []
    g = _er_graph(8, seed=11)
    space = build_statespace("hamming-slice", 8, k=3)
    out.append(("maxcut-hamming/transposition",
                CostSpec(kind="maxcut-hamming", graph=g, k=3), space,
                make_chain("transposition-walk", space)))
    g2 = _er_graph(8, seed=12)
    space2 = build_statespace("hamming-slice", 8, k=4)
    out.append(("maxbisection/transposition",
                CostSpec(kind="maxbisection", graph=g2, k=4), space2,
                make_chain("transposition-walk", space2)))
    g3 = _er_graph(8, seed=13)
    space3 = build_statespace("independent-sets", 8, graph=g3)
    out.append(("mis/glauber-hardcore",
                CostSpec(kind="mis", graph=g3), space3,
                make_chain("glauber-hardcore", space3, lam=1.0)))
    g4 = _er_graph(6, seed=14)
    space4 = build_statespace("hypercube", 6)
    out.append(("mis-penalized/hypercube",
                CostSpec(kind="mis-penalized", graph=g4, penalty=6.0), space4,
                make_chain("hypercube-walk", space4)))
    g5 = _er_graph(6, seed=15)
    out.append(("ising/glauber-ising",
                CostSpec(kind="ising", graph=g5), space4,
                make_chain("glauber-ising", space4, graph=g5, beta=0.3)))
    spec_sk = InstanceSpec(graph_model="complete", cost_kind="sk", seed=16, n=6)
    g6 = gen_graph(spec_sk)
    out.append(("sk/glauber-sk",
                CostSpec(kind="sk", graph=g6), space4,
                make_chain("glauber-sk", space4, graph=g6, beta=0.25)))
    return out


def _check_chain_invariants() -> CheckResult:
    worst_db, worst_row = 0.0, 0.0
    for name, _cost, _space, chain in _sample_problems():
        P = chain.transition_matrix()
        rows = np.asarray(P.sum(axis=1)).ravel()
        worst_row = max(worst_row, float(np.abs(rows - 1.0).max()))
        worst_db = max(worst_db, detailed_balance_residual(chain))
    ok = worst_row <= 1e-14 and worst_db <= 1e-12
    return CheckResult("chain-stochasticity-and-balance", ok,
                       f"max row-sum dev {worst_row:.2e}, max DB residual {worst_db:.2e}")


def _check_discriminant() -> CheckResult:
    worst_eig, worst_norm = 0.0, 0.0
    for name, _cost, _space, chain in _sample_problems():
        D = discriminant(chain)
        sq = stationary(chain).sqrt_probabilities()
        worst_eig = max(worst_eig, float(np.abs(D.matvec(sq) - sq).max()))
        worst_norm = max(worst_norm, float(np.abs(np.linalg.eigvalsh(D.to_dense())).max()))
    ok = worst_eig <= 1e-10 and worst_norm <= 1.0 + 1e-10
    return CheckResult("discriminant-top-eigenpair", ok,
                       f"max |D sqrt(pi) - sqrt(pi)| {worst_eig:.2e}, max ||D|| {worst_norm:.12f}")


def _check_b0_limits() -> CheckResult:
    worst = 0.0
    for name, cost, space, chain in _sample_problems():
        problem = ShortPathProblem.build(cost, space, chain)
        m = profile(problem, 0.0, 0.5)
        worst = max(worst,
                    abs(m.overlap_init - 1.0),
                    abs(m.e_b + 1.0),
                    abs(m.overlap_opt**2 - problem.summary.pi_estar))
    ok = worst <= 1e-9
    return CheckResult("trivial-b0-limits", ok, f"max deviation {worst:.2e}")


def _check_closed_form_mean() -> CheckResult:
    worst = 0.0
    for n, k, seed in [(6, 2, 3), (8, 3, 4), (10, 3, 5), (12, 6, 6)]:
        g = _er_graph(n, seed)
        space = build_statespace("hamming-slice", n, k=k)
        cost = CostSpec(kind="maxcut-hamming", graph=g, k=k)
        chain = make_chain("transposition-walk", space)
        summary = ground_truth(cost, space, stationary(chain))
        worst = max(worst, abs(summary.mean_pi - mean_energy_closed_form(cost, k)))
    ok = worst <= 1e-12
    return CheckResult("mean-energy-closed-form", ok, f"max |mean - closed form| {worst:.2e}")


def _check_eigensolver_oracle() -> CheckResult:
    rng = make_rng(2024, 77)
    worst = 0.0
    for trial in range(10):
        n = int(rng.integers(7, 10))
        k = int(rng.integers(2, 4))
        g = _er_graph(n, seed=int(rng.integers(1 << 30)))
        space = build_statespace("hamming-slice", n, k=k)
        cost = CostSpec(kind="maxcut-hamming", graph=g, k=k)
        chain = make_chain("transposition-walk", space)
        problem = ShortPathProblem.build(cost, space, chain)
        op = problem.hamiltonian(0.7, 0.5)
        lz = lowest_two_eigs(op, method="lanczos")
        dn = lowest_two_eigs(op, method="dense")
        worst = max(worst, abs(lz.lambda0 - dn.lambda0), abs(lz.lambda1 - dn.lambda1))
    ok = worst <= 1e-9
    return CheckResult("lanczos-vs-dense", ok, f"max eigenvalue deviation {worst:.2e}")


def _check_ordering_chain() -> CheckResult:
    worst = -np.inf
    for name, cost, space, chain in _sample_problems():
        d_eta, d_tilde = delta_p_stability(chain, cost, 0.5)
        lip = pseudo_lipschitz(chain, cost)
        worst = max(worst, d_eta - d_tilde, d_tilde - math.sqrt(lip))
    ok = worst <= 1e-12
    return CheckResult("condition-ordering", ok,
                       f"max violation of Delta(eta) <= Delta~ <= sqrt(||H||_P): {worst:.2e}")


def _check_hb_monotonicity() -> CheckResult:
    """lambda0(H_b) must sit at/below -1 and decrease in b; a sign-flipped
    g_eta breaks both.  Uses assemble_Hb so the clamp path under test is the
    module-level one."""
    g = _er_graph(8, seed=21)
    space = build_statespace("hamming-slice", 8, k=3)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=3)
    chain = make_chain("transposition-walk", space)
    dist = stationary(chain)
    summary = ground_truth(cost, space, dist)
    D = discriminant(chain)
    prev = None
    ok = True
    details = []
    for b in (0.0, 0.3, 0.6, 0.9):
        hb = assemble_Hb(D, cost, space, summary, b, 0.5)
        lam0 = lowest_two_eigs(hb).lambda0
        if lam0 > -1.0 + 1e-9:
            ok = False
            details.append(f"lambda0({b})={lam0:.6f} above -1")
        if prev is not None and lam0 > prev + 1e-10:
            ok = False
            details.append(f"lambda0 increased at b={b}")
        prev = lam0
    return CheckResult("hb-b-monotonicity", ok, "; ".join(details) or "monotone, <= -1")


def _check_ls_bracket() -> CheckResult:
    g = _er_graph(6, seed=31)
    space = build_statespace("independent-sets", 6, graph=g)
    chain = make_chain("glauber-hardcore", space, lam=1.0)
    est = ls_constant_estimate(chain, n_starts=3, maxiter=120)
    ok = est.omega_estimate <= est.delta_exact + 1e-9
    return CheckResult("ls-estimate-bracket", ok,
                       f"omega_est {est.omega_estimate:.4f} vs delta {est.delta_exact:.4f}")


def _check_ensemble_smoke() -> CheckResult:
    cfg = ExperimentConfig(problem="maxcut-hamming", n_values=(24,),
                           instances_per_n=2, b_policy="fixed", b_values=(0.78,),
                           seed=7, workers=1)
    res = run_experiment(cfg)
    ok = len(res.rows) == 2 and all(np.isfinite(r["overlap_opt"]) for r in res.rows)
    return CheckResult("ensemble-smoke-n24", ok, f"{len(res.rows)} rows")


def _check_phase_smoke() -> CheckResult:
    g = _er_graph(14, seed=41)
    space = build_statespace("hamming-slice", 14, k=3)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=3)
    chain = make_chain("transposition-walk", space)
    problem = ShortPathProblem.build(cost, space, chain)
    pt = phase_transition_b(problem, 0.5)
    ok = 0.0 <= pt.b <= 2.0
    return CheckResult("phase-b-smoke", ok, f"phase b = {pt.b:.4f} saturated={pt.saturated}")


def _check_mis_penalized_smoke() -> CheckResult:
    cfg = ExperimentConfig(problem="mis-penalized", n_values=(14,),
                           instances_per_n=2, b_policy="fixed", b_values=(0.6,),
                           seed=9, workers=1)
    res = run_experiment(cfg)
    ok = len(res.rows) == 2 and all(r["overlap_init"] <= 1 + 1e-9 for r in res.rows)
    return CheckResult("mis-penalized-smoke", ok, f"{len(res.rows)} rows")


FAST_CHECKS = [
    _check_chain_invariants,
    _check_discriminant,
    _check_b0_limits,
    _check_closed_form_mean,
    _check_eigensolver_oracle,
    _check_ordering_chain,
    _check_hb_monotonicity,
    _check_ls_bracket,
]

FULL_CHECKS = FAST_CHECKS + [
    _check_ensemble_smoke,
    _check_phase_smoke,
    _check_mis_penalized_smoke,
]


def verify_suite(level: str = "fast") -> VerifyReport:
    if level not in ("fast", "full"):
        raise ShortPathLabError(f"unknown verify level {level!r}")
    checks = FAST_CHECKS if level == "fast" else FULL_CHECKS
    results = []
    for fn in checks:
        try:
            results.append(fn())
        except Exception as exc:  # noqa: BLE001 - a crashed check is a failed check
            results.append(CheckResult(fn.__name__.strip("_"), False,
                                       f"{type(exc).__name__}: {exc}"))
    return VerifyReport(level=level, passed=all(c.passed for c in results),
                        checks=results)
