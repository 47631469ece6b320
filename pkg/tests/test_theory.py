import math

import numpy as np
import pytest

from shortpathlab.chains import discriminant, make_chain, stationary
from shortpathlab.cost import CostSpec, energies, ground_truth
from shortpathlab.errors import ValidationError
from shortpathlab.instances import Graph, InstanceSpec, gen_graph
from shortpathlab.shortpath import ShortPathProblem
from shortpathlab.spectral import g_eta
from shortpathlab.statespace import build_statespace
from shortpathlab.theory import (
    AnnealStep,
    anneal_overlap_schedule,
    alpha_p,
    b_star,
    condition_report,
    delta_p_stability,
    ls_constant_estimate,
    maxcut_delta_tilde_bound,
    maxcut_pseudo_lipschitz_expansion,
    poincare_tail_check,
    predicted_exponent,
    pseudo_lipschitz,
    pseudo_lipschitz_per_state,
    spectral_density,
    subdepolarizing_margin,
    tail_bound_constants,
    transposition_ls_bound,
)
from tests.conftest import er_graph


def brute_force_pseudo_lip(chain, cost) -> float:
    """Oracle: per-state double loop over kernel rows."""
    vals = energies(cost, chain.space.masks)
    worst = 0.0
    for idx in range(chain.space.M):
        nbrs, probs, _ = chain.row(idx)
        acc = float(np.sum(probs * (vals[nbrs] - vals[idx]) ** 2))
        worst = max(worst, acc)
    return worst


def maxcut_setup(n, k, seed, shift=0.0):
    g = er_graph(n, seed)
    space = build_statespace("hamming-slice", n, k=k)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=k, shift=shift)
    chain = make_chain("transposition-walk", space)
    return g, space, cost, chain


def test_pseudo_lipschitz_constant_cost_is_zero():
    g = Graph(n=4, edges=tuple((i, j) for i in range(4) for j in range(i + 1, 4)))
    space = build_statespace("hamming-slice", 4, k=2)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=2)  # K4: constant on the slice
    chain = make_chain("transposition-walk", space)
    assert pseudo_lipschitz(chain, cost) == 0.0


def test_pseudo_lipschitz_mis_single_site_bound():
    g = er_graph(8, seed=1)
    space = build_statespace("independent-sets", 8, graph=g)
    chain = make_chain("glauber-hardcore", space, lam=0.7)
    # single-site updates change H = -sum x_i by at most 1
    assert pseudo_lipschitz(chain, CostSpec(kind="mis", graph=g)) <= 1.0 + 1e-15


@pytest.mark.parametrize("n,k,seed", [(6, 2, 0), (8, 3, 1), (9, 4, 2), (10, 3, 3), (10, 5, 4)])
def test_pseudo_lipschitz_expansion_matches_brute_force(n, k, seed):
    g, space, cost, chain = maxcut_setup(n, k, seed)
    brute = brute_force_pseudo_lip(chain, cost)
    closed = maxcut_pseudo_lipschitz_expansion(g, k)
    assert abs(brute - closed) <= 1e-12
    # per-state agreement as well
    per_closed = maxcut_pseudo_lipschitz_expansion(g, k, per_state=True)
    per_brute = pseudo_lipschitz_per_state(chain, cost)
    assert np.abs(per_closed - per_brute).max() <= 1e-12


def test_delta_p_constant_cost():
    g = Graph(n=4, edges=tuple((i, j) for i in range(4) for j in range(i + 1, 4)))
    space = build_statespace("hamming-slice", 4, k=2)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=2)
    chain = make_chain("transposition-walk", space)
    d_eta, d_tilde = delta_p_stability(chain, cost, 0.5)
    assert d_eta == 0.0 and abs(d_tilde) <= 1e-12


def brute_force_delta_eta(chain, cost, eta) -> float:
    """Oracle for Delta_P(eta): per state, binary-search the smallest Delta
    satisfying the defining inequality."""
    vals = energies(cost, chain.space.masks)
    abs_e = abs(vals.min())
    h = g_eta(vals / abs_e, eta)
    ph = chain.expect_step(h)
    worst = 0.0
    for idx in range(chain.space.M):
        lo, hi = 0.0, 3.0 * abs_e
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if g_eta((vals[idx] + mid) / abs_e, eta) >= ph[idx] - 1e-15:
                hi = mid
            else:
                lo = mid
        worst = max(worst, hi)
    return worst


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.7])
def test_delta_eta_matches_binary_search_oracle(eta):
    g, space, cost, chain = maxcut_setup(8, 3, seed=5)
    d_eta, _ = delta_p_stability(chain, cost, eta)
    assert d_eta == pytest.approx(brute_force_delta_eta(chain, cost, eta), abs=1e-9)


@pytest.mark.parametrize("n,k,seed", [(8, 3, 6), (10, 4, 7), (12, 5, 8), (12, 6, 9)])
def test_delta_tilde_bound_appendix_form(n, k, seed):
    # E_{y~x}[H] - H(x) <= |C*_k| (n-2)/(k(n-k)) for every state
    g, space, cost, chain = maxcut_setup(n, k, seed)
    vals = energies(cost, space.masks)
    inflate = chain.expect_step(vals) - vals
    bound = maxcut_delta_tilde_bound(abs(vals.min()), n, k)
    assert float(inflate.max()) <= bound + 1e-12


def test_alpha_p_identity():
    g, space, cost, chain = maxcut_setup(9, 3, seed=10)
    dist = stationary(chain)
    summary = ground_truth(cost, space, dist)
    eta = 0.5
    d_eta, _ = delta_p_stability(chain, cost, eta)
    a = alpha_p(d_eta, summary, eta)
    assert a * abs(summary.e_star) * (1 - eta) == pytest.approx(d_eta, abs=1e-15)


def zoo_n8():
    """Small instances across chain kinds for the ordering sweeps."""
    out = []
    for seed in (1, 2):
        g, space, cost, chain = maxcut_setup(8, 3, seed=seed)
        out.append((cost, space, chain))
    for seed in (3, 4):
        g = er_graph(8, seed=seed)
        space = build_statespace("independent-sets", 8, graph=g)
        out.append((CostSpec(kind="mis", graph=g), space,
                    make_chain("glauber-hardcore", space, lam=0.6)))
    g = er_graph(7, seed=5)
    hyper = build_statespace("hypercube", 7)
    out.append((CostSpec(kind="ising", graph=g), hyper,
                make_chain("glauber-ising", hyper, graph=g, beta=0.3)))
    gsk = gen_graph(InstanceSpec(graph_model="complete", cost_kind="sk", seed=6, n=7))
    out.append((CostSpec(kind="sk", graph=gsk), hyper,
                make_chain("glauber-sk", hyper, graph=gsk, beta=0.25)))
    g = er_graph(7, seed=7)
    out.append((CostSpec(kind="mis-penalized", graph=g, penalty=7.0), hyper,
                make_chain("hypercube-walk", hyper)))
    return out


@pytest.mark.parametrize("cost,space,chain", zoo_n8(),
                         ids=lambda v: getattr(v, "kind", None) or "")
def test_ordering_chain_and_subdepolarizing(cost, space, chain):
    eta = 0.5
    d_eta, d_tilde = delta_p_stability(chain, cost, eta)
    lip = pseudo_lipschitz(chain, cost)
    assert d_eta <= d_tilde + 1e-12
    assert d_tilde <= math.sqrt(lip) + 1e-12
    assert subdepolarizing_margin(chain, cost, eta) >= -1e-12


def test_spectral_density_mis_k2(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    chain = make_chain("glauber-hardcore", space, lam=1.0)
    dist = stationary(chain)
    cost = CostSpec(kind="mis", graph=k2_graph)
    summary = ground_truth(cost, space, dist)
    tail, gamma = spectral_density(cost, space, dist, 0.5, summary)
    assert tail == pytest.approx(2 / 3, abs=1e-15)
    assert gamma == pytest.approx(1.0, abs=1e-12)


def test_spectral_density_unique_minimizer_gamma_one():
    g = Graph(n=4, edges=())
    space = build_statespace("hypercube", 4)
    cost = CostSpec(kind="mis-penalized", graph=g, penalty=4.0)  # H = -|x|
    chain = make_chain("hypercube-walk", space)
    dist = stationary(chain)
    summary = ground_truth(cost, space, dist)
    # eta small enough that only the all-ones state is in the tail
    tail, gamma = spectral_density(cost, space, dist, 0.2, summary)
    assert tail == pytest.approx(summary.pi_estar, abs=1e-15)
    assert gamma == pytest.approx(1.0, abs=1e-12)


def test_spectral_density_gamma_decreases_with_eta():
    g, space, cost, chain = maxcut_setup(10, 3, seed=11)
    dist = stationary(chain)
    summary = ground_truth(cost, space, dist)
    gammas = [spectral_density(cost, space, dist, eta, summary)[1]
              for eta in (0.2, 0.5, 0.8)]
    assert gammas[0] >= gammas[1] >= gammas[2]


def test_tail_bound_constants_formulas():
    class S:  # minimal summary stub with the needed fields
        mean_pi = 0.0
        e_star = -6.0
        pi_estar = math.exp(-10.0)

    # deviation = 0 - (1-eta)E* = 3 with eta = 0.5
    assert tail_bound_constants(0.1, S, 1.0, "herbst", 0.5) == pytest.approx(0.09)
    assert tail_bound_constants(0.25, S, 1.0, "poincare", 0.5) == pytest.approx(0.15)
    S2 = type("S2", (), {"mean_pi": -4.0, "e_star": -6.0, "pi_estar": 0.5})
    with pytest.raises(ValidationError):
        tail_bound_constants(0.1, S2, 1.0, "herbst", 0.5)   # deviation 0 -> vacuous


def test_b_star_formulas():
    class S:
        pi_estar = math.exp(-10.0)

    assert b_star(0.5, 0.1, S, "log-sobolev") == pytest.approx(1 / 3)
    assert b_star(0.5, 1.0, S, "poincare") == pytest.approx((4 * math.sqrt(6) - 1) / 10)


def test_predicted_exponent_values():
    class S:
        e_star = -10.0
        pi_estar = math.exp(-10.0)

    assert predicted_exponent(0.3, 0.5, S, 1.0) == pytest.approx(0.4625)
    assert predicted_exponent(0.0, 0.5, S, 1.0) == 0.5
    assert predicted_exponent(0.3, 1e-9, S, 1.0) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(ValidationError):
        predicted_exponent(0.3, 0.5, S, 0.0)


def test_transposition_ls_bound_values():
    rep = transposition_ls_bound(4, 2, tau0=1.0)
    assert rep.omega_lower == pytest.approx(1.0)
    assert rep.tau0 == 1.0
    # k = n/2 scaling ~ 1/n: ratio of bounds at 2n vs n approaches 1/2
    b1 = transposition_ls_bound(12, 6).omega_lower
    b2 = transposition_ls_bound(24, 12).omega_lower
    assert b2 / b1 == pytest.approx(0.5, rel=0.2)


@pytest.mark.parametrize("n,k", [(4, 2), (6, 2), (8, 3), (10, 5), (12, 4)])
def test_gap_dominates_ls_bound(n, k):
    # delta >= omega >= the tau0=1 lower bound, checked with the exact gap
    space = build_statespace("hamming-slice", n, k=k)
    chain = make_chain("transposition-walk", space)
    D = discriminant(chain).to_dense()
    evals = np.linalg.eigvalsh(-D)
    delta = float(evals[1] - evals[0])
    assert delta >= transposition_ls_bound(n, k, tau0=1.0).omega_lower - 1e-12


def test_ls_estimate_two_state_chain():
    # hypercube n=1 with zeta = 1/2 is the two-point chain with p = 1/2:
    # delta = 1 and omega = 1/2 analytically
    space = build_statespace("hypercube", 1)
    chain = make_chain("hypercube-walk", space, zeta=0.5)
    est = ls_constant_estimate(chain)
    assert est.delta_exact == pytest.approx(1.0, abs=1e-12)
    assert est.omega_estimate == pytest.approx(0.5, rel=0.10)
    assert est.omega_estimate <= est.delta_exact + 1e-9


def test_ls_estimate_lazy_scaling():
    g = er_graph(6, seed=12)
    space = build_statespace("independent-sets", 6, graph=g)
    base = ls_constant_estimate(make_chain("glauber-hardcore", space, lam=0.8))
    lazy = ls_constant_estimate(make_chain("glauber-hardcore", space, lam=0.8, zeta=0.5))
    assert lazy.delta_exact == pytest.approx(0.5 * base.delta_exact, abs=1e-10)


@pytest.mark.parametrize("cost,space,chain", zoo_n8(),
                         ids=lambda v: getattr(v, "kind", None) or "")
def test_ls_estimate_bracketed_by_gap(cost, space, chain):
    est = ls_constant_estimate(chain, n_starts=3, maxiter=150)
    assert est.omega_estimate <= est.delta_exact + 1e-9


def test_anneal_hardcore_k2(k2_graph):
    # oracle: 3-state Gibbs weights; step 1 -> 1.1 means Delta = 0.1, n = 2
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    steps = anneal_overlap_schedule("hardcore", space, [1.0, 1.1])
    assert len(steps) == 1
    assert steps[0].bound == pytest.approx(1 - 2 * 0.1 / 2)
    za = 1 + 2 * 1.0
    zb = 1 + 2 * 1.1
    expect = (1 + 2 * math.sqrt(1.1)) / math.sqrt(za * zb)
    assert steps[0].overlap == pytest.approx(expect, abs=1e-12)
    assert steps[0].overlap >= steps[0].bound


def test_anneal_ising_zero_step_bound(k2_graph):
    space = build_statespace("hypercube", 2)
    cost = CostSpec(kind="ising", graph=k2_graph)
    steps = anneal_overlap_schedule("ising", space, [0.0, 1e-9], cost=cost)
    assert steps[0].overlap == pytest.approx(1.0, abs=1e-8)


def test_anneal_hardcore_vacuous_at_two_over_n(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    steps = anneal_overlap_schedule("hardcore", space, [1.0, 2.0])  # Delta = 2/n = 1
    assert steps[0].bound == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < steps[0].overlap <= 1.0


def test_anneal_grid_validation(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    with pytest.raises(ValidationError):
        anneal_overlap_schedule("hardcore", space, [1.0, 0.9])
    with pytest.raises(ValidationError):
        anneal_overlap_schedule("hardcore", space, [0.0, 0.5])
    with pytest.warns(UserWarning, match="exceeds 2/n"):
        anneal_overlap_schedule("hardcore", space, [0.5, 5.0])


@pytest.mark.parametrize("cost,space,chain", zoo_n8()[:4],
                         ids=lambda v: getattr(v, "kind", None) or "")
def test_poincare_tail_check_holds(cost, space, chain):
    dist = stationary(chain)
    summary = ground_truth(cost, space, dist)
    D = discriminant(chain).to_dense()
    evals = np.linalg.eigvalsh(-D)
    delta = float(evals[1] - evals[0])
    rep = poincare_tail_check(chain, cost, space, dist, summary, delta)
    assert rep.max_violation <= 0.0


def test_condition_report_fields_and_json():
    g, space, cost, chain = maxcut_setup(8, 3, seed=13)
    problem = ShortPathProblem.build(cost, space, chain)
    rep = condition_report(problem, 0.5, 0.7)
    assert rep.delta_p_eta <= rep.delta_tilde + 1e-12
    assert rep.delta_tilde <= math.sqrt(rep.pseudo_lip) + 1e-12
    assert rep.omega_used == rep.delta_gap
    assert 0.0 <= rep.gamma_emp <= 1.0
    import json

    decoded = json.loads(rep.to_json())
    assert decoded["eta"] == 0.5 and decoded["b"] == 0.7
