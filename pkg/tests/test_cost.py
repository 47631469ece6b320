import numpy as np
import pytest

from shortpathlab.chains import make_chain, stationary
from shortpathlab.cost import (
    Constraint,
    CostSpec,
    energies,
    energies_int,
    eval_energy,
    ground_truth,
    independence_constraints,
    make_csp_penalized,
    mean_energy_closed_form,
)
from shortpathlab.errors import (
    DegenerateConstraintError,
    InvariantBreachError,
    PairingError,
    ValidationError,
)
from shortpathlab.instances import Graph, InstanceSpec, gen_graph
from shortpathlab.statespace import SpinConfig, build_statespace
from tests.conftest import er_graph


def uniform_dist(space):
    chain_kind = {"hamming-slice": "transposition-walk", "hypercube": "hypercube-walk"}
    return stationary(make_chain(chain_kind[space.kind], space))


def test_maxcut_triangle_slice_k1(triangle_graph):
    # oracle: enumerate the 3 weight-1 states by hand; each cuts 2 edges
    cost = CostSpec(kind="maxcut-hamming", graph=triangle_graph, k=1)
    for bits in (0b001, 0b010, 0b100):
        assert eval_energy(cost, SpinConfig(3, bits)) == -2.0


def test_mis_penalized_k2(k2_graph):
    cost = CostSpec(kind="mis-penalized", graph=k2_graph, penalty=2.0)
    assert eval_energy(cost, SpinConfig(2, 0b11)) == 0.0
    assert eval_energy(cost, SpinConfig(2, 0b01)) == -1.0


def test_ising_k2_antialigned(k2_graph):
    cost = CostSpec(kind="ising", graph=k2_graph)
    assert eval_energy(cost, SpinConfig(2, 0b01)) == -1.0
    assert eval_energy(cost, SpinConfig(2, 0b11)) == 1.0


def test_sign_convention_bit_to_pm1():
    # H_ising(x) = sum w x_i x_j with x = 2b - 1
    g = Graph(n=2, edges=((0, 1),), weights=(2.5,))
    cost = CostSpec(kind="ising", graph=g)
    assert eval_energy(cost, SpinConfig(2, 0b00)) == 2.5
    assert eval_energy(cost, SpinConfig(2, 0b10)) == -2.5


def test_ground_truth_mis_k2(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    chain = make_chain("glauber-hardcore", space, lam=1.0)
    summary = ground_truth(CostSpec(kind="mis", graph=k2_graph), space, stationary(chain))
    assert summary.e_star == -1.0
    assert sorted(space.masks[i] for i in summary.minimizers) == [0b01, 0b10]
    assert summary.pi_estar == pytest.approx(2 / 3, abs=1e-15)


def test_ground_truth_maxcut_k3(triangle_graph):
    space = build_statespace("hamming-slice", 3, k=1)
    cost = CostSpec(kind="maxcut-hamming", graph=triangle_graph, k=1)
    summary = ground_truth(cost, space, uniform_dist(space))
    assert summary.e_star == -2.0
    assert summary.n_minimizers == 3
    assert summary.pi_estar == pytest.approx(1.0, abs=1e-15)


def test_constant_zero_cost_is_invariant_breach():
    g = Graph(n=3, edges=())
    space = build_statespace("hamming-slice", 3, k=1)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=1)  # no edges: H == 0
    with pytest.raises(InvariantBreachError):
        ground_truth(cost, space, uniform_dist(space))


def test_mean_energy_closed_form_triangle(triangle_graph):
    cost = CostSpec(kind="maxcut-hamming", graph=triangle_graph, k=1)
    assert mean_energy_closed_form(cost, 1) == pytest.approx(-2.0, abs=1e-15)


def test_mean_energy_single_edge_n4_k2():
    # oracle: 4 of the 6 weight-2 strings split a fixed pair -> Pr = 2/3
    g = Graph(n=4, edges=((0, 1),))
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=2)
    assert mean_energy_closed_form(cost, 2) == pytest.approx(-2 / 3, abs=1e-15)


def test_mean_energy_k0_is_zero(triangle_graph):
    cost = CostSpec(kind="maxcut-hamming", graph=triangle_graph, k=0)
    assert mean_energy_closed_form(cost, 0) == 0.0


@pytest.mark.parametrize("n,k,seed", [(6, 2, 0), (8, 3, 1), (10, 5, 2), (12, 4, 3), (12, 6, 4)])
def test_mean_matches_enumeration_exactly(n, k, seed):
    g = er_graph(n, seed)
    space = build_statespace("hamming-slice", n, k=k)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=k)
    summary = ground_truth(cost, space, uniform_dist(space))
    assert abs(summary.mean_pi - mean_energy_closed_form(cost, k)) <= 1e-12


def test_mean_centered_cost_has_zero_mean():
    g = er_graph(10, seed=5)
    space = build_statespace("hamming-slice", 10, k=3)
    shift = mean_energy_closed_form(CostSpec(kind="maxcut-hamming", graph=g, k=3), 3)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=3, shift=shift)
    summary = ground_truth(cost, space, uniform_dist(space))
    assert abs(summary.mean_pi) <= 1e-12


def test_mis_penalized_rho_n_matches_constrained_mis():
    g = er_graph(9, seed=8)
    hyper = build_statespace("hypercube", 9)
    pen = CostSpec(kind="mis-penalized", graph=g, penalty=float(g.n))
    pen_summary = ground_truth(pen, hyper, uniform_dist(hyper))

    indep = build_statespace("independent-sets", 9, graph=g)
    chain = make_chain("glauber-hardcore", indep, lam=1.0)
    mis_summary = ground_truth(CostSpec(kind="mis", graph=g), indep, stationary(chain))

    pen_masks = sorted(int(hyper.masks[i]) for i in pen_summary.minimizers)
    mis_masks = sorted(int(indep.masks[i]) for i in mis_summary.minimizers)
    assert pen_masks == mis_masks
    assert pen_summary.e_star == mis_summary.e_star


def test_integer_channel_agrees_with_float():
    g = er_graph(8, seed=2)
    space = build_statespace("hamming-slice", 8, k=3)
    cost = CostSpec(kind="maxcut-hamming", graph=g, k=3)
    vals = energies(cost, space.masks)
    ints = energies_int(cost, space.masks)
    assert ints is not None
    assert np.array_equal(vals, ints.astype(float))
    # weighted graphs have no integer channel
    gw = Graph(n=3, edges=((0, 1),), weights=(0.5,))
    assert energies_int(CostSpec(kind="maxcut-hamming", graph=gw, k=1),
                        np.array([1])) is None


def test_sk_prefactor():
    g = Graph(n=4, edges=((0, 1),), weights=(2.0,))
    cost = CostSpec(kind="sk", graph=g)
    assert eval_energy(cost, SpinConfig(4, 0b0011)) == pytest.approx(2.0 / 2.0)  # 1/sqrt(4)


def test_csp_penalized_mis_form(k2_graph):
    space = build_statespace("hypercube", 2)
    base = CostSpec(kind="mis", graph=k2_graph)
    cost = make_csp_penalized(base, independence_constraints(k2_graph), space)
    # base norm is 2 (state 11); constraint: s=3 of 4
    assert eval_energy(cost, SpinConfig(2, 0b11)) == pytest.approx(-2 / 2 + 1 / 1)
    assert eval_energy(cost, SpinConfig(2, 0b01)) == pytest.approx(-1 / 2 - 1 / 3)
    assert eval_energy(cost, SpinConfig(2, 0b00)) == pytest.approx(0.0 - 1 / 3)


def test_degenerate_constraint_rejected():
    with pytest.raises(DegenerateConstraintError):
        Constraint(variables=(0, 1), satisfying=frozenset())
    with pytest.raises(DegenerateConstraintError):
        Constraint(variables=(0,), satisfying=frozenset({0, 1}))


def test_pairing_errors(triangle_graph):
    hyper = build_statespace("hypercube", 3)
    cost = CostSpec(kind="maxcut-hamming", graph=triangle_graph, k=1)
    with pytest.raises(PairingError):
        ground_truth(cost, hyper, uniform_dist(hyper))


def test_maxbisection_requires_even_n(triangle_graph):
    with pytest.raises(ValidationError):
        CostSpec(kind="maxbisection", graph=triangle_graph)


def test_penalty_must_be_positive(k2_graph):
    with pytest.raises(ValidationError):
        CostSpec(kind="mis-penalized", graph=k2_graph, penalty=0.0)
