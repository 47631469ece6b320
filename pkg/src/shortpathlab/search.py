"""Classical Markov Chain Search baseline and empirical hitting statistics.

The search repeatedly runs the kernel for ``steps_per_sample`` steps to draw
an (approximate) stationary sample and keeps the running minimum.  With an
EnergySummary supplied (oracle mode) it stops as soon as the exact optimum
is hit; blind mode runs the full budget.  Mixing times are not derived from
theory here: steps_per_sample is a free parameter with documented per-chain
heuristics, and correctness at desk scale is validated against the exact
stationary distribution instead.

Trials are independent given independent generators; split streams per trial
with ``rng.make_rng(seed, trial)`` for reproducible parallel batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import ChainKernel
from .cost import CostSpec, EnergySummary, energies, energies_int
from .errors import ValidationError
from .statespace import SpinConfig, StateSpace


@dataclass
class SearchOutcome:
    best_state: SpinConfig
    best_energy: float
    samples_used: int
    hit_optimum: bool
    steps_per_sample: int


def default_steps_per_sample(chain: ChainKernel) -> int:
    """Documented heuristics: site chains use n*ceil(ln n)*10, the
    transposition walk k(n-k)/n * ceil(ln C(n,k)) * 10."""
    n = chain.n
    if chain.kind == "transposition-walk":
        k = chain.space.k
        m = math.comb(n, k)
        return max(1, math.ceil(k * (n - k) / n * math.ceil(math.log(m)) * 10))
    return max(1, n * math.ceil(math.log(max(n, 2))) * 10)


class _RowCache:
    """Cumulative transition rows per state index, built lazily."""

    def __init__(self, chain: ChainKernel):
        self.chain = chain
        self.rows: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def get(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        row = self.rows.get(idx)
        if row is None:
            nbr, probs, _self_p = self.chain.row(idx)
            row = (nbr, np.cumsum(probs))
            self.rows[idx] = row
        return row


def _step_index(cache: _RowCache, idx: int, u: float) -> int:
    nbr, cum = cache.get(idx)
    if len(cum) and u < cum[-1]:
        return int(nbr[np.searchsorted(cum, u, side="right")])
    return idx


def run_chain(chain: ChainKernel, x0: SpinConfig, steps: int,
              rng: np.random.Generator) -> SpinConfig:
    """Simulate ``steps`` kernel steps (self-loops included) from x0."""
    if steps < 0:
        raise ValidationError(f"steps must be >= 0, got {steps}")
    idx = chain.space.rank(x0)
    cache = _RowCache(chain)
    weight0 = x0.weight
    for u in rng.random(steps):
        idx = _step_index(cache, idx, float(u))
        if __debug__ and chain.kind == "transposition-walk":
            assert chain.space.unrank(idx).weight == weight0
    return chain.space.unrank(idx)


def _eval_one(cost: CostSpec, mask: int) -> float:
    return float(energies(cost, np.array([mask], dtype=np.int64))[0])


def markov_chain_search(
    cost: CostSpec,
    chain: ChainKernel,
    budget: int,
    rng: np.random.Generator,
    summary: EnergySummary | None = None,
    steps_per_sample: int | None = None,
    x0: SpinConfig | None = None,
) -> SearchOutcome:
    """Draw up to ``budget`` approximate stationary samples, keep the minimum.

    Oracle mode (summary given) stops early on hitting E*, using the exact
    integer channel when the cost has one.
    """
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    space = chain.space
    if steps_per_sample is None:
        steps_per_sample = default_steps_per_sample(chain)
    if x0 is None:
        x0 = space.unrank(int(rng.integers(space.M)))
    idx = space.rank(x0)
    cache = _RowCache(chain)

    target_int = None
    if summary is not None:
        ints = energies_int(cost, np.array([space.masks[i] for i in summary.minimizers[:1]],
                                           dtype=np.int64))
        target_int = None if ints is None else int(ints[0])

    best_idx = idx
    best_val = _eval_one(cost, int(space.masks[idx]))
    best_int = None
    if target_int is not None:
        best_int = int(energies_int(cost, np.array([space.masks[idx]], dtype=np.int64))[0])
    samples = 0
    hit = _is_hit(best_val, best_int, summary, target_int)
    while samples < budget and not hit:
        for u in rng.random(steps_per_sample):
            idx = _step_index(cache, idx, float(u))
        samples += 1
        mask = int(space.masks[idx])
        val = _eval_one(cost, mask)
        if val < best_val:
            best_val, best_idx = val, idx
            if target_int is not None:
                best_int = int(energies_int(cost, np.array([mask], dtype=np.int64))[0])
        hit = _is_hit(best_val, best_int, summary, target_int)
    return SearchOutcome(
        best_state=space.unrank(best_idx), best_energy=best_val,
        samples_used=samples, hit_optimum=hit, steps_per_sample=steps_per_sample,
    )


def _is_hit(best_val: float, best_int: int | None, summary: EnergySummary | None,
            target_int: int | None) -> bool:
    if summary is None:
        return False
    if target_int is not None and best_int is not None:
        return best_int == target_int
    return best_val == summary.e_star


def render_outcomes_csv(outcomes) -> str:
    """Batch of search outcomes as CSV: trial, samples_used, hit, best_energy."""
    lines = ["trial,samples_used,hit,best_energy"]
    for trial, out in enumerate(outcomes):
        lines.append(f"{trial},{out.samples_used},{int(out.hit_optimum)},{out.best_energy!r}")
    return "\n".join(lines) + "\n"


@dataclass
class GibbsAdvantage:
    ratio: float            # exact pi_beta(E*) * 2^n
    bound: float            # max(2^(gamma n), exp(beta eta |E*|))
    gamma_uniform: float    # uniform-measure tail exponent entering the bound
    beta: float


def gibbs_vs_uniform_advantage(cost: CostSpec, space: StateSpace, beta: float,
                               eta: float, summary: EnergySummary) -> GibbsAdvantage:
    """Exact Gibbs-over-uniform optimum-mass ratio, with the lower-bound
    expression it is compared against.

    ratio = pi_beta(E*) / 2^(-n) from enumeration; the bound side is
    max(2^(gamma n), exp(beta eta |E*|)) with gamma the exact uniform tail
    exponent (fraction of states below (1-eta)E* written as 2^(-gamma n)).
    """
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    n = space.n
    vals = energies(cost, space.masks)
    logw = -beta * vals
    logz = float(np.logaddexp.reduce(logw))
    mass = float(np.exp(np.logaddexp.reduce(logw[summary.minimizers]) - logz))
    ratio = mass * space.M

    thr = (1.0 - eta) * summary.e_star
    frac = float(np.count_nonzero(vals <= thr + 1e-12)) / space.M
    gamma_n = -math.log2(frac) / n if frac > 0 else float("inf")
    bound = max(2.0 ** (gamma_n * n), math.exp(beta * eta * abs(summary.e_star)))
    return GibbsAdvantage(ratio=ratio, bound=bound, gamma_uniform=gamma_n, beta=beta)
