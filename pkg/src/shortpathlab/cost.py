"""Cost Hamiltonians, exact ground truth, and closed-form stationary means.

Sign conventions, fixed and tested:

* MaxCut kinds use +-1 spins via bit b -> 2b - 1 and score
  H(x) = -(1/2) * sum_{i<j} w_ij (1 - x_i x_j), i.e. minus the cut weight.
* MIS kinds use the 0/1 convention, H(x) = -sum_i x_i, with the quadratic
  penalty rho * sum_{(i,j) in E} x_i x_j for the penalized variant.
* The CSP-penalized form scores H(x)/||H||_2 + sum_l C_l(x) with
  C_l in {-1/s_l, +1/(2^{k_l} - s_l)}.
* Ising is sum_{(i,j) in E} w_ij x_i x_j (+ optional field h.x) in +-1 spins;
  SK adds the 1/sqrt(n) prefactor on Gaussian couplings.

Integer-valued kinds additionally carry an exact integer channel so minimizer
sets never depend on float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConstraintError,
    InvariantBreachError,
    PairingError,
    ValidationError,
)
from .instances import Graph
from .statespace import SpinConfig, StateSpace

COST_KINDS = (
    "maxcut-hamming",
    "maxbisection",
    "mis",
    "mis-penalized",
    "csp-penalized",
    "ising",
    "sk",
)

# state-space kind each cost kind is defined over
SPACE_FOR_COST = {
    "maxcut-hamming": "hamming-slice",
    "maxbisection": "hamming-slice",
    "mis": "independent-sets",
    "mis-penalized": "hypercube",
    "csp-penalized": "hypercube",
    "ising": "hypercube",
    "sk": "hypercube",
}


@dataclass(frozen=True)
class Constraint:
    """One CSP constraint: variable tuple plus the satisfying local codes.

    A local code packs the 0/1 values of ``variables`` with variables[t] at
    bit t.  s = len(satisfying) must avoid the degenerate 0 and 2^k cases,
    which would divide by zero in the penalty weights.
    """

    variables: tuple[int, ...]
    satisfying: frozenset[int]

    def __post_init__(self):
        k = len(self.variables)
        if k == 0:
            raise ValidationError("constraint with no variables")
        if len(set(self.variables)) != k:
            raise ValidationError(f"repeated variable in constraint {self.variables}")
        full = 1 << k
        if any(not (0 <= c < full) for c in self.satisfying):
            raise ValidationError("satisfying code out of range")
        s = len(self.satisfying)
        if s == 0 or s == full:
            raise DegenerateConstraintError(
                f"constraint on {k} literals with s={s} satisfying assignments"
            )

    @property
    def s(self) -> int:
        return len(self.satisfying)

    @property
    def arity(self) -> int:
        return len(self.variables)


def independence_constraints(graph: Graph) -> tuple[Constraint, ...]:
    """Per-edge 'not both occupied' constraints (k=2, s=3)."""
    return tuple(
        Constraint(variables=(i, j), satisfying=frozenset({0b00, 0b01, 0b10}))
        for (i, j) in graph.edges
    )


@dataclass(frozen=True)
class CostSpec:
    kind: str
    graph: Graph | None = None
    k: int | None = None                       # slice weight, maxcut kinds
    penalty: float | None = None               # rho, mis-penalized
    field: tuple[float, ...] | None = None     # h, ising
    base: "CostSpec | None" = None             # csp-penalized inner objective
    base_norm: float | None = None             # ||H||_2 of the inner objective
    constraints: tuple[Constraint, ...] | None = None
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValidationError(f"unknown cost kind {self.kind!r}")
        if self.kind in ("maxcut-hamming", "maxbisection", "mis", "mis-penalized",
                         "ising", "sk") and self.graph is None:
            raise ValidationError(f"{self.kind} requires a graph")
        if self.kind == "mis-penalized":
            if self.penalty is None or self.penalty <= 0:
                raise ValidationError("mis-penalized requires penalty rho > 0")
        if self.kind == "maxbisection":
            if self.graph.n % 2 != 0:
                raise ValidationError("maxbisection requires even n")
        if self.kind == "csp-penalized":
            if self.base is None or self.constraints is None:
                raise ValidationError("csp-penalized requires base cost and constraints")
            if self.base_norm is None or self.base_norm <= 0:
                raise ValidationError("csp-penalized requires base_norm > 0")
        if self.kind == "ising" and self.field is not None:
            if len(self.field) != self.graph.n:
                raise ValidationError("field length must equal n")

    @property
    def n(self) -> int:
        if self.graph is not None:
            return self.graph.n
        return self.base.n


def make_csp_penalized(base: CostSpec, constraints, space: StateSpace,
                       shift: float = 0.0) -> CostSpec:
    """Build the normalized CSP-penalized cost; ||H||_2 from enumeration."""
    vals = np.abs(energies(base, space.masks))
    norm = float(vals.max())
    if norm == 0.0:
        raise ValidationError("csp-penalized base cost is identically zero")
    return CostSpec(kind="csp-penalized", base=base, base_norm=norm,
                    constraints=tuple(constraints), shift=shift)


def _bit(masks: np.ndarray, i: int) -> np.ndarray:
    return (masks >> np.int64(i)) & np.int64(1)


def energies(cost: CostSpec, masks: np.ndarray) -> np.ndarray:
    """Vectorized energies over an array of bit-packed states (minus shift)."""
    masks = np.asarray(masks, dtype=np.int64)
    kind = cost.kind
    if kind in ("maxcut-hamming", "maxbisection"):
        w = cost.graph.edge_weights()
        out = np.zeros(len(masks))
        for e, (i, j) in enumerate(cost.graph.edges):
            out -= w[e] * (_bit(masks, i) ^ _bit(masks, j))
    elif kind == "mis":
        out = -np.bitwise_count(masks).astype(float)
    elif kind == "mis-penalized":
        out = -np.bitwise_count(masks).astype(float)
        for (i, j) in cost.graph.edges:
            out += cost.penalty * (_bit(masks, i) & _bit(masks, j))
    elif kind == "csp-penalized":
        out = energies(cost.base, masks) / cost.base_norm
        for c in cost.constraints:
            code = np.zeros(len(masks), dtype=np.int64)
            for t, v in enumerate(c.variables):
                code |= _bit(masks, v) << np.int64(t)
            sat = np.isin(code, np.fromiter(c.satisfying, dtype=np.int64))
            out += np.where(sat, -1.0 / c.s, 1.0 / ((1 << c.arity) - c.s))
    elif kind == "ising":
        w = cost.graph.edge_weights()
        out = np.zeros(len(masks))
        for e, (i, j) in enumerate(cost.graph.edges):
            si = 2 * _bit(masks, i) - 1
            sj = 2 * _bit(masks, j) - 1
            out += w[e] * (si * sj)
        if cost.field is not None:
            for i, h in enumerate(cost.field):
                if h != 0.0:
                    out += h * (2 * _bit(masks, i) - 1)
    elif kind == "sk":
        if cost.graph.weights is None:
            raise ValidationError("sk requires Gaussian edge weights")
        w = cost.graph.edge_weights()
        out = np.zeros(len(masks))
        for e, (i, j) in enumerate(cost.graph.edges):
            si = 2 * _bit(masks, i) - 1
            sj = 2 * _bit(masks, j) - 1
            out += w[e] * (si * sj)
        out /= np.sqrt(cost.graph.n)
    else:  # pragma: no cover
        raise ValidationError(f"unknown cost kind {kind!r}")
    if cost.shift:
        out = out - cost.shift
    return out


def energies_int(cost: CostSpec, masks: np.ndarray) -> np.ndarray | None:
    """Exact integer channel (unshifted) for tie detection, or None."""
    masks = np.asarray(masks, dtype=np.int64)
    kind = cost.kind
    if kind in ("maxcut-hamming", "maxbisection"):
        if cost.graph.weights is not None:
            return None
        out = np.zeros(len(masks), dtype=np.int64)
        for (i, j) in cost.graph.edges:
            out -= _bit(masks, i) ^ _bit(masks, j)
        return out
    if kind == "mis":
        return -np.bitwise_count(masks).astype(np.int64)
    if kind == "mis-penalized":
        rho = cost.penalty
        if rho != int(rho):
            return None
        out = -np.bitwise_count(masks).astype(np.int64)
        for (i, j) in cost.graph.edges:
            out += int(rho) * (_bit(masks, i) & _bit(masks, j))
        return out
    if kind == "ising":
        if cost.graph.weights is not None or cost.field is not None:
            return None
        out = np.zeros(len(masks), dtype=np.int64)
        for (i, j) in cost.graph.edges:
            out += (2 * _bit(masks, i) - 1) * (2 * _bit(masks, j) - 1)
        return out
    return None


def eval_energy(cost: CostSpec, z: SpinConfig) -> float:
    """Energy of a single configuration, exactly per definition (minus shift)."""
    return float(energies(cost, np.array([z.bits], dtype=np.int64))[0])


@dataclass(frozen=True)
class EnergySummary:
    """Exact ground-state data from full enumeration."""

    e_star: float
    minimizers: np.ndarray        # sorted state indices, all ties retained
    pi_estar: float
    mean_pi: float

    @property
    def n_minimizers(self) -> int:
        return len(self.minimizers)

    @property
    def abs_e_star(self) -> float:
        return abs(self.e_star)


def check_pairing(cost: CostSpec, space: StateSpace):
    want = SPACE_FOR_COST[cost.kind]
    if space.kind != want:
        raise PairingError(f"cost {cost.kind!r} pairs with {want!r}, got {space.kind!r}")
    if cost.kind in ("maxcut-hamming", "maxbisection") and cost.k is not None:
        if getattr(space, "k", None) != cost.k:
            raise PairingError(
                f"cost expects slice weight k={cost.k}, space has k={getattr(space, 'k', None)}"
            )


def ground_truth(cost: CostSpec, space: StateSpace, dist) -> EnergySummary:
    """Full enumeration: exact E*, the complete minimizer set, pi(E*), E_pi[H].

    The minimizer set comes from the integer channel when one exists, so ties
    are exact; float kinds use exact equality with the minimum.
    """
    check_pairing(cost, space)
    vals = energies(cost, space.masks)
    ints = energies_int(cost, space.masks)
    if ints is not None:
        lo = ints.min()
        minimizers = np.flatnonzero(ints == lo)
    else:
        lo = vals.min()
        minimizers = np.flatnonzero(vals == lo)
    e_star = float(vals[minimizers[0]])
    probs = dist.probabilities()
    pi_estar = float(probs[minimizers].sum())
    mean_pi = float(probs @ vals)
    if e_star >= 0.0:
        raise InvariantBreachError(
            f"E* = {e_star} violates the E* < 0 scaling assumption; "
            "apply a shift (e.g. mean-centering) before building operators"
        )
    return EnergySummary(e_star=e_star, minimizers=minimizers,
                         pi_estar=pi_estar, mean_pi=mean_pi)


def mean_energy_closed_form(cost: CostSpec, k: int) -> float:
    """E_pi[H] for a MaxCut kind under the uniform slice distribution.

    Pr[x_i != x_j] on the weight-k slice is 2k(n-k)/(n(n-1)), so the mean is
    -sum_e w_e * 2k(n-k)/(n(n-1)); agrees with ground_truth.mean_pi exactly.
    """
    if cost.kind not in ("maxcut-hamming", "maxbisection"):
        raise ValidationError("closed-form mean applies to MaxCut kinds only")
    n = cost.graph.n
    if n < 2:
        return -cost.shift
    p_split = 2.0 * k * (n - k) / (n * (n - 1))
    return -float(cost.graph.edge_weights().sum()) * p_split - cost.shift
