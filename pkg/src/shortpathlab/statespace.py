"""Feasible-configuration spaces with dense 0..M-1 indexing.

Configurations are bit-packed: bit i set means spin +1 at site i (occupied
site, in the 0/1 convention), bit clear means spin -1 (empty).  Every space
enumerates its members as bitmasks in increasing numeric order, and that
order is the stable coordinate system all vectors and operators index
against:

* hypercube     -- index of a state is the integer value of its bits;
* hamming-slice -- increasing-bitmask order coincides with colexicographic
                   order of the support sets, so ranks come from the
                   combinatorial number system with no stored table;
* independent-sets -- backtracking enumeration, ranks by binary search in
                   the sorted mask array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, MembershipError, ValidationError
from .instances import Graph

DEFAULT_N_CAP = 30
DEFAULT_STATE_CAP = 1 << 26

KINDS = ("hypercube", "hamming-slice", "independent-sets")


@dataclass(frozen=True)
class SpinConfig:
    """One bit-packed configuration in {-1,+1}^n (bit set <=> spin +1)."""

    n: int
    bits: int

    def __post_init__(self):
        if not (0 <= self.bits < (1 << self.n)):
            raise ValidationError(f"bits {self.bits:#x} out of range for n={self.n}")

    @property
    def weight(self) -> int:
        """Hamming weight |x|: the number of +1 spins / occupied sites."""
        return int(self.bits).bit_count()

    def spin(self, i: int) -> int:
        """Spin at site i in the +-1 convention (bit b maps to 2b - 1)."""
        return 1 if (self.bits >> i) & 1 else -1

    def to_pm1(self) -> np.ndarray:
        bits = (np.int64(self.bits) >> np.arange(self.n, dtype=np.int64)) & 1
        return (2 * bits - 1).astype(np.int64)

    @classmethod
    def from_support(cls, n: int, support) -> "SpinConfig":
        bits = 0
        for i in support:
            bits |= 1 << i
        return cls(n=n, bits=bits)


def _check_caps(n: int, m: int, n_cap: int, state_cap: int):
    if n > n_cap:
        raise ValidationError(f"n={n} exceeds the configured cap {n_cap}")
    if m > state_cap:
        raise CapacityError(
            f"state space size {m} exceeds the memory budget of {state_cap} states"
        )


class StateSpace:
    """Common interface: kind, n, M, masks, rank/unrank."""

    kind: str
    n: int
    M: int

    @property
    def masks(self) -> np.ndarray:
        raise NotImplementedError

    def rank(self, x: SpinConfig) -> int:
        raise NotImplementedError

    def unrank(self, index: int) -> SpinConfig:
        if not (0 <= index < self.M):
            raise ValidationError(f"index {index} out of range for M={self.M}")
        return SpinConfig(n=self.n, bits=int(self.masks[index]))

    def _check_member(self, x: SpinConfig):
        if x.n != self.n:
            raise MembershipError(f"configuration has n={x.n}, space has n={self.n}")


class HypercubeSpace(StateSpace):
    kind = "hypercube"

    def __init__(self, n: int, n_cap=DEFAULT_N_CAP, state_cap=DEFAULT_STATE_CAP):
        _check_caps(n, 1 << n, n_cap, state_cap)
        self.n = n
        self.M = 1 << n
        self._masks: np.ndarray | None = None

    @property
    def masks(self) -> np.ndarray:
        if self._masks is None:
            self._masks = np.arange(self.M, dtype=np.int64)
        return self._masks

    def rank(self, x: SpinConfig) -> int:
        self._check_member(x)
        return x.bits

    def unrank(self, index: int) -> SpinConfig:
        if not (0 <= index < self.M):
            raise ValidationError(f"index {index} out of range for M={self.M}")
        return SpinConfig(n=self.n, bits=index)


class HammingSliceSpace(StateSpace):
    kind = "hamming-slice"

    def __init__(self, n: int, k: int, n_cap=DEFAULT_N_CAP, state_cap=DEFAULT_STATE_CAP):
        if not (0 <= k <= n):
            raise ValidationError(f"slice weight k={k} out of range for n={n}")
        m = math.comb(n, k)
        _check_caps(n, m, n_cap, state_cap)
        self.n = n
        self.k = k
        self.M = m
        self._masks: np.ndarray | None = None

    @property
    def masks(self) -> np.ndarray:
        if self._masks is None:
            out = np.empty(self.M, dtype=np.int64)
            for r, mask in enumerate(_slice_masks(self.n, self.k)):
                out[r] = mask
            self._masks = out
        return self._masks

    def rank(self, x: SpinConfig) -> int:
        """Combinatorial-number-system rank; O(n), no table needed."""
        self._check_member(x)
        if x.weight != self.k:
            raise MembershipError(f"|x|={x.weight} does not match slice weight k={self.k}")
        r = 0
        i = 0
        bits = x.bits
        pos = 0
        while bits:
            if bits & 1:
                i += 1
                r += math.comb(pos, i)
            bits >>= 1
            pos += 1
        return r

    def unrank(self, index: int) -> SpinConfig:
        if not (0 <= index < self.M):
            raise ValidationError(f"index {index} out of range for M={self.M}")
        bits = 0
        r = index
        for i in range(self.k, 0, -1):
            # largest c with C(c, i) <= r
            c = i - 1
            while math.comb(c + 1, i) <= r:
                c += 1
            bits |= 1 << c
            r -= math.comb(c, i)
        return SpinConfig(n=self.n, bits=bits)


def _slice_masks(n: int, k: int):
    """All weight-k masks in increasing numeric (= colex) order."""
    if k == 0:
        yield 0
        return
    # Gosper's hack walks fixed-weight masks in increasing order.
    mask = (1 << k) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        c = mask & -mask
        r = mask + c
        mask = (((r ^ mask) >> 2) // c) | r


class IndependentSetSpace(StateSpace):
    kind = "independent-sets"

    def __init__(self, graph: Graph, n_cap=DEFAULT_N_CAP, state_cap=DEFAULT_STATE_CAP):
        if graph.n > n_cap:
            raise ValidationError(f"n={graph.n} exceeds the configured cap {n_cap}")
        self.graph = graph
        self.n = graph.n
        nbr = graph.neighbor_masks()
        masks = _enumerate_independent_sets(graph.n, nbr, state_cap)
        self._masks = np.asarray(masks, dtype=np.int64)
        self.M = len(masks)

    @property
    def masks(self) -> np.ndarray:
        return self._masks

    def rank(self, x: SpinConfig) -> int:
        """Sorted-array search; O(log M)."""
        self._check_member(x)
        pos = int(np.searchsorted(self._masks, x.bits))
        if pos >= self.M or self._masks[pos] != x.bits:
            raise MembershipError(
                f"configuration {x.bits:#x} is not an independent set of the graph"
            )
        return pos


def _enumerate_independent_sets(n: int, nbr_masks: np.ndarray, cap: int) -> list[int]:
    """Backtrack over vertices from high index to low, exclude branch first,
    which emits masks in increasing numeric order."""
    out: list[int] = []
    nbr = [int(m) for m in nbr_masks]

    def rec(v: int, mask: int):
        if v < 0:
            if len(out) >= cap:
                raise CapacityError(
                    f"independent-set count exceeds the memory budget of {cap} states"
                )
            out.append(mask)
            return
        rec(v - 1, mask)
        if not (mask & nbr[v]):
            rec(v - 1, mask | (1 << v))

    rec(n - 1, 0)
    return out


def build_statespace(
    kind: str,
    n: int,
    *,
    k: int | None = None,
    graph: Graph | None = None,
    n_cap: int = DEFAULT_N_CAP,
    state_cap: int = DEFAULT_STATE_CAP,
) -> StateSpace:
    """Construct a state space of the given kind; M is computed exactly."""
    if kind == "hypercube":
        return HypercubeSpace(n, n_cap, state_cap)
    if kind == "hamming-slice":
        if k is None:
            raise ValidationError("hamming-slice requires k")
        return HammingSliceSpace(n, k, n_cap, state_cap)
    if kind == "independent-sets":
        if graph is None:
            raise ValidationError("independent-sets requires a graph")
        if graph.n != n:
            raise ValidationError(f"graph has n={graph.n}, requested n={n}")
        return IndependentSetSpace(graph, n_cap, state_cap)
    raise ValidationError(f"unknown state-space kind {kind!r}")
