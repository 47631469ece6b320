"""Graph and problem-instance generation.

Graphs are simple, undirected, 0-indexed, with edges stored as (i, j), i < j,
in lexicographic order.  Optional real weights (e.g. Gaussian couplings for
spin-glass instances) align with the edge list.  Generation is deterministic
for a fixed (spec, seed): the same instance tables can be regenerated on any
machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, ParseError, ValidationError
from .rng import make_rng

GRAPH_MODELS = ("erdos-renyi", "random-regular", "complete", "explicit")

REGULAR_RETRY_BUDGET = 10000


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; weights, if present, align with ``edges``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"vertex count must be nonnegative, got {self.n}")
        seen = set()
        for (i, j) in self.edges:
            if not (0 <= i < j < self.n):
                raise ValidationError(f"edge ({i}, {j}) violates 0 <= i < j < n={self.n}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if self.weights is not None and len(self.weights) != len(self.edges):
            raise ValidationError(
                f"{len(self.weights)} weights for {len(self.edges)} edges"
            )

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_weights(self) -> np.ndarray:
        """Weights as an array; all-ones for unweighted graphs."""
        if self.weights is None:
            return np.ones(self.m)
        return np.asarray(self.weights, dtype=float)

    def neighbor_masks(self) -> np.ndarray:
        """Bitmask of neighbors per vertex (int64; valid for n <= 62)."""
        masks = np.zeros(self.n, dtype=np.int64)
        for (i, j) in self.edges:
            masks[i] |= np.int64(1) << np.int64(j)
            masks[j] |= np.int64(1) << np.int64(i)
        return masks

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for (i, j) in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> list[list[tuple[int, float]]]:
        """Adjacency lists of (neighbor, weight)."""
        w = self.edge_weights()
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for e, (i, j) in enumerate(self.edges):
            adj[i].append((j, w[e]))
            adj[j].append((i, w[e]))
        return adj


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for one problem instance: graph model + cost kind + seed."""

    graph_model: str
    cost_kind: str
    seed: int
    n: int
    p_edge: float | None = None      # erdos-renyi
    degree: int | None = None        # random-regular
    graph: Graph | None = None       # explicit (also the diluted SK base)
    k: int | None = None             # hamming-weight constraint
    penalty: float | None = None     # mis-penalized rho
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.graph_model not in GRAPH_MODELS:
            raise ValidationError(f"unknown graph model {self.graph_model!r}")
        if self.graph_model == "erdos-renyi":
            if self.p_edge is None or not (0.0 <= self.p_edge <= 1.0):
                raise ValidationError(f"p_edge must lie in [0, 1], got {self.p_edge}")
        if self.graph_model == "random-regular":
            if self.degree is None or self.degree < 0:
                raise ValidationError("random-regular requires a nonnegative degree")
            if (self.n * self.degree) % 2 != 0:
                raise ValidationError(
                    f"n*d must be even for a d-regular graph (n={self.n}, d={self.degree})"
                )
        if self.graph_model == "explicit" and self.graph is None:
            raise ValidationError("explicit model requires a graph")
        if self.cost_kind == "maxbisection":
            if self.n % 2 != 0:
                raise ValidationError("maxbisection requires even n")
            if self.k is not None and self.k != self.n // 2:
                raise ValidationError("maxbisection fixes k = n/2")


def _all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _gen_erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    pairs = _all_pairs(n)
    u = rng.random(len(pairs))
    edges = tuple(pair for pair, keep in zip(pairs, u < p) if keep)
    return Graph(n=n, edges=edges)


def _gen_random_regular(n: int, d: int, rng: np.random.Generator) -> Graph:
    # Configuration / pairing model with whole-graph rejection of self-loops
    # and multi-edges.  Not exactly uniform, which is acceptable here.
    if d >= n:
        raise ValidationError(f"degree {d} impossible on {n} vertices")
    stubs = np.repeat(np.arange(n), d)
    for _ in range(REGULAR_RETRY_BUDGET):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        if np.any(lo == hi):
            continue
        pairs = set(zip(lo.tolist(), hi.tolist()))
        if len(pairs) != len(lo):
            continue
        return Graph(n=n, edges=tuple(sorted(pairs)))
    raise GenerationError(
        f"random-regular(n={n}, d={d}) exceeded retry budget {REGULAR_RETRY_BUDGET}"
    )


def gen_graph(spec: InstanceSpec) -> Graph:
    """Generate the graph for ``spec``; deterministic in (spec, seed).

    SK instances get i.i.d. standard normal couplings on the complete graph,
    or on the provided explicit graph for the diluted variant.
    """
    rng = make_rng(spec.seed, 0x67726170)  # graph stream
    model = spec.graph_model
    if model == "erdos-renyi":
        g = _gen_erdos_renyi(spec.n, spec.p_edge, rng)
    elif model == "random-regular":
        g = _gen_random_regular(spec.n, spec.degree, rng)
    elif model == "complete":
        g = Graph(n=spec.n, edges=tuple(_all_pairs(spec.n)))
    else:
        g = spec.graph
        if g.n != spec.n:
            raise ValidationError(f"explicit graph has n={g.n}, spec says {spec.n}")
    if spec.cost_kind == "sk":
        w = rng.standard_normal(g.m)
        g = Graph(n=g.n, edges=g.edges, weights=tuple(float(x) for x in w))
    return g


def two_log_n_over_n(n: int) -> float:
    """The edge probability 2*ln(n)/n used by the reference experiments."""
    return min(1.0, 2.0 * math.log(n) / n)


def save_graph(g: Graph, path) -> None:
    """Write the text format: ``n m weighted`` then m lines ``i j [w]``.

    Floats are written with shortest round-trip precision (repr), so
    load(save(g)) is bit-exact including weights.
    """
    weighted = 1 if g.weights is not None else 0
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{g.n} {g.m} {weighted}\n")
        for e, (i, j) in enumerate(g.edges):
            if weighted:
                fh.write(f"{i} {j} {g.weights[e]!r}\n")
            else:
                fh.write(f"{i} {j}\n")


def load_graph(path) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty graph file", line=1)
    head = lines[0].split()
    if len(head) != 3:
        raise ParseError(f"expected 'n m weighted', got {lines[0]!r}", line=1)
    try:
        n, m, weighted = int(head[0]), int(head[1]), int(head[2])
    except ValueError as exc:
        raise ParseError(str(exc), line=1) from exc
    if weighted not in (0, 1):
        raise ParseError(f"weighted flag must be 0 or 1, got {weighted}", line=1)
    if len(lines) - 1 < m:
        raise ParseError(f"expected {m} edge lines, found {len(lines) - 1}", line=len(lines))
    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    seen = set()
    for ln in range(1, m + 1):
        parts = lines[ln].split()
        want = 3 if weighted else 2
        if len(parts) != want:
            raise ParseError(f"expected {want} fields, got {len(parts)}", line=ln + 1)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(str(exc), line=ln + 1) from exc
        if not (0 <= i < j < n):
            raise ParseError(f"edge ({i}, {j}) violates 0 <= i < j < n={n}", line=ln + 1)
        if (i, j) in seen:
            raise ParseError(f"duplicate edge ({i}, {j})", line=ln + 1)
        seen.add((i, j))
        edges.append((i, j))
        if weighted:
            try:
                weights.append(float(parts[2]))
            except ValueError as exc:
                raise ParseError(str(exc), line=ln + 1) from exc
    return Graph(n=n, edges=tuple(edges), weights=tuple(weights) if weighted else None)
