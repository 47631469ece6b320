"""Reversible Markov kernels, exact stationary distributions, discriminants.

Five kernels are supported, each paired with the state space it preserves:

* ``hypercube-walk``      on the hypercube: uniform single-bit flip, 1/n each.
* ``transposition-walk``  on a Hamming slice: uniform over the k(n-k) swaps of
  an up-spin with a down-spin (Bernoulli-Laplace diffusion).
* ``glauber-hardcore``    on independent sets: pick a vertex uniformly; if all
  its neighbors are empty, resample it occupied with probability
  lambda/(1+lambda), else it is forced empty.
* ``glauber-ising`` / ``glauber-sk`` on the hypercube: pick a vertex uniformly
  and resample its spin from the heat-bath conditional
  exp(-beta*s*l_v)/2cosh(beta*l_v) with local field l_v.

Self-loop probabilities are always computed as 1 - sum(off-diagonal), which
guarantees exact stochasticity; laziness zeta mixes zeta*I + (1-zeta)*P by
scaling the off-diagonals first.  Kernels are generated per state (``row``)
and assembled into CSR without ever forming a dense P.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logsumexp

from .cost import CostSpec, energies
from .errors import PairingError, ReversibilityError, ValidationError
from .instances import Graph
from .spectral import SparseOperator
from .statespace import (
    HammingSliceSpace,
    HypercubeSpace,
    IndependentSetSpace,
    SpinConfig,
    StateSpace,
)

CHAIN_KINDS = (
    "hypercube-walk",
    "transposition-walk",
    "glauber-hardcore",
    "glauber-ising",
    "glauber-sk",
)

DETAILED_BALANCE_TOL = 1e-10
# full detailed-balance residual scan is skipped above this nnz (symmetric
# kernels satisfy it exactly by construction anyway)
_DB_CHECK_NNZ_LIMIT = 8_000_000


@dataclass
class StationaryDist:
    """Unnormalized stationary weights, kept in log space so extreme
    beta*|H| never overflows."""

    log_weights: np.ndarray
    log_partition: float = field(init=False)

    def __post_init__(self):
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        self.log_partition = float(logsumexp(self.log_weights))

    @property
    def weights(self) -> np.ndarray:
        """exp(log_weights); may overflow for extreme parameters, prefer
        probabilities() which is computed against the log-partition."""
        return np.exp(self.log_weights)

    def probabilities(self) -> np.ndarray:
        p = np.exp(self.log_weights - self.log_partition)
        return p / p.sum()

    def sqrt_probabilities(self) -> np.ndarray:
        v = np.exp(0.5 * (self.log_weights - self.log_partition))
        return v / np.linalg.norm(v)


@dataclass
class ChainKernel:
    """One reversible kernel bound to its state space."""

    kind: str
    space: StateSpace
    graph: Graph | None = None
    lam: float | None = None
    beta: float | None = None
    h: tuple[float, ...] | None = None
    zeta: float = 0.0
    _P: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.space.n

    # ---- per-state kernel --------------------------------------------------

    def row(self, index: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Off-diagonal (neighbor indices, probabilities) plus the self-loop.

        Probabilities match the CSR assembly bit for bit; the self-loop is
        1 - sum(off-diagonal) after laziness scaling.
        """
        mask = int(self.space.masks[index])
        nbr_idx, probs = self._row_offdiag(mask)
        if self.zeta:
            probs = probs * (1.0 - self.zeta)
        self_p = 1.0 - float(probs.sum())
        return nbr_idx, probs, self_p

    def _row_offdiag(self, mask: int) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        if self.kind == "hypercube-walk":
            nbrs = [mask ^ (1 << i) for i in range(n)]
            return (np.array(nbrs, dtype=np.int64), np.full(n, 1.0 / n))
        if self.kind == "transposition-walk":
            k = self.space.k
            ups = [i for i in range(n) if (mask >> i) & 1]
            downs = [i for i in range(n) if not ((mask >> i) & 1)]
            p = 1.0 / (k * (n - k))
            idx, pr = [], []
            for u in ups:
                for v in downs:
                    nb = mask ^ (1 << u) ^ (1 << v)
                    idx.append(self.space.rank(SpinConfig(n, nb)))
                    pr.append(p)
            return np.array(idx, dtype=np.int64), np.array(pr)
        if self.kind == "glauber-hardcore":
            lam = self.lam
            nbr_masks = self._neighbor_masks()
            idx, pr = [], []
            for v in range(n):
                if (mask >> v) & 1:
                    nb = mask ^ (1 << v)
                    idx.append(self.space.rank(SpinConfig(n, nb)))
                    pr.append(1.0 / (n * (1.0 + lam)))
                elif not (mask & int(nbr_masks[v])):
                    nb = mask | (1 << v)
                    idx.append(self.space.rank(SpinConfig(n, nb)))
                    pr.append(lam / (n * (1.0 + lam)))
            return np.array(idx, dtype=np.int64), np.array(pr)
        if self.kind in ("glauber-ising", "glauber-sk"):
            adj = self._adjacency()
            scale = 1.0 / math.sqrt(n) if self.kind == "glauber-sk" else 1.0
            idx, pr = [], []
            for v in range(n):
                l_v = scale * sum(w * (2.0 * ((mask >> j) & 1) - 1.0) for j, w in adj[v])
                if self.kind == "glauber-ising" and self.h is not None:
                    l_v += self.h[v]
                s_new = 1.0 - 2.0 * ((mask >> v) & 1)
                idx.append(mask ^ (1 << v))
                pr.append(float(expit(-2.0 * self.beta * l_v * s_new)) / n)
            return np.array(idx, dtype=np.int64), np.array(pr)
        raise ValidationError(f"unknown chain kind {self.kind!r}")  # pragma: no cover

    def _neighbor_masks(self):
        if not hasattr(self, "_nbr_masks"):
            self._nbr_masks = self.graph.neighbor_masks()
        return self._nbr_masks

    def _adjacency(self):
        if not hasattr(self, "_adj"):
            self._adj = self.graph.adjacency()
        return self._adj

    # ---- whole-space assembly ----------------------------------------------

    def transition_matrix(self) -> sp.csr_matrix:
        """The full transition matrix P as CSR (self-loops included)."""
        if self._P is None:
            self._P = _assemble_P(self)
        return self._P

    def expect_step(self, f: np.ndarray) -> np.ndarray:
        """E_{y ~ x}[f(y)] for every x, i.e. P @ f."""
        return self.transition_matrix() @ np.asarray(f, dtype=float)


def make_chain(
    kind: str,
    space: StateSpace,
    *,
    graph: Graph | None = None,
    lam: float | None = None,
    beta: float | None = None,
    h: tuple[float, ...] | None = None,
    zeta: float = 0.0,
) -> ChainKernel:
    """Construct a kernel, enforcing (kind, space) compatibility."""
    if kind not in CHAIN_KINDS:
        raise ValidationError(f"unknown chain kind {kind!r}")
    if not (0.0 <= zeta < 1.0):
        raise ValidationError(f"laziness zeta must lie in [0, 1), got {zeta}")
    if kind == "hypercube-walk":
        if not isinstance(space, HypercubeSpace):
            raise PairingError("hypercube-walk requires a hypercube space")
    elif kind == "transposition-walk":
        if not isinstance(space, HammingSliceSpace):
            raise PairingError("transposition-walk requires a hamming-slice space")
        if space.k in (0, space.n):
            raise ValidationError("transposition walk needs 0 < k < n")
    elif kind == "glauber-hardcore":
        if not isinstance(space, IndependentSetSpace):
            raise PairingError("glauber-hardcore requires an independent-sets space")
        if lam is None or lam <= 0:
            raise ValidationError(f"fugacity lambda must be positive, got {lam}")
        graph = space.graph
        _warn_above_threshold("hardcore", lam, graph)
    elif kind in ("glauber-ising", "glauber-sk"):
        if not isinstance(space, HypercubeSpace):
            raise PairingError(f"{kind} requires a hypercube space")
        if graph is None:
            raise ValidationError(f"{kind} requires a graph")
        if graph.n != space.n:
            raise PairingError(f"graph has n={graph.n}, space has n={space.n}")
        if beta is None or beta < 0:
            raise ValidationError(f"inverse temperature beta must be >= 0, got {beta}")
        if kind == "glauber-sk" and graph.weights is None:
            raise ValidationError("glauber-sk requires Gaussian edge weights")
        if kind == "glauber-ising":
            _warn_above_threshold("ising-antiferro", beta, graph)
    return ChainKernel(kind=kind, space=space, graph=graph, lam=lam, beta=beta,
                       h=h, zeta=zeta)


def _warn_above_threshold(kind: str, value: float, graph: Graph):
    deg = graph.degrees()
    d = int(deg.max()) if len(deg) else 0
    if d >= 3:
        thr = critical_threshold(kind, d)
        if value > thr:
            warnings.warn(
                f"{kind} parameter {value} exceeds the uniqueness threshold "
                f"{thr:.6g} at max degree {d}; mixing may be exponentially slow",
                stacklevel=3,
            )


def critical_threshold(kind: str, d: int) -> float:
    """Uniqueness thresholds: hardcore lambda_c = (d-1)^(d-1)/(d-2)^d,
    antiferromagnetic Ising beta_c = (d-2)/d."""
    if d < 3:
        raise ValidationError(f"threshold formulas require degree d >= 3, got {d}")
    if kind == "hardcore":
        return float((d - 1) ** (d - 1)) / float((d - 2) ** d)
    if kind == "ising-antiferro":
        return (d - 2) / d
    raise ValidationError(f"unknown threshold kind {kind!r}")


def stationary(chain: ChainKernel) -> StationaryDist:
    """Exact stationary distribution of the kernel (unnormalized, log space)."""
    space = chain.space
    if chain.kind in ("hypercube-walk", "transposition-walk"):
        lw = np.zeros(space.M)
    elif chain.kind == "glauber-hardcore":
        occ = np.bitwise_count(space.masks).astype(float)
        lw = occ * math.log(chain.lam)
    else:
        cost = _gibbs_cost(chain)
        lw = -chain.beta * energies(cost, space.masks)
    return StationaryDist(log_weights=lw)


def _gibbs_cost(chain: ChainKernel) -> CostSpec:
    if chain.kind == "glauber-ising":
        return CostSpec(kind="ising", graph=chain.graph, field=chain.h)
    return CostSpec(kind="sk", graph=chain.graph)


# ---------------------------------------------------------------------------
# CSR assembly (vectorized over the whole space, two-pass deterministic)
# ---------------------------------------------------------------------------


def _assemble_P(chain: ChainKernel) -> sp.csr_matrix:
    space = chain.space
    M = space.M
    masks = space.masks
    rows, cols, data = _offdiag_coo(chain, masks)
    if chain.zeta:
        data = data * (1.0 - chain.zeta)
    off = sp.coo_matrix((data, (rows, cols)), shape=(M, M)).tocsr()
    off.sort_indices()
    row_sums = np.asarray(off.sum(axis=1)).ravel()
    diag = 1.0 - row_sums
    P = (off + sp.diags(diag, format="csr")).tocsr()
    P.sort_indices()
    return P


def _offdiag_coo(chain: ChainKernel, masks: np.ndarray):
    n = chain.n
    M = len(masks)
    all_idx = np.arange(M, dtype=np.int64)
    rows_l, cols_l, data_l = [], [], []

    if chain.kind == "hypercube-walk":
        p = 1.0 / n
        for i in range(n):
            rows_l.append(all_idx)
            cols_l.append(masks ^ np.int64(1 << i))
            data_l.append(np.full(M, p))

    elif chain.kind == "transposition-walk":
        k = chain.space.k
        p = 1.0 / (k * (n - k))
        for u in range(n):
            up = (masks >> np.int64(u)) & 1
            for v in range(n):
                if v == u:
                    continue
                down = 1 - ((masks >> np.int64(v)) & 1)
                sel = np.flatnonzero(up & down)
                if len(sel) == 0:
                    continue
                nbr = masks[sel] ^ np.int64((1 << u) | (1 << v))
                rows_l.append(sel)
                cols_l.append(np.searchsorted(masks, nbr))
                data_l.append(np.full(len(sel), p))

    elif chain.kind == "glauber-hardcore":
        lam = chain.lam
        nbrm = chain.graph.neighbor_masks()
        p_rem = 1.0 / (n * (1.0 + lam))
        p_add = lam / (n * (1.0 + lam))
        for v in range(n):
            bit = np.int64(1 << v)
            occ = (masks & bit) != 0
            sel = np.flatnonzero(occ)
            if len(sel):
                rows_l.append(sel)
                cols_l.append(np.searchsorted(masks, masks[sel] ^ bit))
                data_l.append(np.full(len(sel), p_rem))
            free = np.flatnonzero((~occ) & ((masks & np.int64(nbrm[v])) == 0))
            if len(free):
                rows_l.append(free)
                cols_l.append(np.searchsorted(masks, masks[free] | bit))
                data_l.append(np.full(len(free), p_add))

    elif chain.kind in ("glauber-ising", "glauber-sk"):
        beta = chain.beta
        adj = chain.graph.adjacency()
        scale = 1.0 / math.sqrt(n) if chain.kind == "glauber-sk" else 1.0
        for v in range(n):
            l_v = np.zeros(M)
            for j, w in adj[v]:
                l_v += w * (2.0 * ((masks >> np.int64(j)) & 1) - 1.0)
            l_v *= scale
            if chain.kind == "glauber-ising" and chain.h is not None:
                l_v += chain.h[v]
            s_new = 1.0 - 2.0 * ((masks >> np.int64(v)) & 1)
            rows_l.append(all_idx)
            cols_l.append(masks ^ np.int64(1 << v))
            data_l.append(expit(-2.0 * beta * l_v * s_new) / n)
    else:  # pragma: no cover
        raise ValidationError(f"unknown chain kind {chain.kind!r}")

    rows = np.concatenate(rows_l).astype(np.int32, copy=False)
    cols = np.concatenate(cols_l).astype(np.int32, copy=False)
    data = np.concatenate(data_l)
    return rows, cols, data


def discriminant(chain: ChainKernel) -> SparseOperator:
    """D(P)_{xy} = sqrt(P(x,y) P(y,x)); exactly symmetric by construction.

    For symmetric kernels (hypercube, transposition) D = P entry for entry.
    Reversibility is verified via the detailed-balance residual before
    returning (skipped for symmetric kernels, where it holds exactly, and for
    operators too large to scan; those kernels are reversible in closed form).
    """
    P = chain.transition_matrix()
    if chain.kind in ("hypercube-walk", "transposition-walk"):
        D = P
    else:
        dist = stationary(chain)
        if P.nnz <= _DB_CHECK_NNZ_LIMIT:
            _check_detailed_balance(P, dist.probabilities())
        D = P.multiply(P.T).sqrt().tocsr()
        D.sort_indices()
    return SparseOperator(
        dim=P.shape[0],
        indptr=D.indptr,
        indices=D.indices,
        data=np.asarray(D.data, dtype=float),
        symmetric=True,
    )


def _check_detailed_balance(P: sp.csr_matrix, probs: np.ndarray):
    # residual of diag(pi) P - (diag(pi) P)^T over the joint sparsity pattern
    F = sp.diags(probs) @ P
    Q = F - F.T
    resid = float(np.abs(Q.data).max()) if Q.nnz else 0.0
    if resid > DETAILED_BALANCE_TOL:
        raise ReversibilityError(
            f"detailed balance residual {resid:.3e} exceeds {DETAILED_BALANCE_TOL:.0e}"
        )


def detailed_balance_residual(chain: ChainKernel) -> float:
    """max_{x,y} |pi(x)P(x,y) - pi(y)P(y,x)| with normalized pi (dense-scale check)."""
    P = chain.transition_matrix()
    probs = stationary(chain).probabilities()
    F = sp.diags(probs) @ P
    Q = F - F.T
    return float(np.abs(Q.data).max()) if Q.nnz else 0.0
