"""Sparse symmetric operators and the extremal eigensolver.

The generalized short-path operator is assembled as
H_b = -D(P) + b * diag(g_eta(H(z)/|E*|)), which differs from -D(P) only on
the diagonal.  The solver is Lanczos with full reorthogonalization against
the stored basis; the second eigenpair comes from a second run on the
deflated operator (the converged ground vector projected out).  Dimensions
up to 2048 fall back to dense diagonalization.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConvergenceError, ValidationError
from .rng import make_rng

DENSE_FALLBACK_DIM = 2048
DEGENERACY_TOL = 1e-10
_DUMP_MAGIC = b"SPLO"


@dataclass
class SparseOperator:
    """Symmetric real matrix in CSR layout over the feasible index space."""

    dim: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    symmetric: bool = True
    _csr: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def to_scipy(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.dim, self.dim)
            )
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValidationError(f"vector has shape {v.shape}, operator dim {self.dim}")
        return self.to_scipy() @ v

    def one_norm(self) -> float:
        if self.nnz == 0:
            return 0.0
        return float((abs(self.to_scipy()) @ np.ones(self.dim)).max())

    @classmethod
    def from_scipy(cls, A: sp.spmatrix, symmetric: bool = True) -> "SparseOperator":
        C = A.tocsr()
        C.sort_indices()
        return cls(dim=C.shape[0], indptr=C.indptr, indices=C.indices,
                   data=np.asarray(C.data, dtype=float), symmetric=symmetric)

    # Debug dump: header (magic, version, dim, nnz, symmetric) then
    # indptr/indices as little-endian int64 and data as little-endian float64.
    def dump(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_DUMP_MAGIC)
            fh.write(struct.pack("<IQQB", 1, self.dim, self.nnz, int(self.symmetric)))
            fh.write(np.asarray(self.indptr, dtype="<i8").tobytes())
            fh.write(np.asarray(self.indices, dtype="<i8").tobytes())
            fh.write(np.asarray(self.data, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "SparseOperator":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _DUMP_MAGIC:
                raise ValidationError(f"not an operator dump (magic {magic!r})")
            version, dim, nnz, symmetric = struct.unpack("<IQQB", fh.read(21))
            if version != 1:
                raise ValidationError(f"unsupported dump version {version}")
            indptr = np.frombuffer(fh.read(8 * (dim + 1)), dtype="<i8")
            indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8")
            data = np.frombuffer(fh.read(8 * nnz), dtype="<f8")
        return cls(dim=int(dim), indptr=indptr.astype(np.int64),
                   indices=indices.astype(np.int64), data=data.astype(float),
                   symmetric=bool(symmetric))


def matvec(A: SparseOperator, v: np.ndarray) -> np.ndarray:
    """Exact CSR product with deterministic per-row summation order."""
    return A.matvec(v)


def g_eta(x, eta: float):
    """The piecewise-linear clamp min(0, (x + 1 - eta)/eta)."""
    if not (0.0 < eta < 1.0):
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    return np.minimum(0.0, (np.asarray(x, dtype=float) + 1.0 - eta) / eta)


def assemble_Hb(D: SparseOperator, cost, space, summary, b: float, eta: float) -> SparseOperator:
    """H_b = -D + diag(b * g_eta(H(z)/|E*|)).

    At b = 0 the returned values are the bit-exact negation of D; for b > 0
    only the diagonal differs structurally (states in the clamp region carry
    no explicit entry).
    """
    from .cost import energies  # local import to avoid a cycle

    if b < 0:
        raise ValidationError(f"b must be >= 0, got {b}")
    if summary.e_star >= 0:
        raise ValidationError("assemble_Hb requires E* < 0")
    g = g_eta(energies(cost, space.masks) / abs(summary.e_star), eta)
    if b == 0.0:
        return SparseOperator(dim=D.dim, indptr=D.indptr, indices=D.indices,
                              data=-D.data, symmetric=True)
    return _add_diagonal(D, b * g)


def _add_diagonal(D: SparseOperator, diag: np.ndarray) -> SparseOperator:
    sel = np.flatnonzero(diag)
    extra = sp.coo_matrix((diag[sel], (sel, sel)), shape=(D.dim, D.dim))
    H = (-D.to_scipy() + extra.tocsr()).tocsr()
    H.sort_indices()
    return SparseOperator.from_scipy(H, symmetric=True)


@dataclass
class SpectralResult:
    lambda0: float
    lambda1: float
    ground: np.ndarray
    residual0: float
    residual1: float
    iterations: int
    method: str                      # "lanczos" or "dense"
    degenerate: bool = False
    second: np.ndarray | None = None

    @property
    def gap(self) -> float:
        """lambda1 - lambda0, reported as 0 when numerically degenerate."""
        if self.degenerate:
            return 0.0
        return self.lambda1 - self.lambda0


_BREAKDOWN = 1e-14


def _ritz_smallest(alphas: list, betas: list) -> tuple[float, np.ndarray]:
    a = np.asarray(alphas)
    if len(a) == 1:
        return float(a[0]), np.ones(1)
    b = np.asarray(betas)
    vals, vecs = sla.eigh_tridiagonal(a, b, select="i", select_range=(0, 0))
    return float(vals[0]), vecs[:, 0]


def _lanczos_smallest(
    A: SparseOperator,
    tol: float,
    max_iter: int,
    v0: np.ndarray | None = None,
    deflate: tuple[np.ndarray, ...] = (),
    max_basis: int = 600,
    check_every: int = 5,
) -> tuple[float, np.ndarray, float, int]:
    """Smallest eigenpair of A restricted to the complement of ``deflate``.

    Full reorthogonalization (two classical Gram-Schmidt passes) against the
    stored basis; restarts from the best Ritz vector if the basis cap is hit.
    """
    dim = A.dim
    mv = A.matvec
    breakdown = _BREAKDOWN * max(A.one_norm(), 1.0)

    def project_out(w):
        for d in deflate:
            w -= (d @ w) * d
        return w

    if v0 is None:
        v = make_rng(0x17A9C205, dim).standard_normal(dim)
    else:
        v = np.array(v0, dtype=float)
    v = project_out(v)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValidationError("start vector vanishes after deflation")
    v = v / nrm

    total_iters = 0
    best_resid = np.inf
    width = min(max_basis, dim, max_iter)
    V = np.empty((min(64, width), dim))  # grown on demand up to `width`

    while total_iters < max_iter:
        alphas: list[float] = []
        betas: list[float] = []
        V[0] = v
        j = 0
        theta, s = 0.0, np.ones(1)
        while True:
            w = mv(V[j])
            w = project_out(w)
            a = float(V[j] @ w)
            alphas.append(a)
            w -= a * V[j]
            if j > 0:
                w -= betas[-1] * V[j - 1]
            Vj = V[: j + 1]
            w -= Vj.T @ (Vj @ w)
            w -= Vj.T @ (Vj @ w)
            w = project_out(w)
            bnorm = float(np.linalg.norm(w))
            total_iters += 1

            exhausted = (j + 1 >= width) or (total_iters >= max_iter) or (j + 1 >= dim)
            if bnorm <= breakdown or exhausted or (j + 1) % check_every == 0:
                theta, s = _ritz_smallest(alphas, betas)
                resid_est = abs(bnorm * s[-1])
                best_resid = min(best_resid, resid_est)
                if resid_est <= tol or bnorm <= breakdown:
                    y = V[: j + 1].T @ s
                    y = project_out(y)
                    y /= np.linalg.norm(y)
                    resid = float(np.linalg.norm(project_out(mv(y)) - theta * y))
                    return theta, y, resid, total_iters
            if exhausted:
                break
            betas.append(bnorm)
            j += 1
            if j >= V.shape[0]:
                grown = np.empty((min(width, 2 * V.shape[0]), dim))
                grown[: V.shape[0]] = V
                V = grown
            V[j] = w / bnorm

        # restart from the current best Ritz vector
        y = V[: j + 1].T @ s
        y = project_out(y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            break
        v = y / nrm

    raise ConvergenceError(
        f"Lanczos did not reach tol={tol:.3e} within {max_iter} iterations "
        f"(best residual {best_resid:.3e})",
        residuals=(best_resid,),
    )


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    if v.sum() < 0:
        return -v
    return v


def lowest_two_eigs(
    A: SparseOperator,
    tol: float | None = None,
    max_iter: int = 5000,
    method: str = "auto",
    v0: np.ndarray | None = None,
) -> SpectralResult:
    """Two smallest eigenpairs of a symmetric operator.

    method="auto" uses dense diagonalization for dim <= 2048 and Lanczos
    above; "lanczos"/"dense" force the path.  The ground vector is
    sign-normalized so that its entry sum is >= 0.  A gap below 1e-10 is
    flagged degenerate and reported as gap 0.
    """
    if not A.symmetric:
        raise ValidationError("lowest_two_eigs requires a symmetric operator")
    if A.dim < 2:
        raise ValidationError(f"operator dimension must be >= 2, got {A.dim}")
    if tol is None:
        tol = 1e-10 * max(A.one_norm(), 1.0)

    if method == "dense" or (method == "auto" and A.dim <= DENSE_FALLBACK_DIM):
        dense = A.to_dense()
        vals, vecs = np.linalg.eigh(dense)
        ground = _sign_normalize(vecs[:, 0].copy())
        second = vecs[:, 1].copy()
        r0 = float(np.linalg.norm(dense @ ground - vals[0] * ground))
        r1 = float(np.linalg.norm(dense @ second - vals[1] * second))
        lam0, lam1 = float(vals[0]), float(vals[1])
        return SpectralResult(
            lambda0=lam0, lambda1=lam1, ground=ground, residual0=r0, residual1=r1,
            iterations=0, method="dense",
            degenerate=(lam1 - lam0) < DEGENERACY_TOL, second=second,
        )
    if method not in ("auto", "lanczos"):
        raise ValidationError(f"unknown method {method!r}")

    lam0, ground, r0, it0 = _lanczos_smallest(A, tol, max_iter, v0=v0)
    ground = _sign_normalize(ground)
    lam1, second, r1, it1 = _lanczos_smallest(
        A, tol, max_iter, deflate=(ground,)
    )
    if lam1 < lam0:  # deflated run found a lower state: degenerate ground space
        lam0, lam1 = lam1, lam0
    return SpectralResult(
        lambda0=lam0, lambda1=lam1, ground=ground, residual0=r0, residual1=r1,
        iterations=it0 + it1, method="lanczos",
        degenerate=(lam1 - lam0) < DEGENERACY_TOL, second=second,
    )


def ground_state(
    A: SparseOperator,
    tol: float | None = None,
    max_iter: int = 5000,
    v0: np.ndarray | None = None,
) -> tuple[float, np.ndarray, float, int]:
    """Ground pair only (used by the phase-transition bisection, where warm
    starts across nearby b values cut the iteration count).

    Dense diagonalization below dim 512; above that Lanczos, which a warm
    start makes much cheaper than a dense solve up to the usual fallback."""
    if not A.symmetric:
        raise ValidationError("ground_state requires a symmetric operator")
    if tol is None:
        tol = 1e-10 * max(A.one_norm(), 1.0)
    if A.dim <= 512 or (v0 is None and A.dim <= DENSE_FALLBACK_DIM):
        dense = A.to_dense()
        vals, vecs = np.linalg.eigh(dense)
        g = _sign_normalize(vecs[:, 0].copy())
        r = float(np.linalg.norm(dense @ g - vals[0] * g))
        return float(vals[0]), g, r, 0
    lam0, g, r, it = _lanczos_smallest(A, tol, max_iter, v0=v0)
    return lam0, _sign_normalize(g), r, it
