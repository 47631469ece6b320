"""Numerical evaluation of the sufficient conditions and predicted constants.

Everything here is computed exactly from enumerated state spaces: the
one-step stability constants Delta_P(eta) and Delta~_P, the pseudo-Lipschitz
norm ||H||_P, the empirical spectral-density exponent gamma, the
Herbst/Poincare tail exponents, the b* formulas, predicted runtime
exponents, log-Sobolev machinery, and annealing overlap schedules.

Conventions: all formulas use natural log internally; the lone base-2
appearance (the transposition-walk log-Sobolev bound) is converted at the
boundary and documented on the function.  Where an exact log-Sobolev
constant is unavailable the pipeline substitutes the exact spectral gap and
records which constant was used (``omega_used``).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.optimize
from scipy.special import logsumexp

from .chains import ChainKernel, StationaryDist
from .cost import CostSpec, EnergySummary, energies
from .errors import ValidationError
from .instances import Graph
from .rng import make_rng
from .spectral import g_eta
from .statespace import StateSpace


# ---------------------------------------------------------------------------
# one-step stability and smoothness
# ---------------------------------------------------------------------------


def pseudo_lipschitz(chain: ChainKernel, cost: CostSpec) -> float:
    """||H||_P = max_x E_{y~x}[(H(x) - H(y))^2], exact over the space.

    Summed term by term over the kernel's off-diagonal entries (self-loops
    contribute zero), which avoids the cancellation of the algebraic
    expansion.
    """
    return float(pseudo_lipschitz_per_state(chain, cost).max())


def pseudo_lipschitz_per_state(chain: ChainKernel, cost: CostSpec) -> np.ndarray:
    vals = energies(cost, chain.space.masks)
    P = chain.transition_matrix().tocoo()
    contrib = P.data * (vals[P.col] - vals[P.row]) ** 2
    return np.bincount(P.row, weights=contrib, minlength=chain.space.M)


def _h_eta_inverse(u: np.ndarray, eta: float, abs_e_star: float) -> np.ndarray:
    """Smallest preimage of u under h_eta(v) = g_eta(v/|E*|).

    For u < 0 the preimage is unique, |E*|(u*eta - 1 + eta); at u = 0 the
    preimage is a ray whose infimum (1-eta)E* gives the tightest Delta.
    """
    u = np.minimum(u, 0.0)  # clip +eps rounding fuzz
    out = abs_e_star * (u * eta - 1.0 + eta)
    return np.where(u < 0.0, out, -(1.0 - eta) * abs_e_star)


def delta_p_stability(chain: ChainKernel, cost: CostSpec, eta: float) -> tuple[float, float]:
    """(Delta_P(eta), Delta~_P): clamped and raw one-step energy inflation.

    Delta~_P = max_x (E_{y~x}[H(y)] - H(x)); Delta_P(eta) is the smallest
    Delta >= 0 with E_{y~x}[h_eta(H(y))] <= h_eta(H(x) + Delta) for all x,
    recovered by inverting h_eta at the averaged clamped energy.
    """
    if not (0.0 < eta < 1.0):
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    vals = energies(cost, chain.space.masks)
    e_star = float(vals.min())
    if e_star >= 0:
        raise ValidationError("delta_p_stability requires E* < 0")
    abs_e = abs(e_star)
    delta_tilde = float((chain.expect_step(vals) - vals).max())

    h = g_eta(vals / abs_e, eta)
    ph = chain.expect_step(h)
    pre = _h_eta_inverse(ph, eta, abs_e)
    delta_eta = float(np.maximum(0.0, pre - vals).max())
    return delta_eta, delta_tilde


def alpha_p(delta_eta: float, summary: EnergySummary, eta: float) -> float:
    """alpha_P = Delta_P(eta) / (|E*| (1 - eta)), the subdepolarizing form."""
    return delta_eta / (abs(summary.e_star) * (1.0 - eta))


def subdepolarizing_margin(
    chain: ChainKernel, cost: CostSpec, eta: float, cs=(0.25, 0.5, 1.0),
    alpha: float | None = None,
) -> float:
    """min over states and c of E_{y~x}[f(c H(y)/E*)] - f(c (1-alpha) H(x)/E*)
    with f(x) = -g_eta(-x); nonnegative iff the subdepolarizing property holds."""
    vals = energies(cost, chain.space.masks)
    e_star = float(vals.min())
    if e_star >= 0:
        raise ValidationError("subdepolarizing check requires E* < 0")
    if alpha is None:
        d_eta, _ = delta_p_stability(chain, cost, eta)
        alpha = d_eta / (abs(e_star) * (1.0 - eta))

    def f(x):
        return np.maximum(0.0, (np.asarray(x) - (1.0 - eta)) / eta)

    margin = np.inf
    ratio = vals / e_star                    # in [0, 1] on the feasible set
    for c in cs:
        lhs = chain.expect_step(f(c * ratio))
        rhs = f(c * (1.0 - alpha) * ratio)
        margin = min(margin, float((lhs - rhs).min()))
    return margin


# ---------------------------------------------------------------------------
# spectral density and tail bounds
# ---------------------------------------------------------------------------


def spectral_density(cost: CostSpec, space: StateSpace, dist: StationaryDist,
                     eta: float, summary: EnergySummary) -> tuple[float, float]:
    """(tail mass pi(H <= (1-eta)E*), empirical gamma with equality).

    gamma_emp = ln(tail)/ln(pi(E*)) is the largest exponent for which the
    spectral density condition holds.  The minimizers always sit inside the
    tail, so the mass is never zero.
    """
    if not (0.0 < eta < 1.0):
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    vals = energies(cost, space.masks)
    thr = (1.0 - eta) * summary.e_star
    tol = 1e-12 * max(1.0, abs(summary.e_star))
    probs = dist.probabilities()
    tail = float(probs[vals <= thr + tol].sum())
    assert tail > 0.0, "minimizers are in the tail by construction"
    log_pi = math.log(summary.pi_estar)
    if log_pi == 0.0:
        return tail, 1.0  # pi(E*) = 1: the condition holds trivially
    return tail, math.log(tail) / log_pi + 0.0  # +0.0 normalizes -0.0 at tail = 1


def tail_bound_constants(const: float, summary: EnergySummary, pseudo_lip: float,
                         method: str, eta: float) -> float:
    """gamma certified by a functional inequality plus pseudo-Lipschitzness.

    herbst:   gamma = omega * dev^2 / (||H||_P * ln(1/pi(E*)))
    poincare: gamma = sqrt(delta) * dev / (sqrt(||H||_P) * ln(1/pi(E*)))

    where dev = E_pi[H] - (1-eta)E* > 0 is the magnitude of the deviation.
    """
    if const <= 0 or pseudo_lip <= 0:
        raise ValidationError("tail bound needs positive constants")
    dev = summary.mean_pi - (1.0 - eta) * summary.e_star
    if dev <= 0:
        raise ValidationError(
            f"(1-eta)E* = {(1 - eta) * summary.e_star:.6g} is not below the mean "
            f"{summary.mean_pi:.6g}; tail bound vacuous"
        )
    ln_inv_pi = -math.log(summary.pi_estar)
    if ln_inv_pi <= 0:
        raise ValidationError("pi(E*) = 1 leaves no tail to bound")
    if method == "herbst":
        return const * dev**2 / (pseudo_lip * ln_inv_pi)
    if method == "poincare":
        return math.sqrt(const) * dev / (math.sqrt(pseudo_lip) * ln_inv_pi)
    raise ValidationError(f"unknown tail-bound method {method!r}")


@dataclass
class TailCheckReport:
    max_violation: float     # max over the grid of lhs - rhs; <= 0 means the bound holds
    worst_t: float
    delta: float
    pseudo_lip: float
    points: list


def poincare_tail_check(chain: ChainKernel, cost: CostSpec, space: StateSpace,
                        dist: StationaryDist, summary: EnergySummary,
                        delta: float, n_points: int = 20) -> TailCheckReport:
    """Exact low-energy tail vs exp(-sqrt(delta) t / sqrt(||H||_P)) on a t grid.

    The grid sweeps t in (0, E_pi[H] - E*]; lhs = pi(H <= E_pi[H] - t).
    """
    vals = energies(cost, space.masks)
    probs = dist.probabilities()
    lip = pseudo_lipschitz(chain, cost)
    t_max = summary.mean_pi - summary.e_star
    pts = []
    worst = -np.inf
    worst_t = 0.0
    for i in range(1, n_points + 1):
        t = t_max * i / n_points
        lhs = float(probs[vals <= summary.mean_pi - t + 1e-12].sum())
        rhs = math.exp(-math.sqrt(delta) * t / math.sqrt(lip)) if lip > 0 else 1.0
        pts.append((t, lhs, rhs))
        if lhs - rhs > worst:
            worst, worst_t = lhs - rhs, t
    return TailCheckReport(max_violation=float(worst), worst_t=worst_t,
                           delta=delta, pseudo_lip=lip, points=pts)


# ---------------------------------------------------------------------------
# b*, predicted exponents, log-Sobolev machinery
# ---------------------------------------------------------------------------


def b_star(gamma: float, const: float, summary: EnergySummary, method: str) -> float:
    """Thresholds below which the short-path condition is certified.

    log-Sobolev: b* = (2/3) gamma omega ln(1/pi(E*));
    Poincare:    b* = delta (4 sqrt(6) - 1) / 10.
    """
    if const <= 0:
        raise ValidationError("b* needs a positive functional-inequality constant")
    if method == "log-sobolev":
        return (2.0 / 3.0) * gamma * const * (-math.log(summary.pi_estar))
    if method == "poincare":
        return const * (4.0 * math.sqrt(6.0) - 1.0) / 10.0
    raise ValidationError(f"unknown b* method {method!r}")


def predicted_exponent(b: float, eta: float, summary: EnergySummary,
                       delta_p: float) -> float:
    """Runtime exponent 1/2 - eta(1-eta)|E*| b / (2 ln(1/pi(E*)) Delta_P).

    A value below 0 is returned as computed but flagged with a warning: the
    formula has left its regime of validity.
    """
    if delta_p <= 0:
        raise ValidationError(f"Delta_P must be positive, got {delta_p}")
    if b < 0:
        raise ValidationError(f"b must be >= 0, got {b}")
    ln_inv_pi = -math.log(summary.pi_estar)
    if ln_inv_pi <= 0:
        raise ValidationError("pi(E*) = 1 leaves nothing to search for")
    expo = 0.5 - eta * (1.0 - eta) * abs(summary.e_star) * b / (2.0 * ln_inv_pi * delta_p)
    if expo < 0:
        warnings.warn(f"predicted exponent {expo:.4f} < 0: outside the formula's regime")
    return expo


@dataclass
class TranspositionLSBound:
    omega_lower: float
    tau0: float
    tau_ls_upper: float
    n: int
    k: int


def transposition_ls_bound(n: int, k: int, tau0: float = 1.0) -> TranspositionLSBound:
    """Log-Sobolev lower bound for the transposition walk.

    omega >= n / (k(n-k) tau_LS) with tau_LS <= tau0 * log2(n / min(k, n-k));
    tau0 is a user-supplied stand-in for the universal constant and is echoed
    in the report.  Base-2 log, per the source bound.
    """
    if not (1 <= k <= n - 1):
        raise ValidationError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if tau0 <= 0:
        raise ValidationError(f"tau0 must be positive, got {tau0}")
    tau_ls = tau0 * math.log2(n / min(k, n - k))
    return TranspositionLSBound(
        omega_lower=n / (k * (n - k) * tau_ls), tau0=tau0, tau_ls_upper=tau_ls,
        n=n, k=k,
    )


@dataclass
class LSEstimate:
    delta_exact: float
    omega_estimate: float
    stagnated: bool


def _dirichlet_entropy_ratio(u: np.ndarray, S, probs: np.ndarray):
    """R(exp(u)) and its gradient in u; S = diag(pi)(I - P) as a sparse matrix."""
    f = np.exp(u)
    Sf = S @ f
    dval = float(f @ Sf)
    f2 = f * f
    m = float(probs @ f2)
    ent = float(probs @ (f2 * np.log(f2 / m)))
    if ent <= 1e-300:
        return np.inf, np.zeros_like(u)
    grad_d = 2.0 * Sf
    grad_e = 2.0 * probs * f * np.log(f2 / m)
    ratio = dval / ent
    grad_f = (grad_d - ratio * grad_e) / ent
    return ratio, grad_f * f


def ls_constant_estimate(chain: ChainKernel, n_starts: int = 6,
                         maxiter: int = 300) -> LSEstimate:
    """(exact Poincare constant, heuristic log-Sobolev estimate).

    delta_exact is the spectral gap lambda1 - lambda0 of -D (the Poincare
    constant of a reversible chain).  omega_estimate minimizes
    D(f, f)/Ent_pi(f^2) over f = exp(u) with multi-start L-BFGS; the
    degenerate direction f -> 1 + eps*f2 yields the analytic candidate
    delta/2, so the estimate is always upper-bracketed by delta_exact.
    """
    M = chain.space.M
    if M > 4096:
        raise ValidationError("log-Sobolev estimation needs the dense regime (M <= 4096)")
    import scipy.sparse as sp

    dist = _stationary_of(chain)
    probs = dist.probabilities()
    P = chain.transition_matrix()
    S = sp.diags(probs) @ (sp.eye(M, format="csr") - P)
    S = (S + S.T) * 0.5  # symmetric for reversible chains; harden numerically

    # spectral pieces: D(P) dense, exact gap and second eigenvector
    Pd = P.toarray()
    Ddense = np.sqrt(Pd * Pd.T)
    vals, vecs = np.linalg.eigh(-Ddense)
    delta_exact = float(vals[1] - vals[0])

    sqrt_pi = np.sqrt(probs)
    g2 = vecs[:, 1] / np.where(sqrt_pi > 0, sqrt_pi, 1.0)
    g2 = g2 - probs @ g2
    nrm = math.sqrt(float(probs @ (g2 * g2)))
    if nrm > 0:
        g2 /= nrm

    candidates = [delta_exact / 2.0]  # limit along f = 1 + eps*g2
    stagnated = False
    starts = [np.log1p(1e-3 * np.clip(g2, -0.5, 0.5))]
    rng = make_rng(0x1057AB, M)
    for _ in range(max(0, n_starts - 1)):
        starts.append(0.5 * rng.standard_normal(M))
    for u0 in starts:
        res = scipy.optimize.minimize(
            _dirichlet_entropy_ratio, u0, args=(S, probs), jac=True,
            method="L-BFGS-B", options={"maxiter": maxiter},
        )
        if not res.success:
            stagnated = True
        if np.isfinite(res.fun):
            candidates.append(float(res.fun))
    return LSEstimate(delta_exact=delta_exact,
                      omega_estimate=min(candidates), stagnated=stagnated)


def _stationary_of(chain: ChainKernel) -> StationaryDist:
    from .chains import stationary

    return stationary(chain)


# ---------------------------------------------------------------------------
# annealing overlap schedules
# ---------------------------------------------------------------------------


@dataclass
class AnnealStep:
    param_prev: float
    param_next: float
    overlap: float
    bound: float


def anneal_overlap_schedule(family: str, space: StateSpace, grid,
                            cost: CostSpec | None = None) -> list[AnnealStep]:
    """Exact consecutive-state overlaps <sqrt(pi^(k-1)), sqrt(pi^(k))>.

    hardcore: grid of fugacities starting at lambda_1 > 0; the bound for a
    multiplicative step Delta is 1 - n*Delta/2 (vacuous at Delta = 2/n).
    ising: grid of inverse temperatures starting at beta = 0 over the
    hypercube; the bound is exp(-(beta_k - beta_{k-1}) ||H|| / 2).
    Steps violating the size preconditions warn but are still computed.
    """
    grid = [float(x) for x in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("anneal grid must be strictly increasing")
    n = space.n
    out: list[AnnealStep] = []
    if family == "hardcore":
        if grid[0] <= 0:
            raise ValidationError("hardcore schedule starts at lambda > 0")
        occ = np.bitwise_count(space.masks).astype(float)
        logw = [occ * math.log(lam) for lam in grid]
        for a in range(1, len(grid)):
            step = grid[a] / grid[a - 1] - 1.0
            if step > 2.0 / n + 1e-12:
                warnings.warn(f"hardcore step Delta={step:.4g} exceeds 2/n")
            out.append(AnnealStep(grid[a - 1], grid[a],
                                  _sqrt_overlap(logw[a - 1], logw[a]),
                                  1.0 - n * step / 2.0))
        return out
    if family == "ising":
        if cost is None:
            raise ValidationError("ising schedule needs the cost Hamiltonian")
        if abs(grid[0]) > 1e-12:
            raise ValidationError("ising schedule starts at beta = 0")
        vals = energies(cost, space.masks)
        hnorm = float(np.abs(vals).max())
        for a in range(1, len(grid)):
            step = grid[a] - grid[a - 1]
            if hnorm > 0 and step > 1.0 / hnorm + 1e-12:
                warnings.warn(f"ising step {step:.4g} exceeds 1/||H||")
            out.append(AnnealStep(grid[a - 1], grid[a],
                                  _sqrt_overlap(-grid[a - 1] * vals, -grid[a] * vals),
                                  math.exp(-step * hnorm / 2.0)))
        return out
    raise ValidationError(f"unknown anneal family {family!r}")


def _sqrt_overlap(logw_a: np.ndarray, logw_b: np.ndarray) -> float:
    za = logsumexp(logw_a)
    zb = logsumexp(logw_b)
    return float(math.exp(logsumexp(0.5 * (logw_a + logw_b)) - 0.5 * (za + zb)))


# ---------------------------------------------------------------------------
# MaxCut closed forms (swap-counting expansion of the one-step variation)
# ---------------------------------------------------------------------------


def maxcut_delta_tilde_bound(abs_e_star: float, n: int, k: int) -> float:
    """Per-state upper bound |C*_k| (n-2) / (k(n-k)) on the one-step inflation."""
    return abs_e_star * (n - 2) / (k * (n - k))


def _single_edge_expectation(si: int, sj: int, n: int, k: int) -> float:
    kn = k * (n - k)
    if si != sj:
        return ((k - 1) * (n - k - 1) + 1) / kn
    if si == 1:
        return 2.0 * (n - k) / kn            # = 2/k
    return 2.0 * k / kn                      # = 2/(n-k)


def _joint_cut_expectation(spins: dict, e: tuple, f: tuple, n: int, k: int) -> float:
    """P[both e and f cut after one swap | current spins of the involved vertices].

    Exact for any overlap pattern of the two edges: swap categories enumerate
    the involved vertices individually plus a generic bucket on each side.
    """
    involved = sorted(set(e) | set(f))
    ups = [v for v in involved if spins[v] == 1]
    downs = [v for v in involved if spins[v] == -1]
    u_cats = [(v, 1) for v in ups] + [(None, k - len(ups))]
    v_cats = [(v, 1) for v in downs] + [(None, n - k - len(downs))]
    count = 0
    for (u, mu) in u_cats:
        if mu <= 0:
            continue
        for (v, mv) in v_cats:
            if mv <= 0:
                continue
            s = dict(spins)
            if u is not None:
                s[u] = -1
            if v is not None:
                s[v] = 1
            if s[e[0]] != s[e[1]] and s[f[0]] != s[f[1]]:
                count += mu * mv
    return count / (k * (n - k))


def maxcut_pseudo_lipschitz_expansion(graph: Graph, k: int,
                                      per_state: bool = False):
    """Closed-form E_{y~x}[(H(y)-H(x))^2] for MaxCut kinds under the
    transposition walk, as a double sum over edge pairs with exact joint
    cut probabilities (including shared-vertex pairs).

    Returns the norm max_x, or the per-state array when ``per_state``.
    """
    n = graph.n
    if not (1 <= k <= n - 1):
        raise ValidationError(f"need 1 <= k <= n-1, got k={k}")
    w = graph.edge_weights()
    edges = list(graph.edges)
    space_masks = _slice_masks_array(n, k)
    out = np.zeros(len(space_masks))
    for idx, mask in enumerate(space_masks):
        spin = [1 if (int(mask) >> v) & 1 else -1 for v in range(n)]
        total = 0.0
        cut = [spin[i] != spin[j] for (i, j) in edges]
        exp1 = [_single_edge_expectation(spin[i], spin[j], n, k) for (i, j) in edges]
        for a, e in enumerate(edges):
            ya = 1.0 if cut[a] else 0.0
            total += w[a] * w[a] * ((1.0 - 2.0 * ya) * exp1[a] + ya)
            for bidx in range(a + 1, len(edges)):
                f = edges[bidx]
                yb = 1.0 if cut[bidx] else 0.0
                spins = {v: spin[v] for v in set(e) | set(f)}
                joint = _joint_cut_expectation(spins, e, f, n, k)
                term = joint - ya * exp1[bidx] - yb * exp1[a] + ya * yb
                total += 2.0 * w[a] * w[bidx] * term
        out[idx] = total
    if per_state:
        return out
    return float(out.max())


def _slice_masks_array(n: int, k: int) -> np.ndarray:
    from .statespace import HammingSliceSpace

    return HammingSliceSpace(n, k).masks


# ---------------------------------------------------------------------------
# the combined condition report
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    delta_p_eta: float
    delta_tilde: float
    alpha_p: float
    pseudo_lip: float
    gamma_emp: float
    gamma_herbst: float | None
    gamma_poincare: float | None
    b_star_ls: float | None
    b_star_poinc: float
    omega_used: float
    delta_gap: float
    predicted_exponent: float | None
    eta: float
    b: float
    tail_mass: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def condition_report(problem, eta: float, b: float) -> ConditionReport:
    """Evaluate every condition for one (instance, chain, eta) at coupling b.

    omega_used is the constant substituted into the log-Sobolev formulas:
    the exact spectral gap, since an exact omega is unavailable in general
    (the source results substitute constants the same way, with caveats).
    gamma entries are None when the tail deviation is vacuous.
    """
    chain, cost, space = problem.chain, problem.cost, problem.space
    summary, dist = problem.summary, problem.dist
    lip = pseudo_lipschitz(chain, cost)
    d_eta, d_tilde = delta_p_stability(chain, cost, eta)
    a_p = alpha_p(d_eta, summary, eta)
    tail, gamma_emp = spectral_density(cost, space, dist, eta, summary)
    delta_gap = problem.d_spectrum().gap
    omega_used = delta_gap
    try:
        gamma_h = tail_bound_constants(omega_used, summary, lip, "herbst", eta)
    except ValidationError:
        gamma_h = None
    try:
        gamma_p = tail_bound_constants(delta_gap, summary, lip, "poincare", eta)
    except ValidationError:
        gamma_p = None
    b_ls = None
    if summary.pi_estar < 1.0:
        b_ls = b_star(gamma_emp, omega_used, summary, "log-sobolev")
    b_pc = b_star(gamma_emp, delta_gap, summary, "poincare")
    pred = None
    if d_eta > 0 and summary.pi_estar < 1.0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pred = predicted_exponent(b, eta, summary, d_eta)
    return ConditionReport(
        delta_p_eta=d_eta, delta_tilde=d_tilde, alpha_p=a_p, pseudo_lip=lip,
        gamma_emp=gamma_emp, gamma_herbst=gamma_h, gamma_poincare=gamma_p,
        b_star_ls=b_ls, b_star_poinc=b_pc, omega_used=omega_used,
        delta_gap=delta_gap, predicted_exponent=pred, eta=eta, b=b,
        tail_mass=tail,
    )
