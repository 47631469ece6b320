"""shortpathlab: a numerical laboratory for generalized short-path Hamiltonians
H_b = -D(P) + b*g_eta(H/|E*|) over reversible Markov chains.

Builds problem instances, enumerates feasible spaces, assembles sparse
operators, computes the spectral quantities governing short-path runtimes
(overlaps, gaps, phase-transition b, fitted exponents), evaluates the
stability/tail/b* conditions numerically, and benchmarks against classical
Markov Chain Search, all at desk scale.
"""

__version__ = "0.1.0"

from .chains import (
    ChainKernel,
    StationaryDist,
    critical_threshold,
    discriminant,
    make_chain,
    stationary,
)
from .cost import (
    Constraint,
    CostSpec,
    EnergySummary,
    eval_energy,
    ground_truth,
    independence_constraints,
    make_csp_penalized,
    mean_energy_closed_form,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    ShortPathLabError,
    ValidationError,
)
from .instances import Graph, InstanceSpec, gen_graph, load_graph, save_graph
from .search import SearchOutcome, gibbs_vs_uniform_advantage, markov_chain_search, run_chain
from .shortpath import (
    ShortPathMetrics,
    ShortPathProblem,
    approx_projector_overlap,
    energy_shift_check,
    phase_transition_b,
    profile,
    runtime_optimal_b,
)
from .spectral import SparseOperator, SpectralResult, assemble_Hb, g_eta, lowest_two_eigs, matvec
from .statespace import SpinConfig, StateSpace, build_statespace
from .theory import (
    ConditionReport,
    anneal_overlap_schedule,
    b_star,
    condition_report,
    delta_p_stability,
    ls_constant_estimate,
    predicted_exponent,
    pseudo_lipschitz,
    spectral_density,
    tail_bound_constants,
    transposition_ls_bound,
)
