"""Deterministic approximate counting by correlation decay.

Counts list colorings of triangle-free graphs and partition functions of
pairwise Markov random fields with depth-truncated marginal recursions, and
checks them against an exact variable-elimination oracle.
"""

from .coloring import (
    CountResult,
    DecayConstants,
    count_color,
    derive_constants,
    marginal_error_profile,
    phi,
    phi_vector,
    required_depth,
    theoretical_error_bound,
)
from .errors import *  # noqa: F403
from .instance import (
    ColoringInstance,
    ConditionReport,
    Graph,
    MrfInstance,
    check_list_condition,
    greedy_list_coloring,
    instance_size,
    reduced_pair,
    solve_alpha_threshold,
    validate_graph,
)
from .kernel import default_backend, native_available
from .mrf import (
    GammaReport,
    PottsParams,
    coloring_to_mrf,
    compute_z,
    condition_on,
    gamma_condition,
    phi_mrf,
    potts,
    potts_condition,
    reduce_node,
)
from .oracle import (
    exact_marginal_coloring,
    exact_marginal_mrf,
    exact_z_coloring,
    exact_z_mrf,
    verify_cavity_coloring,
    verify_cavity_mrf,
    verify_marginal_recursion,
)

__version__ = "0.1.0"
