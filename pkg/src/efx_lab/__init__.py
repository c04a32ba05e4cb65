"""EFX allocations for three agents and rainbow cycles in layered digraphs.

Exact-rational implementations of a three-agent EFX solver (two general
monotone agents plus one MMS-feasible agent), valuation class checkers, the
non-degeneracy perturbation, and three rainbow-cycle finders, all
cross-checkable against brute-force oracles at desk scale.
"""

from .bitsets import goods_from_mask, mask_from_goods
from .efx_core import (
    Allocation,
    EnvyWitness,
    efx_feasible,
    is_efx,
    pr_algorithm,
    strong_envy_witness,
)
from .efx_three import (
    SolverState,
    assemble_if_possible,
    improvement_step,
    initialize_state,
    min_improving_subset,
    solve_three_agent_efx,
)
from .errors import (
    DegeneracyError,
    EfxLabError,
    InstanceTooLargeError,
    InternalInvariantError,
    InvalidEpsilonError,
    MalformedValuationError,
    NotMmsFeasibleError,
    PreconditionError,
    StructuralContradictionError,
    ThresholdNotMetError,
)
from .oracle import (
    GeneratorConfig,
    brute_force_rainbow_cycle,
    enumerate_efx,
    random_instance,
    random_layered_graph,
)
from .rainbow import (
    LayeredDigraph,
    PermutationLayeredDigraph,
    RainbowCycle,
    conditional_expectation,
    cycle_violations,
    extract_cycle,
    find_rainbow_cycle_derandomized,
    find_rainbow_cycle_permutation,
    find_rainbow_cycle_randomized,
    threshold_k,
    validate,
)
from .valuations import (
    Instance,
    Valuation,
    dense_values,
    is_mms_feasible,
    is_monotone,
    is_nice_cancelable,
    is_non_degenerate,
    min_value_gap,
    perturb_instance,
    value,
)

__version__ = "0.1.0"
