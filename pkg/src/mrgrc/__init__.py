"""Storage vs inter-cluster repair bandwidth for clustered codes with batch repair."""
from .bounds import (
    EXACT,
    FUNCTIONAL,
    bound,
    classify,
    exact_bound,
    functional_bound,
    local_help_profile,
    mbr_profile,
    min_beta,
    msr_check,
    tradeoff_curve,
)
from .exactrep import (
    LinearMrgrc,
    entropy,
    lemma1_permutation,
    lift,
    load_code,
    save_code,
    stacked_mbr_code,
    verify_code,
    verify_exact_bound,
)
from .gf import GF256, GF65536, GaloisField, in_rowspace, random_matrix, rank
from .ifg import (
    FailureTrace,
    RepairEvent,
    adversarial_trace,
    build_ifg,
    construct_cut,
    converse_search,
    max_flow,
)
from .params import Decomposition, ResourceProfile, SystemParams, decompose, validate
from .rlnc import collect, init_storage, monte_carlo, repair_batch, run_trace

__version__ = "0.1.0"
