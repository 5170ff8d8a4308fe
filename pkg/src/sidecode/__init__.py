"""Finite-alphabet workbench for fixed-length source coding with side
information: explicit optimal codes, multi-code joint error, variational
divergence identities, and reliability-function curves."""

from .codes import (
    ACode,
    BCode,
    CodingSystemView,
    CorrectSet,
    PairAlphabet,
    b_to_a,
    correct_set,
    error_probability,
    lossy_correct_set,
    map_decoder,
    merge_a_codes,
    min_size_for_error,
    optimal_a_code,
    optimal_a_error,
    optimal_b_code,
)
from .errors import ConfigError, ResourceLimitError
from .exponents import (
    SingleLetterModel,
    dsbs_model,
    dsbs_pair,
    empirical_exponent_sweep,
    iid_model,
    mixture_model,
    predicted_eps_mixed,
    rho_high_rate,
    rho_low_rate,
)
from .measures import (
    Dist,
    EventSet,
    TiltLevel,
    TiltTrace,
    conditional_entropy,
    conditional_restriction,
    g_functional,
    iid_extension,
    kl_divergence,
    mixture_extension,
    recursive_tilt,
    uniform,
)
from .multicode import MultiCodeResult, best_multi_b, joint_miss_probability, k_index
from .oracles import (
    ProbeReport,
    b_subadditivity_probe,
    enumerate_a_codes,
    enumerate_b_tuples,
    sample_variational_identity,
)

__version__ = "0.1.0"
