"""Mixture models over fixed basis-function expansions.

Each of k latent components gives every item a density that is a convex
combination of fixed, parameter-free basis functions; only the mixing
weights are unknown.  The package precomputes the basis values once per
dataset, fits mixing weights for a fixed k by expectation-maximization,
samples the posterior over (k, clustering) with a collapsed Gibbs chain,
and verifies the sampler against exact brute-force enumeration at tiny
scale.
"""

from ._errors import ConfigError, DataError, GuardError
from .basis import (
    BasisSpec,
    PhiTensor,
    bernstein_eval,
    gamma_eval,
    gaussian_eval,
    parse_basis_spec,
    precompute_phi,
    tophat_eval,
    trig_eval,
)
from .data import (
    Dataset,
    TransformSpec,
    apply_transforms,
    cdf_transform,
    likert_map,
    linear_rescale,
    load_csv,
    parse_transform_spec,
    rescale_mean_half,
)
from .em import (
    EmFit,
    EmParams,
    Responsibilities,
    e_step,
    fit_em,
    hard_assign,
    log_marginal_posterior_em,
    m_step,
)
from .sampler import (
    GibbsState,
    KPrior,
    Move,
    SampleSet,
    apply_move,
    candidate_weights,
    gibbs_step,
    initial_state,
    iter_jsonl_samples,
    log_joint,
    partition_log_joint,
    run_reference_chain,
    run_sampler,
    slot_probs,
    transition_log_prob,
)
from .analysis import (
    ConsensusMatrix,
    DensityCurve,
    MIRanking,
    best_label_mapping,
    consensus_matrix,
    consensus_select,
    density_curve,
    k_histogram,
    map_k,
    mutual_information,
    mutual_information_all,
    permuted_accuracy,
    theta_map_from_g,
    theta_map_from_gh,
)
from .oracle import (
    ExactPosterior,
    enumerate_partitions,
    exact_posterior,
    exact_posterior_labeled,
    grid_simplex_optimum,
)
from .synth import SynthSpec, generate, small_spec, synth1_spec, synth2_spec

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "GuardError",
    "BasisSpec",
    "PhiTensor",
    "bernstein_eval",
    "gamma_eval",
    "gaussian_eval",
    "tophat_eval",
    "trig_eval",
    "parse_basis_spec",
    "precompute_phi",
    "Dataset",
    "TransformSpec",
    "load_csv",
    "apply_transforms",
    "parse_transform_spec",
    "cdf_transform",
    "linear_rescale",
    "rescale_mean_half",
    "likert_map",
    "EmParams",
    "Responsibilities",
    "EmFit",
    "e_step",
    "m_step",
    "fit_em",
    "hard_assign",
    "log_marginal_posterior_em",
    "KPrior",
    "GibbsState",
    "Move",
    "SampleSet",
    "log_joint",
    "partition_log_joint",
    "candidate_weights",
    "slot_probs",
    "gibbs_step",
    "apply_move",
    "transition_log_prob",
    "initial_state",
    "run_sampler",
    "run_reference_chain",
    "iter_jsonl_samples",
    "ConsensusMatrix",
    "DensityCurve",
    "MIRanking",
    "k_histogram",
    "map_k",
    "consensus_matrix",
    "consensus_select",
    "theta_map_from_g",
    "theta_map_from_gh",
    "density_curve",
    "mutual_information",
    "mutual_information_all",
    "permuted_accuracy",
    "best_label_mapping",
    "ExactPosterior",
    "enumerate_partitions",
    "exact_posterior",
    "exact_posterior_labeled",
    "grid_simplex_optimum",
    "SynthSpec",
    "generate",
    "synth1_spec",
    "synth2_spec",
    "small_spec",
]
