"""Selective kernel hypothesis tests for feature selection.

Selects the top-k features by per-feature MMD or HSIC scores, then reports
post-selection p-values: either minimally conditioned via parametric
multiscale bootstrap (MultiMMD / MultiHSIC) or conditioned on the whole
selected set via the polyhedral truncated-normal baseline (PolyMMD /
PolyHSIC).
"""
from .config import RunConfig
from .core import (
    DataFormatError,
    DataShapeError,
    DegenerateFeatureError,
    DegenerateSampleError,
    Design,
    InsufficientScalesError,
    MultiStat,
    derive_rng,
    derive_seed,
)
from .designs import (
    block_design,
    complete_pair_design,
    complete_quad_design,
    sample_pair_design,
    sample_quad_design,
)
from .hsic import (
    JointSample,
    hsic_block,
    hsic_h,
    hsic_incomplete,
    hsic_multistat_block,
    hsic_multistat_incomplete,
    hsic_u,
)
from .kernels import (
    KernelSpec,
    gram_matrix,
    kernel_eval,
    median_heuristic,
    univariate_gaussian_specs,
)
from .mmd import mmd_h, mmd_incomplete, mmd_linear, mmd_multistat, mmd_u
from .multiscale import (
    RegionIndicator,
    ScaleSet,
    ScalesDroppedWarning,
    ScalingFit,
    bootstrap_probability,
    default_scales,
    fit_region_scaling,
    fit_scaling_law,
    flat_hypothesis_distance,
    half_space,
    psi_transform,
    psi_variance,
    selective_p,
    selective_p_detail,
)
from .selective import (
    SelectionResult,
    SelectiveReport,
    hsic_stat,
    mmd_stat,
    multi_hsic,
    multi_mmd,
    poly_hsic,
    poly_mmd,
    poly_p,
    poly_truncation_interval,
    report_for_method,
    select_top_k,
    selection_indicator,
)
from .simulation import (
    ProblemSpec,
    TrialSummary,
    augment_fake_features,
    benchmark_trials,
    gen_logistic,
    gen_mean_shift,
    run_trials,
    tpr_fpr,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "DataFormatError",
    "DataShapeError",
    "DegenerateFeatureError",
    "DegenerateSampleError",
    "Design",
    "InsufficientScalesError",
    "MultiStat",
    "derive_rng",
    "derive_seed",
    "block_design",
    "complete_pair_design",
    "complete_quad_design",
    "sample_pair_design",
    "sample_quad_design",
    "JointSample",
    "hsic_block",
    "hsic_h",
    "hsic_incomplete",
    "hsic_multistat_block",
    "hsic_multistat_incomplete",
    "hsic_u",
    "KernelSpec",
    "gram_matrix",
    "kernel_eval",
    "median_heuristic",
    "univariate_gaussian_specs",
    "mmd_h",
    "mmd_incomplete",
    "mmd_linear",
    "mmd_multistat",
    "mmd_u",
    "RegionIndicator",
    "ScaleSet",
    "ScalesDroppedWarning",
    "ScalingFit",
    "bootstrap_probability",
    "default_scales",
    "fit_region_scaling",
    "fit_scaling_law",
    "flat_hypothesis_distance",
    "half_space",
    "psi_transform",
    "psi_variance",
    "selective_p",
    "selective_p_detail",
    "SelectionResult",
    "SelectiveReport",
    "hsic_stat",
    "mmd_stat",
    "multi_hsic",
    "multi_mmd",
    "poly_hsic",
    "poly_mmd",
    "poly_p",
    "poly_truncation_interval",
    "report_for_method",
    "select_top_k",
    "selection_indicator",
    "ProblemSpec",
    "TrialSummary",
    "augment_fake_features",
    "benchmark_trials",
    "gen_logistic",
    "gen_mean_shift",
    "run_trials",
    "tpr_fpr",
]
