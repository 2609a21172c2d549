"""Multivariate feature selection through cross-covariance matrices.

The package simulates block-structured Gaussian models in which only
p_t of p features are correlated with the response vector, scores
features by thresholding (row infinity-norm of the sample
cross-covariance) or by the first left singular vector, and studies the
probability that the top-ranked feature is truly correlated:

* exact finite-sample Monte Carlo under the Wishart model, a fast
  data-simulation equivalent, and the entrywise Gaussian limit;
* a closed-form limiting risk for thresholding via noncentral
  chi-squared integrals;
* a stochastic grid search bounding the worst-case gap between the
  exact and limiting selection probabilities;
* permutation-null p-values and q-values for real paired data.

Hot Monte Carlo loops are compiled with numba when available; set
XCOVSEL_BACKEND=numpy to force the pure-numpy fallback (both backends
draw identical random streams).
"""

__version__ = "0.1.0"

from . import kernels
from .fdr import (
    DataMatrix,
    FeatureInference,
    ascending_rank,
    cross_correlation,
    cross_covariance,
    harmonic_correction,
    pvalues,
    qvalues,
    rank_features,
)
from .data import (
    DataFormatError,
    counts_to_log_proportions,
    ingest_csv,
    standardize_rows_columns,
    write_csv,
)
from .model import (
    CovarianceModel,
    ModelParams,
    ScaledOmegaModel,
    SignalBlock,
    assemble_sigma,
    random_orthogonal,
    random_signal_block,
    sample_cross_cov_asymptotic,
    sample_cross_cov_data,
    sample_cross_cov_wishart,
    scaled_sigma_n,
)
from .optimizer import (
    Candidate,
    DiscrepancyObjective,
    SearchConfig,
    SearchResult,
    default_search_config,
    evaluate_objective_batch,
    perturb,
    run_search,
)
from .risk import (
    QuadratureError,
    RiskEstimate,
    SweepTable,
    asymptotic_thresholding_risk,
    estimate_selection_probability,
    noncentral_chisq1_cdf,
    normalize_method,
    normalize_sampler,
    sweep_risk_surface,
)
from .selectors import (
    DegenerateMatrixError,
    first_left_singular_vector,
    ranking_from_scores,
    score_svd,
    score_thresholding,
    zero_one_loss,
)

__all__ = [
    "__version__",
    "kernels",
    # model
    "ModelParams",
    "SignalBlock",
    "CovarianceModel",
    "ScaledOmegaModel",
    "random_orthogonal",
    "random_signal_block",
    "assemble_sigma",
    "scaled_sigma_n",
    "sample_cross_cov_wishart",
    "sample_cross_cov_data",
    "sample_cross_cov_asymptotic",
    # selectors
    "score_thresholding",
    "score_svd",
    "first_left_singular_vector",
    "ranking_from_scores",
    "zero_one_loss",
    "DegenerateMatrixError",
    # risk
    "RiskEstimate",
    "SweepTable",
    "estimate_selection_probability",
    "sweep_risk_surface",
    "noncentral_chisq1_cdf",
    "normalize_method",
    "normalize_sampler",
    "asymptotic_thresholding_risk",
    "QuadratureError",
    # optimizer
    "Candidate",
    "SearchConfig",
    "SearchResult",
    "DiscrepancyObjective",
    "default_search_config",
    "evaluate_objective_batch",
    "perturb",
    "run_search",
    # fdr
    "DataMatrix",
    "FeatureInference",
    "cross_covariance",
    "cross_correlation",
    "pvalues",
    "qvalues",
    "harmonic_correction",
    "ascending_rank",
    "rank_features",
    # data
    "DataFormatError",
    "ingest_csv",
    "write_csv",
    "standardize_rows_columns",
    "counts_to_log_proportions",
]
