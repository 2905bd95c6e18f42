"""Reference-invariant sparse network estimation from compositional counts.

The estimation target is the precision (inverse covariance) structure of
log-ratio transformed abundances, restricted to the block of coordinates
whose meaning does not depend on which candidate taxon serves as the
log-ratio reference. Two estimators are provided: a masked-penalty
graphical lasso on plug-in log-ratios, and a latent-variable fit that
models the counts directly. Simulation, evaluation, stability selection,
and file-format helpers round out the toolkit; the `invglasso` console
script exposes the common workflows.
"""

from .errors import (
    DomainError,
    EmptyDataError,
    InvglassoError,
    LayoutError,
    NumericalError,
    ParseError,
    SchemaError,
)
from .transforms import (
    AlrDataset,
    GaussianParams,
    ReferenceChangeOperator,
    alr,
    canonical_layout,
    reference_change_operator,
    reference_swap_discrepancy,
    softmax_inverse,
    transform_gaussian,
    validate_composition,
)
from .glasso import (
    PenaltySpec,
    PrecisionEstimate,
    RegularizationPath,
    SolverConfig,
    empirical_cov,
    glasso_masked,
    inv_glasso_path,
    kkt_residual,
    lambda_grid,
    penalized_nll,
)
from .compglasso import (
    CountMatrix,
    FitConfig,
    FitDiagnostics,
    LatentState,
    NewtonConfig,
    alr_estimate,
    fit,
    fit_path,
    objective,
    sample_gradient,
    sample_hessian,
    sample_objective,
    update_mu,
    update_omega,
    update_z,
)
from .simulate import (
    GroundTruth,
    NetworkSpec,
    ScenarioSpec,
    gen_chain,
    gen_hub,
    gen_random,
    network_precision,
    simulate_dataset,
)
from .evaluate import (
    EdgeSet,
    adjacency_matrix,
    aggregate_records,
    auc_trapezoid,
    average_roc,
    edges_from_precision,
    hamming,
    jaccard,
    nms,
    roc_point,
    roc_points,
    similarity_records,
)
from .selection import (
    StarsConfig,
    StarsResult,
    default_subsample_size,
    stars_select,
    subsample_indices,
)
from .ingest import (
    CandidateRanking,
    OtuTable,
    RunManifest,
    filter_low_depth,
    rank_candidate_references,
    read_edge_set,
    read_manifest,
    read_matrix,
    read_metrics_csv,
    read_table,
    sha256_of_file,
    write_edge_set,
    write_manifest,
    write_matrix,
    write_metrics_csv,
    write_table,
)

__version__ = "0.1.0"

__all__ = [
    "AlrDataset",
    "CandidateRanking",
    "CountMatrix",
    "DomainError",
    "EdgeSet",
    "EmptyDataError",
    "FitConfig",
    "FitDiagnostics",
    "GaussianParams",
    "GroundTruth",
    "InvglassoError",
    "LatentState",
    "LayoutError",
    "NetworkSpec",
    "NewtonConfig",
    "NumericalError",
    "OtuTable",
    "ParseError",
    "PenaltySpec",
    "PrecisionEstimate",
    "ReferenceChangeOperator",
    "RegularizationPath",
    "RunManifest",
    "ScenarioSpec",
    "SchemaError",
    "SolverConfig",
    "StarsConfig",
    "StarsResult",
    "adjacency_matrix",
    "aggregate_records",
    "alr",
    "alr_estimate",
    "auc_trapezoid",
    "average_roc",
    "canonical_layout",
    "default_subsample_size",
    "edges_from_precision",
    "empirical_cov",
    "fit",
    "fit_path",
    "filter_low_depth",
    "gen_chain",
    "gen_hub",
    "gen_random",
    "glasso_masked",
    "hamming",
    "inv_glasso_path",
    "jaccard",
    "kkt_residual",
    "lambda_grid",
    "network_precision",
    "nms",
    "objective",
    "penalized_nll",
    "rank_candidate_references",
    "read_edge_set",
    "read_manifest",
    "read_matrix",
    "read_metrics_csv",
    "read_table",
    "reference_change_operator",
    "reference_swap_discrepancy",
    "roc_point",
    "roc_points",
    "sample_gradient",
    "sample_hessian",
    "sample_objective",
    "sha256_of_file",
    "similarity_records",
    "simulate_dataset",
    "softmax_inverse",
    "stars_select",
    "subsample_indices",
    "transform_gaussian",
    "update_mu",
    "update_omega",
    "update_z",
    "validate_composition",
    "write_edge_set",
    "write_manifest",
    "write_matrix",
    "write_metrics_csv",
    "write_table",
]
