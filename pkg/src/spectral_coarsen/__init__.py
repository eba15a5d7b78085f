"""Randomized edge contraction for graph coarsening and the spectral quantities it preserves."""
from .analysis import (
    AnalysisError,
    RssReport,
    alignment,
    canonical_angles,
    chance_sintheta,
    eigenvalue_upper_bound,
    interlacing_check,
    lambda_threshold,
    rss_measure,
    sintheta,
    sintheta_bounds,
    sintheta_canonical,
    sintheta_report,
    verify_matching_identities,
)
from .bounds import (
    HypothesisError,
    bound_constants,
    clustering_bound,
    fiedler_value_bound,
    heavy_edge_probability,
    regular_graph_probability,
    rss_epsilon_bound,
    rss_success_probability,
)
from .cluster import coarse_cluster_pipeline, kmeans, kmeans_cost, lift_alignment_error, refine, spectral_embed
from .coarsen import (
    CoarseningError,
    CoarseningMap,
    coarsen_laplacian,
    coarsening_frame,
    coarsening_matrix,
    downsample,
    lift,
    map_from_matching,
    project,
    projection_matrix,
    renormalized_laplacian,
)
from .config import DEFAULT_TOLERANCES, Tolerances, make_rng
from .eigen import EigenBasis, EigenError, sym_eig
from .graph import (
    SBM,
    EdgeListError,
    ErdosRenyi,
    Graph,
    GraphError,
    KnnCloud,
    Regular,
    SwissRoll,
    build_laplacian,
    generate,
    generate_sbm,
    knn_graph,
    read_edgelist,
    weighted_degrees,
    write_edgelist,
)
from .rec import (
    InfeasibleRatio,
    Potential,
    RecResult,
    edge_inclusion_probability,
    edge_neighborhood,
    iterations_for_ratio,
    rec_coarsen,
    rec_coarsen_fast,
)

__version__ = "0.1.0"
