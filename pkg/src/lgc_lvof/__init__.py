"""Leave-one-out noisy label filtering for Local and Global Consistency label propagation."""
from .dataset import (
    Dataset,
    LabelAssignment,
    NoiseRecord,
    corrupt_labels,
    generate_gaussian_blobs,
    load_dense_csv,
    load_idx,
    sample_labels,
)
from .graph import (
    SparseSymmetricGraph,
    build_symmetric_knn_rbf,
    degree,
    knn_indices,
    s_matrix,
    sigma_heuristic,
    smoothness,
)
from .lgc import (
    LgcParams,
    PropagationSubmatrix,
    alpha_from_mu,
    full_propagation,
    lgc_closed,
    lgc_iterate,
    propagation_submatrix,
)
from .lvo_filter import FilterResult, StoppingRule, run_filter
from .ldst import run_ldst_filter

__version__ = "0.1.0"
