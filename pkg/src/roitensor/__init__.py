"""roitensor: sparse low-rank tensor regression for multi-modality ROI data.

Builds per-subject tensor representations from ROI x modality features
(raw concatenation or Gaussian kNN connectivity graphs), fits a sequential
sparse unit-rank tensor regression to clinical responses, and benchmarks
it against Lasso, Elastic Net, Group Lasso, and PCA + linear regression
under a trials / cross-validation protocol with RMSE, sparsity, ROI
ranking, and modality contribution reporting.
"""

__version__ = "0.1.0"

from .baselines import (
    GroupSpec,
    LinearModel,
    enet_fit,
    glasso_fit,
    lasso_fit,
    pca_lr_fit,
    vectorize,
)
from .data_io import (
    Cohort,
    Dataset,
    SchemaError,
    SynthConfig,
    SyntheticData,
    aal116_labels,
    generate_graph_synthetic,
    generate_synthetic,
    load_cohort,
    normalize_scores,
    write_cohort,
)
from .graphs import (
    MODALITIES,
    N_ROI,
    GraphConfig,
    build_concat,
    build_connectivity,
    build_connectivity_stack,
    build_representation,
    gaussian_similarity,
    knn_gaussian_graph,
)
from .protocol import (
    EvalReport,
    ProtocolConfig,
    cross_validate,
    rmse,
    roi_ranking,
    run_benchmark,
    split,
    sweep_k,
    sweep_rank,
)
from .regression import (
    FitConfig,
    RegressionModel,
    coefficient_tensor,
    fit,
    fit_unit_rank,
    model_from_json,
    model_sparsity,
    model_to_json,
    modality_contribution,
    predict,
    predict_batch,
)
from .tensors import (
    DenseTensor,
    UnitRankTensor,
    as_dense,
    contract_except,
    inner_product,
    inner_product_dense,
    l1_norm,
    materialize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
