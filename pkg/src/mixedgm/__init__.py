"""Mixed binary/continuous graphical models: simulation, node-wise
penalized estimation, and recovery evaluation."""

__version__ = "0.1.0"

from .errors import (
    BudgetExhaustedError,
    ComputationError,
    DegenerateColumnError,
    DegenerateFitError,
    DimensionError,
    EnumerationCapError,
    InfeasibleSpecError,
    MixedGMError,
    NotPositiveDefiniteError,
    SchemaError,
    SolverError,
    ValidationError,
)
from .model import (
    CGParams,
    CanonicalTriple,
    CellMoments,
    EdgeGroup,
    MarkovGraph,
    MixedDims,
    canonical_at,
    cell_log_probs,
    cells,
    check_positive_definite,
    coord_value,
    edge_group,
    edge_groups,
    graph_from_json,
    graph_of,
    graph_to_dot,
    graph_to_json,
    log_density,
    moments_at,
    node_name,
    normalize,
    params_from_json,
    params_to_json,
)
from .data import (
    ColumnSchema,
    ColumnSpec,
    MixedDataset,
    default_schema,
    drop_rare_binary,
    ingest,
    read_csv,
    read_schema,
    standardize_continuous,
    write_csv,
    write_schema,
)
from .simulate import (
    GraphSpec,
    ParamGenSpec,
    complete_block_graph,
    gen_graph,
    gen_params,
    sample,
)
from .solver import (
    FitResult,
    PenalizedProblem,
    default_rho_grid,
    fit_path,
    fit_weighted_l1,
    kkt_residual,
    loss_gradient,
    loss_value,
    objective_value,
    penalty_value,
    reference_prox,
    rho_max,
)
from .neighborhood import (
    Feature,
    GraphEstimate,
    NodeRegressionSpec,
    TildeParams,
    build_categorical,
    build_linear,
    build_logistic,
    categorical_edges,
    coord_edges,
    estimate_from_json,
    extract_tilde,
    fit_all,
    recover_scale,
)
from .evaluate import (
    RocRow,
    RocTable,
    StabilityResult,
    auc,
    average_roc,
    read_roc_csv,
    roc,
    stability_select,
    write_roc_csv,
)
