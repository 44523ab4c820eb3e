"""Max-LPA: synchronous max-tie-breaking label propagation and experiments."""

from .analysis import (
    MaximaReport,
    RecoveryVerdict,
    compare_partition,
    khop_maxima,
    lemma_bounds_check,
    path_maxima_statistics,
    theorem2_conditions,
)
from .engine import (
    LabelState,
    RunResult,
    extract_communities,
    init_labels,
    labels_from_values,
    run,
    step,
)
from .graph import (
    Graph,
    GraphFormatError,
    InvalidParameterError,
    PlantedModel,
    Seed,
    connected_components,
    gen_clustered_er,
    gen_er,
    gen_path,
    read_graph,
    write_graph,
)

__version__ = "0.1.0"
