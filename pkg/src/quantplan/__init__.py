"""Layer-wise mixed-precision quantization planning toolkit.

Pipeline: similarity traces score each sublayer's contribution; candidate
distributions of layers over quantization types are ranked by TOPSIS under
user metric priorities; the winning distribution is mapped onto the ranked
layers and emitted as a deployment manifest. Solution sets are compared to
uniform baselines via Pareto dominance and hypervolume.
"""

from .allocation import (
    Allocation,
    allocate,
    average_effective_bits,
    build_manifest,
    emit_manifest,
    manifest_type_counts,
    parse_manifest,
)
from .compositions import (
    Composition,
    EstimatedQoS,
    count_compositions,
    enumerate_compositions,
    estimate_qos,
    unrank_composition,
)
from .contribution import (
    ContributionScore,
    ScoreConfig,
    rank_layers,
    score_layers,
    write_scores_csv,
)
from .errors import TraceParseError, ValidationError
from .pareto import (
    HVResult,
    SolutionPoint,
    dominates,
    hv_gain,
    hypervolume,
    hypervolume_monte_carlo,
    pareto_filter,
    reference_from_baseline,
)
from .registry import (
    MetricSpec,
    QuantType,
    Registry,
    UniformQoSMatrix,
    WeightVector,
    load_qos_matrix,
    load_registry,
    save_qos_matrix,
    save_registry,
)
from .topsis import (
    ColumnStats,
    IdealPair,
    RankedCandidate,
    SelectionResult,
    collect_column_stats,
    normalize,
    rank_all,
    ranking_score,
    run_selection,
    select_best,
    select_best_given_stats,
)
from .trace import (
    BoundaryState,
    SimilarityObservation,
    TraceFile,
    boundary_similarities,
    cosine_similarity,
    parse_trace,
    write_trace,
)
from .weight_suite import (
    WeightCategory,
    distance_to_best_report,
    generate_weight_suite,
)

__version__ = "0.1.0"
