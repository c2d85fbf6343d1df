"""Structured calibration metrics on graphs with a pairwise-MRF engine.

Computes edgewise, agree, and disagree expected calibration errors alongside
their nodewise counterparts (plus accuracy, NLL, Brier) from predicted
marginal distributions, and produces edge marginals itself via exact
enumeration, naive mean field, or loopy belief propagation.
"""

from .errors import (
    GraphCalibError,
    ParseError,
    UndefinedMetricError,
    ValidationError,
)
from .graph import (
    AGREE,
    ALL_TEST,
    DISAGREE,
    EdgeSubset,
    Graph,
    Labels,
    NodePartition,
    agree_disagree_split,
    build_graph,
    build_labels,
    build_partition,
    homophily_ratio,
    test_edge_subset,
    test_node_coverage,
)
from .marginals import (
    EdgeMarginals,
    NodeMarginals,
    PointPredictions,
    edge_predictions,
    node_predictions,
    product_edge_marginals,
    validate_edge_marginals,
    validate_node_marginals,
)
from .metrics import (
    MetricReport,
    ReliabilityTable,
    accuracy_edgewise,
    accuracy_nodewise,
    agree_ece,
    brier_edgewise,
    brier_nodewise,
    disagree_ece,
    ece,
    edgewise_ece,
    full_report,
    nll_edgewise,
    nll_nodewise,
    nodewise_ece,
)
from .mrf import (
    InferenceResult,
    Observation,
    PairwiseMRF,
    build_mrf,
    clamp,
    exact_infer,
    loopy_bp_infer,
    mean_field_infer,
)
from .synth import (
    FixtureCase,
    MiscalibrationSpec,
    SynthSpec,
    gen_graph,
    gen_predictions,
    reference_fixtures,
)

__version__ = "0.1.0"
