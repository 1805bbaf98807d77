"""Dual-softmax and Sinkhorn postprocessing for retrieval similarity matrices."""

from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    GroundTruthError,
    InputError,
    NonFiniteError,
    SinkrankError,
)
from .matrix import SimilarityMatrix, log_sum_exp, softmax_axis
from .metrics import GroundTruth, MetricsReport, compute_metrics, paired_significance, rank_of_best_relevant
from .protocols import (
    PseudoTestConfig,
    build_pseudo_test,
    evaluate_full,
    single_query_eval,
    transpose_direction,
)
from .synth import SynthConfig, generate
from .transforms import Method, TransformConfig, apply_transform, dual_softmax, sinkhorn, sinkhorn_step

__version__ = "0.1.0"
