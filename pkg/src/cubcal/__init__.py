"""Confidence-uncertainty boundary calibration toolkit."""

from .boundary import (
    BoundaryConfig,
    BoundarySample,
    boundary_curve,
    confidence,
    entropy,
    feasible_span,
    invert_u_max,
    softmax,
    u_ideal,
    u_max,
    u_min,
)
from .bnn import (
    MCPredictive,
    TrainConfig,
    TrainingDivergence,
    VariationalLayer,
    VariationalMLP,
    build_model,
    elbo_loss,
    load_checkpoint,
    moped_init,
    predict,
    predict_records,
    save_checkpoint,
    train,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .data import BlobSpec, SplitSpec, generate, imbalanced_preset, make_ood, split
from .dts import (
    DtsThresholds,
    TemperaturePair,
    apply_dts,
    assign_region,
    calibrate_dataset,
    fit_temperatures,
)
from .experiments import (
    DEFAULT_BOUNDARY,
    calibrate_run,
    default_corpus,
    ood_benchmark_config,
    overconfident_benchmark,
    run_training,
    standard_benchmark,
    standard_benchmark_config,
    standard_benchmark_corpus,
)
from .loss import (
    DeviationRecord,
    LossWeights,
    QuadrantLabel,
    avuc_loss,
    boundary_deviation,
    classify_quadrant,
    cub_loss,
    cub_loss_gradient,
    normalize_deviation,
    total_loss,
)
from .metrics import (
    AvUCounts,
    BinnedDiagnostics,
    CalibrationReport,
    accuracy,
    aupr,
    auroc,
    avu,
    avu_counts,
    balanced_accuracy,
    bcce,
    calibration_report,
    delta_u,
    ece,
)
from .records import DumpFormatError, PredictionRecord, read_logit_dump, write_logit_dump

__version__ = "0.1.0"
