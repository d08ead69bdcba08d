"""Bayesian count stratification: optimal bins over heavy-tailed count data,
balanced minibatch plans, a bin-aware loss, and per-bin error reporting."""

from .counts import CountHistogram, CountRecord, build_histogram, ingest_counts, smooth
from .errors import ParseError, RangeError, StratError, ValidationError
from .evaluate import (
    BinStats,
    EvalReport,
    PredictionRecord,
    evaluate,
    global_stats,
    parse_predictions,
    per_bin_stats,
    pool,
    render_report,
)
from .loss import (
    LossConfig,
    bin_loss,
    bin_loss_subgradient,
    combined_loss,
    routed_bin_loss,
    routed_bin_loss_subgradient,
)
from .sampling import (
    BatchPlan,
    BinAssignment,
    SamplingScheme,
    assign_bins,
    plan_epoch,
    plan_epoch_rr,
    plan_epoch_rs,
)
from .stratify import (
    Bin,
    BinningConfig,
    LikelihoodKind,
    Partition,
    PriorConfig,
    bin_log_likelihood,
    brute_force_partition,
    fit_partition,
    locate_bin,
    optimal_partition,
    partition_from_json_dict,
    partition_log_score,
    partition_to_json_dict,
    prior_log_prob,
)
from .synth import (
    ComparisonReport,
    SynthSpec,
    ToyFit,
    TrainerConfig,
    fit_toy_regressor,
    generate_dataset,
    run_comparison,
)
from .tuning import (
    GammaSelection,
    GridSpec,
    held_out_log_likelihood,
    optimal_bins,
    select_gamma,
    split_records,
)

__all__ = [
    "BatchPlan",
    "Bin",
    "BinAssignment",
    "BinStats",
    "BinningConfig",
    "ComparisonReport",
    "CountHistogram",
    "CountRecord",
    "EvalReport",
    "GammaSelection",
    "GridSpec",
    "LikelihoodKind",
    "LossConfig",
    "ParseError",
    "Partition",
    "PredictionRecord",
    "PriorConfig",
    "RangeError",
    "SamplingScheme",
    "StratError",
    "SynthSpec",
    "ToyFit",
    "TrainerConfig",
    "ValidationError",
    "assign_bins",
    "bin_log_likelihood",
    "bin_loss",
    "bin_loss_subgradient",
    "brute_force_partition",
    "build_histogram",
    "combined_loss",
    "evaluate",
    "fit_partition",
    "fit_toy_regressor",
    "generate_dataset",
    "global_stats",
    "held_out_log_likelihood",
    "ingest_counts",
    "locate_bin",
    "optimal_bins",
    "optimal_partition",
    "parse_predictions",
    "partition_from_json_dict",
    "partition_log_score",
    "partition_to_json_dict",
    "per_bin_stats",
    "plan_epoch",
    "plan_epoch_rr",
    "plan_epoch_rs",
    "pool",
    "prior_log_prob",
    "render_report",
    "routed_bin_loss",
    "routed_bin_loss_subgradient",
    "run_comparison",
    "select_gamma",
    "smooth",
    "split_records",
]
