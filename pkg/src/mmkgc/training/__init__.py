"""Training, filtered evaluation, interpretability reports and robustness sweeps."""

from .evaluation import Metrics, evaluate_split, rank_from_scores, rank_query, split_ranks, write_metrics
from .reports import (
    GateReportRow,
    RelationReportRow,
    gate_report,
    per_relation_report,
    write_gate_report,
    write_relation_report,
)
from .robustness import SweepResult, apply_config_corruption, apply_corruption, robustness_sweep
from .trainer import EpochRecord, Trainer, TrainResult, train_run

__all__ = [
    "EpochRecord",
    "GateReportRow",
    "Metrics",
    "RelationReportRow",
    "SweepResult",
    "TrainResult",
    "Trainer",
    "apply_config_corruption",
    "apply_corruption",
    "evaluate_split",
    "gate_report",
    "per_relation_report",
    "rank_from_scores",
    "rank_query",
    "robustness_sweep",
    "split_ranks",
    "train_run",
    "write_gate_report",
    "write_metrics",
    "write_relation_report",
]
