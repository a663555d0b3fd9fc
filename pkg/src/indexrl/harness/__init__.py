from .config import AGENTS, ConfigError, RunConfig, config_from_dict, load_config
from .loop import Env, EvalResult, TrainResult, evaluate, make_policy, make_workloads, run_episodes, train
from .report import aggregate, load_checkpoint, read_steps_csv, report, summary_from_files, write_run
from .search import SearchResult, adaptive_search, build_problem, search_baseline
from .stats import (
    EvalSummary,
    StepRecord,
    intersection_stats,
    learning_curves,
    nearest_rank,
    selectivity_ratio,
    summarize,
)

__all__ = [
    "AGENTS",
    "ConfigError",
    "Env",
    "EvalResult",
    "EvalSummary",
    "RunConfig",
    "SearchResult",
    "StepRecord",
    "TrainResult",
    "adaptive_search",
    "aggregate",
    "build_problem",
    "config_from_dict",
    "evaluate",
    "intersection_stats",
    "learning_curves",
    "load_checkpoint",
    "load_config",
    "make_policy",
    "make_workloads",
    "nearest_rank",
    "read_steps_csv",
    "report",
    "run_episodes",
    "search_baseline",
    "selectivity_ratio",
    "summarize",
    "summary_from_files",
    "train",
    "write_run",
]
