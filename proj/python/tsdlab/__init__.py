"""Spectral weight analysis and dash-style low-rank adaptation on planted tasks.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._tsdlab import (
    AdapterState,
    ChangeRates,
    SvdFactors,
    Task,
    TrainTrace,
    TsdGroundTruth,
    TsdlabError,
    alignment,
    amplification,
    change_rates,
    effective_delta,
    enter_dash_phase,
    frob_norm,
    gen_task,
    ground_truth_tsd,
    load_adapter,
    load_matrix,
    make_dash_state,
    make_init_state,
    make_lora_state,
    make_tsd_state,
    merged_weight,
    pr_score,
    project_global,
    run_experiment,
    save_adapter,
    save_matrix,
    scaled_rate,
    svd,
    task_overlap,
    top_k,
    train,
    train_full,
    tsd_init_split,
)

__all__ = [
    "AdapterState",
    "ChangeRates",
    "SvdFactors",
    "Task",
    "TrainTrace",
    "TsdGroundTruth",
    "TsdlabError",
    "alignment",
    "amplification",
    "change_rates",
    "effective_delta",
    "enter_dash_phase",
    "frob_norm",
    "gen_task",
    "ground_truth_tsd",
    "load_adapter",
    "load_matrix",
    "make_dash_state",
    "make_init_state",
    "make_lora_state",
    "make_tsd_state",
    "merged_weight",
    "pr_score",
    "project_global",
    "run_experiment",
    "save_adapter",
    "save_matrix",
    "scaled_rate",
    "svd",
    "task_overlap",
    "top_k",
    "train",
    "train_full",
    "tsd_init_split",
]
