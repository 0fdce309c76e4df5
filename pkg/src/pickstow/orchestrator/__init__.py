"""Work orders, the pick/stow state machines, scoring and metrics."""
from .config import ForestSettings, RunConfig
from .report import CSV_COLUMNS, STAGES, RunReport, ScoreTable, TaskAttempt, emit_metrics, score_run
from .runner import PerceptionModels, choose_destination, run_pick_task, run_stow_task
from .scenes import TOTE, generate_scene_library, load_scene_library, save_scene_library
from .suction import OUTCOMES, SuctionThresholds, simulate_suction
from .workorder import PickTarget, WorkOrder, load_work_order, parse_work_order

__all__ = [
    "CSV_COLUMNS", "OUTCOMES", "STAGES", "TOTE", "ForestSettings", "PerceptionModels",
    "PickTarget", "RunConfig", "RunReport", "ScoreTable", "SuctionThresholds", "TaskAttempt",
    "WorkOrder", "choose_destination", "emit_metrics", "generate_scene_library",
    "load_scene_library", "load_work_order", "parse_work_order", "run_pick_task",
    "run_stow_task", "save_scene_library", "score_run", "simulate_suction",
]
