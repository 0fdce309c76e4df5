"""Attempt records, scoring and the per-stage timing report."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from .suction import DROPPED, OUTCOMES, SUCCEEDED, WRONG_ITEM

STAGES = (
    "json_read",
    "motion1_home_to_binview",
    "object_recognition",
    "motion2_pregrasp",
    "motion3_postgrasp",
    "motion4_tote_to_home",
)
CSV_COLUMNS = ("attempt", "item", "source", "destination", "outcome", *STAGES, "loop_total")


@dataclass(frozen=True, eq=False)
class TaskAttempt:
    item: str
    source: str                    # bin name, or "tote"
    destination: str               # "tote", or a bin name
    outcome: str
    stage_timings: dict[str, float] = field(default_factory=dict)
    suction_point: object | None = None   # SuctionTarget
    grasp_q: np.ndarray | None = None     # last pre-grasp waypoint
    plans: tuple = ()
    detail: str = ""

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def target(self) -> dict:
        return {"item": self.item, "source": self.source, "destination": self.destination}

    @property
    def loop_total(self) -> float:
        return float(sum(self.stage_timings.get(s, 0.0) for s in STAGES))

    def key(self) -> tuple:
        """Comparable summary that excludes wall-clock timings."""
        return (self.item, self.source, self.destination, self.outcome)


@dataclass(frozen=True)
class ScoreTable:
    """Per-item rewards plus outcome penalties. Defaults are placeholders."""

    rewards: dict[str, float] = field(default_factory=dict)
    default_reward: float | None = 10.0
    penalties: dict[str, float] = field(
        default_factory=lambda: {WRONG_ITEM: -5.0, DROPPED: -5.0})

    def reward(self, item: str) -> float:
        if item in self.rewards:
            return float(self.rewards[item])
        if self.default_reward is None:
            raise ConfigError(f"score table has no reward for {item!r}")
        return float(self.default_reward)

    def score(self, attempt: TaskAttempt) -> float:
        if attempt.outcome == SUCCEEDED:
            return self.reward(attempt.item)
        return float(self.penalties.get(attempt.outcome, 0.0))

    @classmethod
    def from_dict(cls, doc: dict) -> "ScoreTable":
        kw = {}
        if "rewards" in doc:
            kw["rewards"] = dict(doc["rewards"])
        if "default_reward" in doc:
            kw["default_reward"] = doc["default_reward"]
        if "penalties" in doc:
            kw["penalties"] = dict(doc["penalties"])
        return cls(**kw)


def score_run(attempts: Sequence[TaskAttempt], table: ScoreTable = ScoreTable()) -> float:
    return float(sum(table.score(a) for a in attempts))


@dataclass(frozen=True, eq=False)
class RunReport:
    attempts: tuple[TaskAttempt, ...]
    total_score: float
    items_per_minute: float
    loop_time_mean: float

    @classmethod
    def from_attempts(cls, attempts: Sequence[TaskAttempt],
                      table: ScoreTable = ScoreTable()) -> "RunReport":
        attempts = tuple(attempts)
        total_time = sum(a.loop_total for a in attempts)
        done = sum(a.outcome == SUCCEEDED for a in attempts)
        ipm = 60.0 * done / total_time if total_time > 0 else 0.0
        mean = total_time / len(attempts) if attempts else 0.0
        return cls(attempts, score_run(attempts, table), ipm, mean)

    def outcomes(self) -> list[str]:
        return [a.outcome for a in self.attempts]

    def summary(self) -> dict:
        counts = {o: sum(a.outcome == o for a in self.attempts) for o in OUTCOMES}
        stage_means = {
            s: (float(np.mean([a.stage_timings.get(s, 0.0) for a in self.attempts]))
                if self.attempts else 0.0)
            for s in STAGES
        }
        return {"attempts": len(self.attempts), "outcomes": counts,
                "total_score": self.total_score, "items_per_minute": self.items_per_minute,
                "loop_time_mean_s": self.loop_time_mean, "stage_means_s": stage_means}


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def emit_metrics(report: RunReport, out_dir) -> tuple[Path, Path]:
    """Write metrics.csv (one row per attempt plus a mean row) and summary.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "metrics.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i, a in enumerate(report.attempts):
                stages = [a.stage_timings.get(s, 0.0) for s in STAGES]
                w.writerow([i, a.item, a.source, a.destination, a.outcome,
                            *map(_fmt, stages), _fmt(sum(stages))])
            n = max(len(report.attempts), 1)
            means = [sum(a.stage_timings.get(s, 0.0) for a in report.attempts) / n for s in STAGES]
            w.writerow(["summary", "", "", "", "", *map(_fmt, means), _fmt(sum(means))])
        json_path = out / "summary.json"
        json_path.write_text(json.dumps(report.summary(), indent=2))
    except OSError as exc:
        raise OSError(f"cannot write metrics to {out}: {exc}") from exc
    return csv_path, json_path
