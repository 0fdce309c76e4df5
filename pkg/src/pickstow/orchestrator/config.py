"""Run configuration: one JSON document covering every tunable knob.

Top-level keys (all optional): ``rack``, ``robot``, ``tool_length_m``,
``tote``, ``ik``, ``planner``, ``perception``, ``forest``, ``render``,
``suction``, ``score_table``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..ik import IKSettings
from ..kinematics import RobotModel
from ..perception.pipeline import PerceptionSettings
from ..perception.scene import CameraModel, RenderSettings
from ..planning.workcell import (PlannerSettings, Tote, WorkcellConfig, default_rack_dims,
                                 tool_robot)
from ..rack import RackDims
from .report import ScoreTable
from .suction import SuctionThresholds


@dataclass(frozen=True)
class ForestSettings:
    tree_count: int = 100
    max_depth: int = 30
    max_negatives: int = 2000
    bank_views: int = 2
    bank_pixels_per_view: int = 150
    bank_background: int = 600

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestSettings":
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class RunConfig:
    workcell: WorkcellConfig = field(default_factory=WorkcellConfig)
    perception: PerceptionSettings = PerceptionSettings()
    forest: ForestSettings = ForestSettings()
    render: RenderSettings = RenderSettings()
    suction: SuctionThresholds = SuctionThresholds()
    score_table: ScoreTable = field(default_factory=ScoreTable)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            return cls._from_dict(doc)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def _from_dict(cls, doc: dict) -> "RunConfig":
        known = {"rack", "robot", "tool_length_m", "tote", "ik", "planner", "perception",
                 "forest", "render", "suction", "score_table"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        wc = WorkcellConfig()
        rack = RackDims.from_dict(doc["rack"]) if "rack" in doc else default_rack_dims()
        tool = float(doc.get("tool_length_m", wc.tool_length))
        model = RobotModel.from_dict(doc["robot"]) if "robot" in doc else tool_robot(tool)
        wc = replace(
            wc, rack_dims=rack, model=model, tool_length=tool,
            tote=Tote.from_dict(doc["tote"]) if "tote" in doc else wc.tote,
            ik=IKSettings.from_dict(doc["ik"]) if "ik" in doc else wc.ik,
            planner=PlannerSettings.from_dict(doc["planner"]) if "planner" in doc else wc.planner,
        )
        render = RenderSettings()
        if "render" in doc:
            r = dict(doc["render"])
            cam = CameraModel(**r.pop("camera", {}))
            if "wall_color" in r:
                r["wall_color"] = tuple(r["wall_color"])
            render = RenderSettings(camera=cam, **r)
        return cls(
            workcell=wc,
            perception=PerceptionSettings.from_dict(doc.get("perception", {})),
            forest=ForestSettings.from_dict(doc.get("forest", {})),
            render=render,
            suction=SuctionThresholds.from_dict(doc.get("suction", {})),
            score_table=ScoreTable.from_dict(doc.get("score_table", {})),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        wc = self.workcell
        return {
            "rack": wc.rack_dims.to_dict(),
            "robot": wc.model.to_dict(),
            "tool_length_m": wc.tool_length,
            "tote": wc.tote.to_dict(),
            "ik": {"max_iterations": wc.ik.max_iterations,
                   "position_tolerance": wc.ik.position_tolerance,
                   "orientation_tolerance": wc.ik.orientation_tolerance,
                   "step_scale": wc.ik.step_scale, "k0": wc.ik.k0,
                   "kp_gain": np.asarray(wc.ik.kp_gain).tolist(), "lambda": wc.ik.lam},
            "planner": vars(wc.planner).copy(),
            "perception": vars(self.perception).copy(),
            "forest": vars(self.forest).copy(),
            "render": {"camera": vars(self.render.camera).copy(),
                       "noise_sigma_m": self.render.noise_sigma_m,
                       "color_jitter": self.render.color_jitter,
                       "wall_color": list(self.render.wall_color)},
            "suction": vars(self.suction).copy(),
            "score_table": {"rewards": dict(self.score_table.rewards),
                            "default_reward": self.score_table.default_reward,
                            "penalties": dict(self.score_table.penalties)},
        }
