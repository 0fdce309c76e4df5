import csv
import json

import numpy as np
import pytest

from pickstow.errors import ConfigError, ConsistencyError, SchemaError
from pickstow.geometry import make_transform
from pickstow.kinematics import forward_kinematics
from pickstow.orchestrator import (CSV_COLUMNS, OUTCOMES, TOTE, RunReport, ScoreTable,
                                   TaskAttempt, choose_destination, emit_metrics,
                                   generate_scene_library, load_scene_library, parse_work_order,
                                   run_pick_task, run_stow_task, save_scene_library, score_run,
                                   simulate_suction)
from pickstow.orchestrator.scenes import bin_slots, populate_bin, populate_tote
from pickstow.perception.catalog import ITEM_IDS, get_item, place_in_tote
from pickstow.perception.pipeline import SuctionTarget
from pickstow.perception.scene import SceneObject
from pickstow.rack import BIN_NAMES

GOLDEN_HEADER = ("attempt,item,source,destination,outcome,json_read,motion1_home_to_binview,"
                 "object_recognition,motion2_pregrasp,motion3_postgrasp,motion4_tote_to_home,"
                 "loop_total")


def pick_order(pairs):
    bins = {}
    for b, item in pairs:
        bins.setdefault(b, []).append(item)
    return parse_work_order(json.dumps({
        "mode": "pick", "bin_contents": bins,
        "work_order": [{"bin": b, "item": i} for b, i in pairs]}))


def stow_order(items, bins=None):
    return parse_work_order(json.dumps({"mode": "stow", "bin_contents": bins or {},
                                        "tote_contents": list(items)}))


TWELVE = list(zip(BIN_NAMES, ITEM_IDS[:12]))


@pytest.fixture(scope="session")
def twelve_run(workcell, run_config, perception_models):
    order = pick_order(TWELVE)
    scenes = generate_scene_library(order, workcell.rack, workcell.tote.pose, seed=0)
    report = run_pick_task(order, scenes, run_config, 0, workcell, perception_models)
    return order, report


def _run_pick(pairs, workcell, run_config, models, scenes=None, seed=0):
    order = pick_order(pairs)
    if scenes is None:
        scenes = generate_scene_library(order, workcell.rack, workcell.tote.pose, seed)
    return run_pick_task(order, scenes, run_config, seed, workcell, models)


# -- work orders --------------------------------------------------------------------


def test_minimal_pick_order():
    order = pick_order([("bin_A", "command_hooks")])
    assert order.mode == "pick" and len(order.targets) == 1
    assert order.targets[0].bin == "bin_A" and order.targets[0].item == "command_hooks"


def test_twelve_bin_order():
    order = pick_order(TWELVE)
    assert order.mode == "pick" and len(order.targets) == 12
    assert {t.bin for t in order.targets} == set(BIN_NAMES)


def test_target_missing_from_bin_names_both():
    doc = {"mode": "pick", "bin_contents": {"bin_A": ["command_hooks"]},
           "work_order": [{"bin": "bin_A", "item": "rawlings_baseball"}]}
    with pytest.raises(ConsistencyError, match="rawlings_baseball.*bin_A"):
        parse_work_order(json.dumps(doc))


@pytest.mark.parametrize("doc", [
    "not json",
    {"mode": "juggle", "bin_contents": {}},
    {"mode": "pick", "bin_contents": {"bin_Z": ["command_hooks"]}, "work_order": []},
    {"mode": "pick", "bin_contents": {"bin_A": ["no_such_item"]}, "work_order": []},
    {"mode": "pick", "bin_contents": {"bin_A": ["command_hooks"]}},
    {"mode": "pick", "bin_contents": {"bin_A": ["command_hooks"] * 11},
     "work_order": [{"bin": "bin_A", "item": "command_hooks"}]},
])
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        parse_work_order(doc if isinstance(doc, str) else json.dumps(doc))


def test_stow_order_defaults_to_tote():
    order = stow_order(["command_hooks", "rawlings_baseball"])
    assert order.targets == ("command_hooks", "rawlings_baseball")
    with pytest.raises(ConsistencyError):
        parse_work_order(json.dumps({"mode": "stow", "bin_contents": {},
                                     "tote_contents": ["command_hooks"],
                                     "work_order": ["command_hooks", "command_hooks"]}))


def test_work_order_roundtrip():
    order = pick_order(TWELVE[:3])
    assert parse_work_order(order.to_json()) == order


# -- suction ---------------------------------------------------------------------------


def _slab(center, dims=(0.2, 0.2, 0.1), id_="slab"):
    return SceneObject(id_, "box", dims, make_transform(None, center), (0.5, 0.5, 0.5))


def test_suction_on_flat_face():
    obj = _slab((0, 0, 0))
    up = np.array([0.0, 0.0, 1.0])
    assert simulate_suction(SuctionTarget((0, 0, 0.05), up, (0, 0, 0), 1.0), obj) == "succeeded"


def test_suction_off_surface_drops():
    obj = _slab((0, 0, 0))
    up = np.array([0.0, 0.0, 1.0])
    assert simulate_suction(SuctionTarget((0, 0, 0.07), up, (0, 0, 0), 1.0), obj) == "dropped"


def test_suction_tilted_or_on_edge_drops():
    obj = _slab((0, 0, 0))
    tilted = np.array([np.sin(0.5), 0.0, np.cos(0.5)])
    assert simulate_suction(SuctionTarget((0, 0, 0.05), tilted, (0, 0, 0), 1.0), obj) == "dropped"
    up = np.array([0.0, 0.0, 1.0])
    assert simulate_suction(SuctionTarget((0.095, 0, 0.05), up, (0, 0, 0), 1.0), obj) == "dropped"


def test_suction_on_neighbour_is_wrong_item():
    wanted = _slab((0, 0, 0), id_="wanted")
    other = _slab((0.25, 0, 0), id_="other")
    up = np.array([0.0, 0.0, 1.0])
    target = SuctionTarget((0.25, 0, 0.05), up, (0.25, 0, 0), 1.0)
    assert simulate_suction(target, wanted, scene=[wanted, other]) == "wrong_item"
    assert simulate_suction(target, other, scene=[wanted, other]) == "succeeded"


# -- scoring and metrics -----------------------------------------------------------------


def _attempt(outcome, item="command_hooks", timings=None):
    return TaskAttempt(item, "bin_A", TOTE, outcome, timings or {})


def test_score_examples():
    assert score_run([_attempt("succeeded")] * 12) == 120
    assert score_run([_attempt("succeeded")] * 11 + [_attempt("dropped")]) == 105
    assert score_run([]) == 0


def test_score_is_linear():
    a = [_attempt("succeeded"), _attempt("wrong_item")]
    b = [_attempt("dropped"), _attempt("plan_failed"), _attempt("succeeded")]
    assert score_run(a + b) == score_run(a) + score_run(b)


def test_score_table_lookup():
    table = ScoreTable(rewards={"command_hooks": 20}, default_reward=None)
    assert table.score(_attempt("succeeded")) == 20
    with pytest.raises(ConfigError):
        table.score(_attempt("succeeded", item="rawlings_baseball"))
    assert ScoreTable.from_dict({"penalties": {"dropped": -1}}).score(_attempt("dropped")) == -1


def test_unknown_outcome_rejected():
    with pytest.raises(ValueError):
        _attempt("exploded")


def test_emit_metrics(tmp_path):
    timings = {"json_read": 0.001, "motion1_home_to_binview": 0.5, "object_recognition": 1.0,
               "motion2_pregrasp": 0.25, "motion3_postgrasp": 0.25,
               "motion4_tote_to_home": 0.5}
    attempts = [_attempt("succeeded", timings=timings), _attempt("dropped", timings=timings),
                _attempt("perception_failed", timings={"json_read": 0.001})]
    report = RunReport.from_attempts(attempts)
    csv_path, json_path = emit_metrics(report, tmp_path / "out")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == GOLDEN_HEADER == ",".join(CSV_COLUMNS)
    rows = list(csv.DictReader(lines))
    assert len(rows) == 4 and rows[-1]["attempt"] == "summary"
    for row in rows:
        stages = sum(float(row[c]) for c in CSV_COLUMNS[5:-1])
        assert float(row["loop_total"]) == pytest.approx(stages, abs=1e-5)
    summary = json.loads(json_path.read_text())
    assert summary["attempts"] == 3 and summary["outcomes"]["succeeded"] == 1
    assert set(summary["outcomes"]) == set(OUTCOMES)
    assert summary["total_score"] == 10 - 5


def test_emit_metrics_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_metrics(RunReport.from_attempts([]), blocker / "out")


# -- scenes -------------------------------------------------------------------------------


def test_bin_slots():
    assert bin_slots(1, (0.3, 0.25, 0.2)) == [(0.09, 0.0)]
    slots = bin_slots(5, (0.3, 0.25, 0.2))
    assert len(slots) == 5 and len(set(slots)) == 5
    assert all(0 < d < 0.3 and abs(l) < 0.125 for d, l in slots)


def test_populate_bin_inside(workcell):
    objs = populate_bin(workcell.rack, "bin_E", ["command_hooks", "rawlings_baseball"])
    frame = workcell.rack.bin_frame(4)
    size = workcell.rack.bin_size(4)
    for o in objs:
        local = np.linalg.inv(frame) @ np.append(o.center, 1.0)
        assert 0 < local[0] < size[0] and abs(local[1]) < size[1] / 2


def test_populate_tote_stacks(workcell):
    objs = populate_tote(workcell.tote.pose, ITEM_IDS[:7])
    first, seventh = objs[0], objs[6]
    np.testing.assert_allclose(first.center[:2], seventh.center[:2])
    assert seventh.center[2] > first.center[2]


def test_scene_library_roundtrip(workcell, tmp_path):
    order = pick_order(TWELVE[:2])
    lib = generate_scene_library(order, workcell.rack, workcell.tote.pose, seed=1)
    save_scene_library(lib, tmp_path / "scenes")
    back = load_scene_library(tmp_path / "scenes")
    assert set(back) == set(lib)
    for name in lib:
        for a, b in zip(lib[name], back[name]):
            assert a.id == b.id
            np.testing.assert_allclose(a.pose, b.pose)


def test_missing_scene_dir():
    with pytest.raises(OSError):
        load_scene_library("/nonexistent/scenes")


def test_choose_destination():
    bins = {name: [] for name in BIN_NAMES}
    assert choose_destination(bins) == "bin_A"
    bins["bin_A"].append(object())
    assert choose_destination(bins) == "bin_B"


# -- pick runs ------------------------------------------------------------------------------


def test_three_easy_bins(workcell, run_config, perception_models):
    report = _run_pick(TWELVE[:3], workcell, run_config, perception_models)
    assert report.outcomes() == ["succeeded"] * 3
    standoff = workcell.planner.standoff
    for a in report.attempts:
        tip = forward_kinematics(workcell.model, a.grasp_q)[:3, 3]
        assert np.linalg.norm(tip - a.suction_point.point) <= standoff + run_config.suction.cup_radius
        assert set(a.stage_timings) == set(CSV_COLUMNS[5:-1])
        assert [p.segment_label for p in a.plans] == ["home_to_binview", "pre_grasp",
                                                       "post_grasp", "tote_to_home"]


def test_missing_item_fails_only_its_attempt(workcell, run_config, perception_models):
    pairs = TWELVE[:3]
    order = pick_order(pairs)
    scenes = generate_scene_library(order, workcell.rack, workcell.tote.pose, 0)
    scenes["bin_B"] = populate_bin(workcell.rack, "bin_B", ["rawlings_baseball"])
    report = run_pick_task(order, scenes, run_config, 0, workcell, perception_models)
    assert report.outcomes() == ["succeeded", "perception_failed", "succeeded"]


def test_pick_is_deterministic(workcell, run_config, perception_models):
    a = _run_pick(TWELVE[3:6], workcell, run_config, perception_models, seed=5)
    b = _run_pick(TWELVE[3:6], workcell, run_config, perception_models, seed=5)
    assert [x.key() for x in a.attempts] == [x.key() for x in b.attempts]
    assert a.total_score == b.total_score


def test_twelve_target_pick(twelve_run, run_config):
    order, report = twelve_run
    assert len(report.attempts) == 12
    assert sum(o == "succeeded" for o in report.outcomes()) >= 10
    half = score_run(report.attempts[:6], run_config.score_table) + \
        score_run(report.attempts[6:], run_config.score_table)
    assert report.total_score == half


def test_wrong_mode_rejected(workcell, run_config, perception_models):
    with pytest.raises(ValueError):
        run_pick_task(stow_order([]), {}, run_config, 0, workcell, perception_models)
    with pytest.raises(ValueError):
        run_stow_task(pick_order(TWELVE[:1]), {}, run_config, 0, workcell, perception_models)


# -- stow runs ---------------------------------------------------------------------------------


def test_stow_two_items(workcell, run_config, perception_models):
    order = stow_order(["kleenex_tissue_box", "crayola_24_ct"])
    scenes = generate_scene_library(order, workcell.rack, workcell.tote.pose, 0)
    report = run_stow_task(order, scenes, run_config, 0, workcell, perception_models)
    assert report.outcomes() == ["succeeded"] * 2
    dests = [a.destination for a in report.attempts]
    assert dests == ["bin_A", "bin_B"]


def test_stow_reveals_occluded_item(workcell, run_config, perception_models):
    under, over = "dove_beauty_bar", "jane_eyre_dvd"
    pose = workcell.tote.pose
    low = place_in_tote(get_item(under).lying_flat(), pose)
    high = place_in_tote(get_item(over).lying_flat(), pose,
                         z_base=2 * get_item(under).lying_flat().resting_half_height())
    order = stow_order([under, over])
    report = run_stow_task(order, {TOTE: [low, high]}, run_config, 0, workcell, perception_models)
    assert [a.item for a in report.attempts] == [over, under]
    assert report.outcomes() == ["succeeded"] * 2


def test_empty_tote(workcell, run_config, perception_models):
    report = run_stow_task(stow_order([]), {}, run_config, 0, workcell, perception_models)
    assert report.attempts == () and report.total_score == 0
