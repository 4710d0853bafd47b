"""Harness tests: stats, CSV, plans, batch execution, lineage, pits, CLI."""

from __future__ import annotations

import json
import os
import random

import pytest

from baseraid.agents import GameRecord
from baseraid.errors import PlanError
from baseraid.game import BoardConfig, Player
from baseraid.harness import (
    StageSpec, StageStats, StatsRow, compute_stats, cross_evaluate,
    export_csv, final_snapshot_paths, format_pit_table, load_plan, parse_batch,
    plan_order, read_stats_csv, run_batch, run_plan, snapshot_path,
)
from baseraid.net import load_snapshot, weights_digest
from baseraid.cli import main as cli_main
from oracles import streaming_stats

SMALL_BOARD = {"n": 6, "a": 1, "beta": 3}


def _spec(batch_id="b1", stages=None, seed=7, **overrides):
    obj = {
        "id": batch_id,
        "board": SMALL_BOARD,
        "scheme": "r2",
        "params": {"lambda": 0.5, "gamma": 1.0, "alpha": 0.01, "epsilon_best": 0.9},
        "stages": stages or [{"kind": "cc", "games": 4}],
        "rng_seed": seed,
        "max_plies": 200,
    }
    obj.update(overrides)
    return parse_batch(obj)


def _rec(result, plies):
    return GameRecord(config=BoardConfig(6, 1, 3), result=result, plies=plies)


# --- stats ----------------------------------------------------------------------

def test_compute_stats_example():
    stats = compute_stats([_rec("white", 11), _rec("white", 13), _rec("black", 20)])
    assert stats.white_wins == 2 and stats.black_wins == 1 and stats.aborted == 0
    assert stats.avg_plies_white_wins == 12
    assert stats.avg_plies_black_wins == 20


def test_compute_stats_all_aborted():
    stats = compute_stats([_rec("aborted", 200)] * 3)
    assert stats.games_played == 3 and stats.aborted == 3
    assert stats.white_wins == 0 and stats.black_wins == 0
    assert stats.avg_plies_white_wins is None
    assert stats.avg_plies_black_wins is None


def test_compute_stats_matches_streaming_oracle():
    rng = random.Random(12)
    records = [
        _rec(rng.choice(["white", "black", "aborted"]), rng.randint(9, 400))
        for _ in range(1000)
    ]
    stats = compute_stats(records)
    oracle = streaming_stats(records)
    assert stats.games_played == oracle["games_played"]
    assert stats.white_wins == oracle["white_wins"]
    assert stats.black_wins == oracle["black_wins"]
    assert stats.aborted == oracle["aborted"]
    assert stats.avg_plies_white_wins == pytest.approx(oracle["avg_plies_white_wins"])
    assert stats.avg_plies_black_wins == pytest.approx(oracle["avg_plies_black_wins"])


def test_csv_round_trip(tmp_path):
    rows = [
        StatsRow("b1", 1, "cc", StageStats(3, 2, 1, 0, 12.0, 20.0)),
        StatsRow("b1", 2, "hc", StageStats(2, 0, 0, 2, None, None)),
    ]
    path = str(tmp_path / "stats.csv")
    export_csv(rows, path)
    back = read_stats_csv(path)
    assert back == rows
    header = open(path).readline().strip()
    assert header == (
        "batch_id,stage_index,stage_kind,games,white_wins,black_wins,aborted,"
        "avg_plies_white_wins,avg_plies_black_wins"
    )


# --- plans ----------------------------------------------------------------------

def test_plan_order_respects_dependencies():
    b6 = _spec("b6")
    b7 = _spec("b7", seed_networks={"from": "b6"})
    b8 = _spec("b8", seed_networks={"from": "b6"})
    order = [b.id for b in plan_order([b8, b7, b6])]
    assert order.index("b6") < order.index("b7")
    assert order.index("b6") < order.index("b8")


def test_plan_cycle_rejected():
    a = _spec("a", seed_networks={"from": "b"})
    b = _spec("b", seed_networks={"from": "a"})
    with pytest.raises(PlanError):
        plan_order([a, b])


def test_plan_missing_dependency_rejected():
    with pytest.raises(PlanError):
        plan_order([_spec("x", seed_networks={"from": "ghost"})])


def test_hc_stage_requires_white_agent():
    with pytest.raises(PlanError):
        StageSpec(kind="hc", games=10)
    with pytest.raises(PlanError):
        StageSpec(kind="hc", games=10, white_agent={"kind": "rl"})
    StageSpec(kind="hc", games=10, white_agent={"kind": "scripted", "policy": "p1"})


def test_load_plan_validates(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"batches": []}))
    with pytest.raises(PlanError):
        load_plan(str(path))
    path.write_text(json.dumps({"batches": [
        {"id": "x", "board": SMALL_BOARD, "stages": [{"kind": "cc", "games": 1}]},
        {"id": "x", "board": SMALL_BOARD, "stages": [{"kind": "cc", "games": 1}]},
    ]}))
    with pytest.raises(PlanError):
        load_plan(str(path))


def test_stage_defaults():
    assert parse_batch({
        "id": "d", "board": SMALL_BOARD, "stages": [{"kind": "cc"}],
    }).stages[0].games == 10_000
    assert parse_batch({
        "id": "d", "board": SMALL_BOARD,
        "stages": [{"kind": "hc", "white_agent": {"kind": "scripted", "policy": "p1"}}],
    }).stages[0].games == 10


# --- batch execution --------------------------------------------------------------

def test_run_batch_writes_rows_and_snapshots(tmp_path):
    spec = _spec("b1", stages=[
        {"kind": "cc", "games": 3},
        {"kind": "hc", "games": 2, "white_agent": {"kind": "scripted", "policy": "p1"}},
        {"kind": "cc", "games": 3},
    ])
    out = str(tmp_path)
    result = run_batch(spec, out)
    assert [r.stage_kind for r in result.rows] == ["cc", "hc", "cc"]
    assert len(result.snapshot_paths) == 6
    for path in result.snapshot_paths:
        assert os.path.exists(path)
    for row in result.rows:
        s = row.stats
        assert s.white_wins + s.black_wins + s.aborted == s.games_played
    meta = json.load(open(os.path.join(out, "b1", "batch.json")))
    assert meta["status"] == "complete"
    assert set(meta["initial_digests"]) == {"white", "black"}


def test_run_batch_deterministic_bytes(tmp_path):
    spec = _spec("b1", stages=[{"kind": "cc", "games": 4}], seed=11)
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    run_batch(spec, out_a)
    run_batch(spec, out_b)
    for name in sorted(os.listdir(os.path.join(out_a, "b1"))):
        with open(os.path.join(out_a, "b1", name), "rb") as fh:
            bytes_a = fh.read()
        with open(os.path.join(out_b, "b1", name), "rb") as fh:
            bytes_b = fh.read()
        assert bytes_a == bytes_b, name


def test_lineage_seeded_batch_starts_from_parent_final(tmp_path):
    out = str(tmp_path)
    parent = _spec("parent", stages=[{"kind": "cc", "games": 3}], seed=3)
    run_batch(parent, out)
    child = _spec("child", stages=[{"kind": "cc", "games": 2}], seed=4,
                  seed_networks={"from": "parent"})
    result = run_batch(child, out)
    finals = final_snapshot_paths(out, "parent")
    for player in Player:
        parent_net, _, _ = load_snapshot(finals[player])
        assert result.initial_digests[player.value] == weights_digest(parent_net)


def test_missing_seed_snapshot_rejected(tmp_path):
    child = _spec("child", seed_networks={"from": "nope"})
    with pytest.raises(PlanError):
        run_batch(child, str(tmp_path))


def test_run_plan_table5_shape(tmp_path):
    out = str(tmp_path)
    batches = [
        _spec("b6", stages=[{"kind": "cc", "games": 3}], seed=5),
        _spec("b7", stages=[{"kind": "cc", "games": 2}], seed=6,
              seed_networks={"from": "b6"}),
        _spec("b8", seed=7,
              stages=[{"kind": "hc", "games": 2,
                       "white_agent": {"kind": "scripted", "policy": "p1"}}],
              seed_networks={"from": "b6"}),
    ]
    results = run_plan(batches, out)
    assert set(results) == {"b6", "b7", "b8"}
    finals = final_snapshot_paths(out, "b6")
    parent_digest = weights_digest(load_snapshot(finals[Player.WHITE])[0])
    assert results["b7"].initial_digests["white"] == parent_digest
    assert results["b8"].initial_digests["white"] == parent_digest
    assert os.path.exists(os.path.join(out, "stats.csv"))
    combined = read_stats_csv(os.path.join(out, "stats.csv"))
    assert [r.batch_id for r in combined] == ["b6", "b7", "b8"]


def test_eight_batch_reduced_replica(tmp_path):
    # The full experiment grid at toy scale: three white policies under
    # reward 1, two further rewards under policy 1, then the seeded pair.
    out = str(tmp_path)

    def hc_stages(policy):
        return [
            {"kind": "cc", "games": 3},
            {"kind": "hc", "games": 2,
             "white_agent": {"kind": "scripted", "policy": policy}},
            {"kind": "cc", "games": 3},
            {"kind": "hc", "games": 2,
             "white_agent": {"kind": "scripted", "policy": policy}},
        ]

    cc_stages = [{"kind": "cc", "games": 4}, {"kind": "cc", "games": 4}]
    batches = [
        _spec("b1", stages=hc_stages("p1"), scheme="r1", seed=1),
        _spec("b2", stages=hc_stages("p2"), scheme="r1", seed=2),
        _spec("b3", stages=hc_stages("p3"), scheme="r1", seed=3),
        _spec("b4", stages=hc_stages("p1"), scheme="r2", seed=4),
        _spec("b5", stages=hc_stages("p1"), scheme="r3", seed=5),
        _spec("b6", stages=cc_stages, scheme="r3", seed=6),
        _spec("b7", stages=cc_stages, scheme="r3", seed=7,
              seed_networks={"from": "b6"}),
        _spec("b8", stages=hc_stages("p1"), scheme="r3", seed=8,
              seed_networks={"from": "b6"}),
    ]
    results = run_plan(batches, out)
    assert len(results) == 8
    for bid, result in results.items():
        assert os.path.isdir(os.path.join(out, bid))
        expected_stages = len(result.spec.stages)
        assert len(result.rows) == expected_stages
        assert len(result.snapshot_paths) == 2 * expected_stages
    combined = read_stats_csv(os.path.join(out, "stats.csv"))
    assert len(combined) == sum(len(r.rows) for r in results.values())


def test_snapshot_provenance(tmp_path):
    out = str(tmp_path)
    spec = _spec("b9", stages=[{"kind": "cc", "games": 2}], seed=9)
    run_batch(spec, out)
    _, _, prov = load_snapshot(snapshot_path(out, "b9", 1, Player.WHITE))
    assert prov == {"batch_id": "b9", "stage": 1, "rng_seed": 9}


# --- pits -------------------------------------------------------------------------

def _two_snapshots(tmp_path):
    out = str(tmp_path)
    run_batch(_spec("p1", stages=[{"kind": "cc", "games": 2}], seed=21), out)
    run_batch(_spec("p2", stages=[{"kind": "cc", "games": 2}], seed=22), out)
    return (
        final_snapshot_paths(out, "p1")[Player.WHITE],
        final_snapshot_paths(out, "p2")[Player.BLACK],
    )


def test_cross_evaluate_accounting(tmp_path):
    white_snap, black_snap = _two_snapshots(tmp_path)
    report = cross_evaluate(white_snap, black_snap, games=6, learn=True,
                            rng_seed=1, label="W1 - B2", max_plies=200)
    assert report.games == 6
    assert report.white_wins + report.black_wins + report.aborted == 6
    assert report.label == "W1 - B2"


def test_cross_evaluate_frozen_self_pit(tmp_path):
    white_snap, _ = _two_snapshots(tmp_path)
    a = cross_evaluate(white_snap, white_snap, games=4, learn=False, rng_seed=5,
                       max_plies=200)
    b = cross_evaluate(white_snap, white_snap, games=4, learn=False, rng_seed=5,
                       max_plies=200)
    assert (a.white_wins, a.black_wins, a.aborted) == (b.white_wins, b.black_wins, b.aborted)


def test_cross_evaluate_zero_games(tmp_path):
    white_snap, black_snap = _two_snapshots(tmp_path)
    report = cross_evaluate(white_snap, black_snap, games=0)
    assert report.games == 0 and report.white_wins == 0 and report.black_wins == 0
    assert report.avg_plies_white_wins is None
    assert report.avg_plies_black_wins is None


def test_cross_evaluate_board_mismatch(tmp_path):
    out = str(tmp_path)
    run_batch(_spec("small", stages=[{"kind": "cc", "games": 1}], seed=1), out)
    big = _spec("big", stages=[{"kind": "cc", "games": 1}], seed=2,
                board={"n": 8, "a": 2, "beta": 10})
    run_batch(big, out)
    with pytest.raises(PlanError):
        cross_evaluate(
            final_snapshot_paths(out, "small")[Player.WHITE],
            final_snapshot_paths(out, "big")[Player.BLACK],
            games=1,
        )


def test_format_pit_table_shape():
    from baseraid.harness import PitReport

    text = format_pit_table([
        PitReport("W5 - B8", 1000, 715, 285, 0, 291.0, 397.0),
        PitReport("W8 - B5", 1000, 530, 470, 0, 445.0, 314.0),
    ])
    lines = text.splitlines()
    assert "Games Won" in lines[0] and "Average # of Moves" in lines[0]
    assert "W5 - B8" in lines[2] and "715" in lines[2] and "291.0" in lines[2]


# --- CLI ---------------------------------------------------------------------------

def _write_plan(tmp_path, name="plan.json"):
    plan = {
        "batches": [
            {
                "id": "cli1", "board": SMALL_BOARD, "scheme": "r2",
                "params": {"lambda": 0.5, "gamma": 1.0, "alpha": 0.01, "epsilon_best": 0.9},
                "stages": [{"kind": "cc", "games": 2}],
                "rng_seed": 3, "max_plies": 150,
            },
        ]
    }
    path = tmp_path / name
    path.write_text(json.dumps(plan))
    return str(path)


def test_cli_run_and_stats(tmp_path, capsys):
    plan = _write_plan(tmp_path)
    out = str(tmp_path / "runs")
    assert cli_main(["run", "--plan", plan, "--out", out]) == 0
    run_output = capsys.readouterr().out
    assert "cli1,1,cc,2" in run_output
    assert cli_main(["stats", "--dir", out]) == 0
    assert "batch_id" in capsys.readouterr().out
    merged = str(tmp_path / "merged.csv")
    assert cli_main(["stats", "--dir", out, "--csv", merged]) == 0
    assert os.path.exists(merged)


def test_cli_seed_override_reproduces(tmp_path, capsys):
    plan = _write_plan(tmp_path)
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert cli_main(["run", "--plan", plan, "--out", out1, "--seed", "55"]) == 0
    first = capsys.readouterr().out
    assert cli_main(["run", "--plan", plan, "--out", out2, "--seed", "55"]) == 0
    second = capsys.readouterr().out
    assert first == second
    with open(os.path.join(out1, "cli1", "stage01_white.json"), "rb") as fh:
        snap1 = fh.read()
    with open(os.path.join(out2, "cli1", "stage01_white.json"), "rb") as fh:
        snap2 = fh.read()
    assert snap1 == snap2


def test_cli_pit(tmp_path, capsys):
    out = str(tmp_path)
    run_batch(_spec("pa", stages=[{"kind": "cc", "games": 2}], seed=31), out)
    snaps = final_snapshot_paths(out, "pa")
    code = cli_main([
        "pit", "--white", snaps[Player.WHITE], "--black", snaps[Player.BLACK],
        "--games", "3", "--frozen", "--seed", "2", "--label", "WA - BA",
    ])
    assert code == 0
    assert "WA - BA" in capsys.readouterr().out


def test_cli_error_codes(tmp_path):
    bad_plan = tmp_path / "bad.json"
    bad_plan.write_text(json.dumps({"batches": [
        {"id": "z", "board": {"n": 4, "a": 2, "beta": 1},
         "stages": [{"kind": "cc", "games": 1}]},
    ]}))
    assert cli_main(["run", "--plan", str(bad_plan), "--out", str(tmp_path / "o")]) == 2
    assert cli_main(["pit", "--white", "missing.json", "--black", "missing.json",
                     "--games", "1"]) == 4
