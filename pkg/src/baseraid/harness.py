"""Experiment orchestration: batches of CC/HC stages, snapshot lineage,
stage statistics, cross-play pit evaluations, and CSV export.

A batch is a deterministic function of its spec and seed: networks are
initialised (or loaded from a parent batch's final snapshots), stages run
in order, and after every stage both networks and a stats row are written
to the store. The store is a plain directory per batch id; no database.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Optional

import numpy as np

from .agents import (
    GameRecord, RewardScheme, RLMover, SessionCounters, mover_from_spec,
    play_game,
)
from .errors import NumericFault, PlanError
from .game import BoardConfig, Player
from .net import (
    NetworkTopology, TDParams, ValueNetwork, init_network, load_snapshot,
    make_traces, save_snapshot, weights_digest,
)

DEFAULT_GAMES = {"cc": 10_000, "hc": 10}
ACCELERATED_CC_GAMES = 1_000


@dataclass(frozen=True)
class StageSpec:
    """One stage: a run of CC self-play games or an HC block."""

    kind: str  # "cc" | "hc"
    games: int
    white_agent: Optional[dict] = None  # agent spec mapping, HC only
    learn_white: bool = True
    learn_black: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("cc", "hc"):
            raise PlanError(f"unknown stage kind {self.kind!r}")
        if self.games < 0:
            raise PlanError("stage game count must be >= 0")
        if self.kind == "hc":
            agent = self.white_agent or {}
            if agent.get("kind") not in ("scripted", "human"):
                raise PlanError(
                    "an HC stage needs a scripted policy or an interactive "
                    "(human) white agent"
                )


@dataclass(frozen=True)
class BatchSpec:
    """A full experiment: board, reward scheme, stage sequence, seeding."""

    id: str
    board: BoardConfig
    scheme: RewardScheme
    params: TDParams
    stages: tuple[StageSpec, ...]
    seed_networks: Optional[dict] = None  # {"from": batch_id} | {"white": p, "black": p}
    rng_seed: int = 0
    max_plies: int = 1_000

    @property
    def parent_id(self) -> Optional[str]:
        if self.seed_networks and "from" in self.seed_networks:
            return self.seed_networks["from"]
        return None


@dataclass
class StageStats:
    """Win counts and mean game lengths (in plies) for one block of games.

    The averages are absent, not zero, when the corresponding side won
    nothing; aborted (move-capped) games sit in their own column and leave
    the win averages untouched.
    """

    games_played: int = 0
    white_wins: int = 0
    black_wins: int = 0
    aborted: int = 0
    avg_plies_white_wins: Optional[float] = None
    avg_plies_black_wins: Optional[float] = None


@dataclass
class PitReport:
    """Cross-play outcome between two snapshot lineages."""

    label: str
    games: int
    white_wins: int
    black_wins: int
    aborted: int
    avg_plies_white_wins: Optional[float]
    avg_plies_black_wins: Optional[float]


@dataclass
class StatsRow:
    batch_id: str
    stage_index: int  # 1-based
    stage_kind: str
    stats: StageStats


@dataclass
class BatchResult:
    spec: BatchSpec
    rows: list[StatsRow] = field(default_factory=list)
    snapshot_paths: list[str] = field(default_factory=list)
    initial_digests: dict = field(default_factory=dict)
    final_digests: dict = field(default_factory=dict)
    status: str = "complete"


def compute_stats(records: list[GameRecord]) -> StageStats:
    """Counts and win-length means over one stage's records."""
    stats = StageStats(games_played=len(records))
    white_plies: list[int] = []
    black_plies: list[int] = []
    for rec in records:
        if rec.result == "white":
            stats.white_wins += 1
            white_plies.append(rec.plies)
        elif rec.result == "black":
            stats.black_wins += 1
            black_plies.append(rec.plies)
        else:
            stats.aborted += 1
    if white_plies:
        stats.avg_plies_white_wins = sum(white_plies) / len(white_plies)
    if black_plies:
        stats.avg_plies_black_wins = sum(black_plies) / len(black_plies)
    return stats


CSV_COLUMNS = (
    "batch_id", "stage_index", "stage_kind", "games", "white_wins",
    "black_wins", "aborted", "avg_plies_white_wins", "avg_plies_black_wins",
)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return str(value)


def rows_to_csv(rows: list[StatsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        s = row.stats
        writer.writerow([
            row.batch_id, row.stage_index, row.stage_kind, s.games_played,
            s.white_wins, s.black_wins, s.aborted,
            _csv_cell(s.avg_plies_white_wins), _csv_cell(s.avg_plies_black_wins),
        ])
    return buf.getvalue()


def export_csv(rows: list[StatsRow], path: str) -> None:
    """Write stage rows in the stable column order; deterministic bytes."""
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_stats_csv(path: str) -> list[StatsRow]:
    rows: list[StatsRow] = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(StatsRow(
                batch_id=rec["batch_id"],
                stage_index=int(rec["stage_index"]),
                stage_kind=rec["stage_kind"],
                stats=StageStats(
                    games_played=int(rec["games"]),
                    white_wins=int(rec["white_wins"]),
                    black_wins=int(rec["black_wins"]),
                    aborted=int(rec["aborted"]),
                    avg_plies_white_wins=(
                        float(rec["avg_plies_white_wins"]) if rec["avg_plies_white_wins"] else None
                    ),
                    avg_plies_black_wins=(
                        float(rec["avg_plies_black_wins"]) if rec["avg_plies_black_wins"] else None
                    ),
                ),
            ))
    return rows


# --- plan files ---------------------------------------------------------------

def parse_params(obj: Optional[dict]) -> TDParams:
    obj = obj or {}
    return TDParams(
        lam=obj.get("lambda", 0.5),
        gamma=obj.get("gamma", 1.0),
        alpha=obj.get("alpha", 0.01),
        epsilon_best=obj.get("epsilon_best", 0.9),
    )


def parse_stage(obj: dict) -> StageSpec:
    kind = obj.get("kind")
    if kind not in ("cc", "hc"):
        raise PlanError(f"stage kind must be 'cc' or 'hc', got {kind!r}")
    return StageSpec(
        kind=kind,
        games=int(obj.get("games", DEFAULT_GAMES[kind])),
        white_agent=obj.get("white_agent"),
        learn_white=bool(obj.get("learn_white", True)),
        learn_black=bool(obj.get("learn_black", True)),
    )


def parse_batch(obj: dict) -> BatchSpec:
    if "id" not in obj:
        raise PlanError("every batch needs an id")
    board = BoardConfig(**obj.get("board", {}))
    stages = tuple(parse_stage(s) for s in obj.get("stages", ()))
    if not stages:
        raise PlanError(f"batch {obj['id']!r} has no stages")
    return BatchSpec(
        id=obj["id"],
        board=board,
        scheme=RewardScheme(obj.get("scheme", "r2")),
        params=parse_params(obj.get("params")),
        stages=stages,
        seed_networks=obj.get("seed_networks"),
        rng_seed=int(obj.get("rng_seed", 0)),
        max_plies=int(obj.get("max_plies", 1_000)),
    )


def load_plan(path: str) -> list[BatchSpec]:
    with open(path) as fh:
        obj = json.load(fh)
    batches = [parse_batch(b) for b in obj.get("batches", [])]
    if not batches:
        raise PlanError(f"{path}: no batches in plan")
    ids = [b.id for b in batches]
    if len(set(ids)) != len(ids):
        raise PlanError("duplicate batch ids in plan")
    return batches


def plan_order(batches: list[BatchSpec]) -> list[BatchSpec]:
    """Dependency-respecting execution order; rejects cycles up front."""
    by_id = {b.id: b for b in batches}
    sorter: TopologicalSorter = TopologicalSorter()
    for b in batches:
        parent = b.parent_id
        if parent is not None:
            if parent not in by_id:
                raise PlanError(f"batch {b.id!r} seeds from unknown batch {parent!r}")
            sorter.add(b.id, parent)
        else:
            sorter.add(b.id)
    try:
        order = list(sorter.static_order())
    except CycleError as exc:
        raise PlanError(f"seeding dependencies form a cycle: {exc.args[1]}") from exc
    return [by_id[i] for i in order]


# --- the store ----------------------------------------------------------------

def batch_dir(out_dir: str, batch_id: str) -> str:
    return os.path.join(out_dir, batch_id)


def snapshot_path(out_dir: str, batch_id: str, stage_index: int, player: Player) -> str:
    return os.path.join(
        batch_dir(out_dir, batch_id), f"stage{stage_index:02d}_{player.value}.json"
    )


def final_snapshot_paths(out_dir: str, batch_id: str) -> dict[Player, str]:
    """The last stage's snapshots of a finished batch."""
    directory = batch_dir(out_dir, batch_id)
    try:
        names = sorted(
            n for n in os.listdir(directory)
            if n.startswith("stage") and n.endswith("_white.json")
        )
    except FileNotFoundError:
        names = []
    if not names:
        raise PlanError(f"no snapshots found for batch {batch_id!r} in {directory}")
    last = names[-1]
    return {
        Player.WHITE: os.path.join(directory, last),
        Player.BLACK: os.path.join(directory, last.replace("_white.json", "_black.json")),
    }


# --- batch execution ----------------------------------------------------------

def _initial_networks(
    spec: BatchSpec, out_dir: str
) -> dict[Player, ValueNetwork]:
    topology = NetworkTopology.for_board(spec.board)
    if spec.seed_networks is None:
        ss = np.random.SeedSequence(spec.rng_seed)
        seed_w, seed_b, _ = ss.spawn(3)
        return {
            Player.WHITE: init_network(topology, seed_w),
            Player.BLACK: init_network(topology, seed_b),
        }
    ref = spec.seed_networks
    if "from" in ref:
        paths = final_snapshot_paths(out_dir, ref["from"])
    else:
        try:
            paths = {Player.WHITE: ref["white"], Player.BLACK: ref["black"]}
        except KeyError as exc:
            raise PlanError(
                f"seed_networks must carry 'from' or both 'white' and 'black': {ref}"
            ) from exc
    nets = {}
    for player, path in paths.items():
        if not os.path.exists(path):
            raise PlanError(f"seed snapshot {path} is missing")
        nets[player], _, _ = load_snapshot(path, board=spec.board)
    return nets


def _game_rng(spec: BatchSpec) -> np.random.Generator:
    ss = np.random.SeedSequence(spec.rng_seed)
    _, _, games = ss.spawn(3)
    return np.random.default_rng(games)


def run_batch(
    spec: BatchSpec,
    out_dir: str,
    human_provider: Optional[Callable] = None,
    observer: Optional[Callable] = None,
    on_game_start: Optional[Callable] = None,
    on_game_end: Optional[Callable] = None,
) -> BatchResult:
    """Execute every stage, checkpointing networks and stats after each.

    The run is a deterministic function of (spec, rng_seed) as long as all
    seats are scripted or RL. ``human_provider`` supplies moves for "human"
    white seats; the optional callbacks let a service publish progress. On
    a numeric fault the partial results stay on disk, the batch is marked
    failed, and the fault propagates.
    """
    directory = batch_dir(out_dir, spec.id)
    os.makedirs(directory, exist_ok=True)
    nets = _initial_networks(spec, out_dir)
    traces = {p: make_traces(nets[p]) for p in Player}
    rng = _game_rng(spec)
    result = BatchResult(
        spec=spec,
        initial_digests={p.value: weights_digest(nets[p]) for p in Player},
    )
    try:
        for stage_no, stage in enumerate(spec.stages, start=1):
            counters = SessionCounters()
            records: list[GameRecord] = []
            if stage.kind == "cc":
                white_mover = RLMover(learn=stage.learn_white)
            else:
                white_mover = mover_from_spec(
                    dict(stage.white_agent, learn=stage.white_agent.get("learn", stage.learn_white)),
                    counters=counters,
                    provider=human_provider,
                )
            black_mover = RLMover(learn=stage.learn_black)
            for game_no in range(1, stage.games + 1):
                if on_game_start is not None:
                    on_game_start(spec, stage_no, stage, game_no, compute_stats(records))
                rec = play_game(
                    spec.board, white_mover, black_mover, nets, traces,
                    spec.scheme, spec.params, rng, max_plies=spec.max_plies,
                    observer=observer,
                )
                counters.games_played += 1
                if rec.result == "black":
                    counters.black_wins += 1
                elif rec.result == "white":
                    counters.white_wins += 1
                records.append(rec)
                if on_game_end is not None:
                    on_game_end(spec, stage_no, stage, game_no, rec, compute_stats(records))
            stats = compute_stats(records)
            result.rows.append(StatsRow(spec.id, stage_no, stage.kind, stats))
            for player in Player:
                path = snapshot_path(out_dir, spec.id, stage_no, player)
                save_snapshot(
                    nets[player], spec.board, path,
                    provenance={
                        "batch_id": spec.id, "stage": stage_no, "rng_seed": spec.rng_seed,
                    },
                )
                result.snapshot_paths.append(path)
    except NumericFault as fault:
        result.status = f"numeric-fault: {fault}"
        _write_batch_metadata(spec, result, directory, nets)
        raise
    result.final_digests = {p.value: weights_digest(nets[p]) for p in Player}
    _write_batch_metadata(spec, result, directory, nets)
    return result


def _write_batch_metadata(
    spec: BatchSpec, result: BatchResult, directory: str, nets
) -> None:
    export_csv(result.rows, os.path.join(directory, "stats.csv"))
    meta = {
        "id": spec.id,
        "board": {"n": spec.board.n, "a": spec.board.a, "beta": spec.board.beta},
        "scheme": spec.scheme.kind,
        "params": {
            "lambda": spec.params.lam, "gamma": spec.params.gamma,
            "alpha": spec.params.alpha, "epsilon_best": spec.params.epsilon_best,
        },
        "stages": [
            {
                "kind": s.kind, "games": s.games, "white_agent": s.white_agent,
                "learn_white": s.learn_white, "learn_black": s.learn_black,
            }
            for s in spec.stages
        ],
        "seed_networks": spec.seed_networks,
        "rng_seed": spec.rng_seed,
        "max_plies": spec.max_plies,
        "initial_digests": result.initial_digests,
        "final_digests": result.final_digests,
        "status": result.status,
    }
    with open(os.path.join(directory, "batch.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_plan(
    batches: list[BatchSpec],
    out_dir: str,
    human_provider: Optional[Callable] = None,
    observer: Optional[Callable] = None,
    on_game_start: Optional[Callable] = None,
    on_game_end: Optional[Callable] = None,
) -> dict[str, BatchResult]:
    """Run a whole plan in dependency order; outputs land under each id.

    Execution is sequential (dependency-independent batches could fan out,
    but a serial order keeps the combined CSV and logs reproducible without
    any coordination).
    """
    ordered = plan_order(batches)
    os.makedirs(out_dir, exist_ok=True)
    results: dict[str, BatchResult] = {}
    for spec in ordered:
        results[spec.id] = run_batch(
            spec, out_dir,
            human_provider=human_provider, observer=observer,
            on_game_start=on_game_start, on_game_end=on_game_end,
        )
    combined: list[StatsRow] = []
    for spec in ordered:
        combined.extend(results[spec.id].rows)
    export_csv(combined, os.path.join(out_dir, "stats.csv"))
    return results


# --- pit evaluations ------------------------------------------------------------

def cross_evaluate(
    white_snapshot: str,
    black_snapshot: str,
    games: int,
    learn: bool = True,
    rng_seed: int = 0,
    label: Optional[str] = None,
    max_plies: int = 1_000,
    on_game_end: Optional[Callable[[GameRecord], None]] = None,
) -> PitReport:
    """Pit two snapshots against each other over CC games.

    Learning stays on by default, mirroring the stepwise evaluation
    protocol; pass ``learn=False`` for a frozen strength measurement.
    """
    net_w, board_w, _ = load_snapshot(white_snapshot)
    net_b, board_b, _ = load_snapshot(black_snapshot)
    if board_w != board_b:
        raise PlanError(
            f"snapshots disagree on the board: {board_w} vs {board_b}"
        )
    nets = {Player.WHITE: net_w, Player.BLACK: net_b}
    traces = {p: make_traces(nets[p]) for p in Player}
    rng = np.random.default_rng(rng_seed)
    params = TDParams()
    scheme = RewardScheme("r3")
    records = []
    mover = RLMover(learn=learn)
    for _ in range(games):
        rec = play_game(
            board_w, mover, mover, nets, traces, scheme, params, rng,
            max_plies=max_plies,
        )
        if on_game_end is not None:
            on_game_end(rec)
        records.append(rec)
    stats = compute_stats(records)
    return PitReport(
        label=label or f"{os.path.basename(white_snapshot)} vs {os.path.basename(black_snapshot)}",
        games=stats.games_played,
        white_wins=stats.white_wins,
        black_wins=stats.black_wins,
        aborted=stats.aborted,
        avg_plies_white_wins=stats.avg_plies_white_wins,
        avg_plies_black_wins=stats.avg_plies_black_wins,
    )


def format_pit_table(reports: list[PitReport]) -> str:
    """Render pit reports with won-game counts and win-length averages."""
    lines = [
        f"{'':<16}{'Games Won':>20}{'Average # of Moves':>28}",
        f"{'Pit':<16}{'White':>10}{'Black':>10}{'White':>14}{'Black':>14}",
    ]
    for r in reports:
        avg_w = f"{r.avg_plies_white_wins:.1f}" if r.avg_plies_white_wins is not None else "-"
        avg_b = f"{r.avg_plies_black_wins:.1f}" if r.avg_plies_black_wins is not None else "-"
        lines.append(
            f"{r.label:<16}{r.white_wins:>10}{r.black_wins:>10}{avg_w:>14}{avg_b:>14}"
        )
    return "\n".join(lines)
