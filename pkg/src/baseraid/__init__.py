"""Self-play TD(lambda) workbench for the corner-base board game."""

from .game import (
    BoardConfig, GameState, Move, MoveEvents, MoveKind, Player, Status,
    apply_move, base_distance, legal_moves, new_game, resolve_immobility,
)
from .net import (
    NetworkTopology, TDParams, ValueNetwork, encode_features, forward,
    gradient, init_network, load_snapshot, make_traces, reset_traces,
    save_snapshot, td_step,
)
from .agents import (
    GameRecord, RewardScheme, ScriptedPolicy, SessionCounters, choose_move,
    compute_rewards, play_game, scripted_move, select_move,
)
from .harness import (
    BatchSpec, PitReport, StageSpec, StageStats, compute_stats,
    cross_evaluate, export_csv, load_plan, run_batch, run_plan,
)

__all__ = [
    "BoardConfig", "GameState", "Move", "MoveEvents", "MoveKind", "Player",
    "Status", "apply_move", "base_distance", "legal_moves", "new_game",
    "resolve_immobility",
    "NetworkTopology", "TDParams", "ValueNetwork", "encode_features",
    "forward", "gradient", "init_network", "load_snapshot", "make_traces",
    "reset_traces", "save_snapshot", "td_step",
    "GameRecord", "RewardScheme", "ScriptedPolicy", "SessionCounters",
    "choose_move", "compute_rewards", "play_game", "scripted_move",
    "select_move",
    "BatchSpec", "PitReport", "StageSpec", "StageStats", "compute_stats",
    "cross_evaluate", "export_csv", "load_plan", "run_batch", "run_plan",
]
