"""Shared fixtures, random-state builders, and the acceptance summary hook."""

from __future__ import annotations

import random

import pytest

from baseraid.game import (
    BoardConfig, GameState, Player, Status, apply_move, legal_moves, new_game,
)

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[nodeid]
        mark = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"[{mark}] {nodeid.split('::')[-1]}")


def random_playout_states(config: BoardConfig, seed: int, n_states: int, max_plies: int = 200):
    """Sample reachable states by replaying random legal moves from kickoff.

    Yields every intermediate ongoing state until ``n_states`` have been
    produced, restarting a fresh game whenever one ends.
    """
    rng = random.Random(seed)
    produced = 0
    while produced < n_states:
        state = new_game(config)
        for _ in range(max_plies):
            if state.status is not Status.ONGOING:
                break
            yield state
            produced += 1
            if produced >= n_states:
                return
            moves = legal_moves(state)
            state, _ = apply_move(state, moves[rng.randrange(len(moves))], trusted=True)


def random_synthetic_state(config: BoardConfig, rng: random.Random) -> GameState:
    """Assemble an arbitrary (not necessarily reachable) position.

    Pawns land on random playable squares and base counts are random, so
    immobile pawns and sealed bases do occur; totals stay within beta.
    """
    geo_squares = list(new_game(config).geo.playable)
    rng.shuffle(geo_squares)
    beta = config.beta
    n_white = rng.randint(0, beta)
    n_black = rng.randint(0, beta)
    white = set(geo_squares[:n_white])
    black = set(geo_squares[n_white:n_white + n_black])
    return GameState(
        config=config,
        white=white,
        black=black,
        base_white=rng.randint(0, beta - n_white),
        base_black=rng.randint(0, beta - n_black),
        to_move=rng.choice([Player.WHITE, Player.BLACK]),
        ply=rng.randint(0, 50),
    )


@pytest.fixture
def default_config() -> BoardConfig:
    return BoardConfig(8, 2, 10)


@pytest.fixture
def small_config() -> BoardConfig:
    return BoardConfig(6, 1, 3)
