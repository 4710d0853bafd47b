"""Move selection, reward schemes, scripted white policies, and the
single-game play/learn loop.

Both players keep their own network and learn only from their own
afterstate sequence. Moves are picked greedily over afterstate values with
probability ``epsilon_best`` and uniformly at random otherwise. A scripted
or live human always plays White; its moves still drive updates to the
white network unless learning is switched off for that seat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import ContractViolation
from .game import (
    BoardConfig, GameState, Move, MoveEvents, MoveKind, Player, Status,
    apply_move, events_from_json, events_to_json, legal_moves, mark_aborted,
    move_from_json, move_to_json, new_game,
)
from .net import (
    TDParams, ValueNetwork, WEIGHT_ALARM, check_weights, encode_features,
    reset_traces, td_step,
)

TERMINAL_REWARD = 100.0


@dataclass(frozen=True)
class RewardScheme:
    """One of the three reward types.

    All schemes pay +/-100 at the end. Scheme r1 adds +/-2 when a move
    parks a pawn next to the enemy base (being one move from winning, or
    from losing when it is the opponent's pawn). Every scheme pays the
    scaled pawn-count difference on any move that removed pawns; r3 scales
    it by 100 so material aligns with the terminal stakes.
    """

    kind: str  # "r1" | "r2" | "r3"

    def __post_init__(self) -> None:
        if self.kind not in ("r1", "r2", "r3"):
            raise ContractViolation(f"unknown reward scheme {self.kind!r}")

    @property
    def adjacency_bonus(self) -> float:
        return 2.0 if self.kind == "r1" else 0.0

    @property
    def pawn_diff_scale(self) -> float:
        return 100.0 if self.kind == "r3" else 1.0


def _adjacent_count(state: GameState, player: Player) -> int:
    adj = state.geo.enemy_adjacent[player]
    return sum(1 for sq in state.pawns(player) if sq in adj)


def compute_rewards(
    scheme: RewardScheme,
    prev: GameState,
    mv: Move,
    nxt: GameState,
    events: MoveEvents,
) -> tuple[float, float]:
    """Per-player rewards for one transition; components are additive."""
    r = {Player.WHITE: 0.0, Player.BLACK: 0.0}
    if nxt.status is Status.WON:
        r[nxt.winner] += TERMINAL_REWARD
        r[nxt.winner.opponent] -= TERMINAL_REWARD
    if scheme.adjacency_bonus:
        for p in Player:
            if _adjacent_count(nxt, p) > _adjacent_count(prev, p):
                r[p] += scheme.adjacency_bonus
                r[p.opponent] -= scheme.adjacency_bonus
    if (
        events.removed_white or events.removed_black
        or events.removed_base_white or events.removed_base_black
    ):
        beta = prev.config.beta
        scale = scheme.pawn_diff_scale
        diff = (nxt.total_pawns(Player.WHITE) - nxt.total_pawns(Player.BLACK)) / beta
        r[Player.WHITE] += scale * diff
        r[Player.BLACK] -= scale * diff
    return r[Player.WHITE], r[Player.BLACK]


class MoveChoice(NamedTuple):
    """A chosen move plus, when the chooser computed it, the afterstate."""

    move: Move
    after: Optional[GameState]
    events: Optional[MoveEvents]
    greedy: Optional[bool]  # None when the choice was not epsilon-greedy


def choose_move(
    state: GameState,
    net: ValueNetwork,
    params: TDParams,
    rng: np.random.Generator,
) -> MoveChoice:
    """Epsilon-greedy over afterstate values, with the branch observable.

    The greedy/random decision is drawn first. The greedy branch evaluates
    every legal move's afterstate from the mover's perspective and breaks
    exact value ties uniformly; the random branch picks uniformly over all
    legal moves without evaluating the network.
    """
    moves = legal_moves(state)
    if not moves:
        raise ContractViolation("no legal moves; resolution should have ended the game")
    p = state.to_move
    greedy = bool(rng.random() < params.epsilon_best)
    if not greedy:
        idx = int(rng.integers(len(moves)))
        after, events = apply_move(state, moves[idx], trusted=True)
        return MoveChoice(moves[idx], after, events, False)
    afters = [apply_move(state, mv, trusted=True) for mv in moves]
    xs = np.array([encode_features(a, p) for a, _ in afters])
    values = net.values(xs)
    best = values.max()
    ties = np.flatnonzero(values == best)
    idx = int(ties[0]) if len(ties) == 1 else int(ties[rng.integers(len(ties))])
    after, events = afters[idx]
    return MoveChoice(moves[idx], after, events, True)


def select_move(
    state: GameState,
    net: ValueNetwork,
    params: TDParams,
    rng: np.random.Generator,
) -> Move:
    return choose_move(state, net, params, rng).move


# --- scripted white policies -------------------------------------------------

@dataclass(frozen=True)
class ScriptedPolicy:
    """p1 runs for the enemy base; p3 sabotages; p2 sabotages until Black
    has won ``grace_wins`` games this session, then runs."""

    kind: str  # "p1" | "p2" | "p3"
    grace_wins: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("p1", "p2", "p3"):
            raise ContractViolation(f"unknown scripted policy {self.kind!r}")


@dataclass
class SessionCounters:
    """Per-session tallies the scripted policies consult."""

    black_wins: int = 0
    white_wins: int = 0
    games_played: int = 0


def scripted_move(
    policy: ScriptedPolicy,
    state: GameState,
    counters: Optional[SessionCounters] = None,
) -> Move:
    """The bound policy's move for the current position; always legal."""
    if policy.kind == "p1":
        return runner_move(state)
    if policy.kind == "p2":
        wins = counters.black_wins if counters else 0
        if wins >= policy.grace_wins:
            return runner_move(state)
        return saboteur_move(state)
    return saboteur_move(state)


def runner_move(state: GameState) -> Move:
    """March one pawn north along the left file, then east, and enter the
    enemy base by its left vertical edge; falls back to sideways progress,
    then to any legal move, when the preferred square is blocked.

    The designated runner is the most advanced white pawn, which under
    undisturbed play is the single pawn this policy ever fields.
    """
    if state.to_move is not Player.WHITE:
        raise ContractViolation("the runner policy plays the white side")
    moves = legal_moves(state)
    legal_set = set(moves)
    n, a = state.config.n, state.config.a
    corner = n - a - 1  # last file/rank before the enemy base's shell
    if not state.white:
        preferred = Move(MoveKind.EXIT, None, (0, a))
        if preferred in legal_set:
            return preferred
        for mv in moves:
            if mv.kind is MoveKind.EXIT:
                return mv
        return moves[0]
    runner = max(state.white, key=lambda q: (q[0] + q[1], q[1], q[0]))
    enter = Move(MoveKind.ENTER, runner, None)
    if enter in legal_set:
        return enter
    rx, ry = runner
    if ry < corner:
        prefs = [(rx, ry + 1), (rx + 1, ry), (rx - 1, ry)]
    elif rx < corner:
        prefs = [(rx + 1, ry), (rx, ry + 1), (rx, ry - 1)]
    else:
        prefs = [(rx, ry + 1), (rx + 1, ry)]
    for dst in prefs:
        mv = Move(MoveKind.STEP, runner, dst)
        if mv in legal_set:
            return mv
    for mv in moves:
        if mv.kind is MoveKind.STEP and mv.src == runner:
            return mv
    return moves[0]


def saboteur_move(state: GameState) -> Move:
    """Deliberately avoid winning: never enter, never park next to the
    enemy base, and otherwise make the least progress the rules allow."""
    moves = legal_moves(state)
    p = state.to_move
    geo = state.geo
    enemy_adj = geo.enemy_adjacent[p]
    dist = geo.dist[p]
    best = None
    best_key = None
    for i, mv in enumerate(moves):
        if mv.kind is MoveKind.ENTER:
            continue
        creates = 1 if mv.dst in enemy_adj else 0
        advance = 1 if mv.kind is MoveKind.EXIT else dist[mv.dst] - dist[mv.src]
        key = (creates, advance, i)
        if best_key is None or key < best_key:
            best_key = key
            best = mv
    if best is None:
        return moves[0]  # only winning moves remain; totality wins over sabotage
    return best


# --- movers and the play loop ------------------------------------------------

class RLMover:
    """Plays with its own network, epsilon-greedily."""

    def __init__(self, learn: bool = True):
        self.learn = learn

    def choose(self, state, net, params, rng) -> MoveChoice:
        if net is None:
            raise ContractViolation("an RL mover needs a network")
        return choose_move(state, net, params, rng)


class ScriptedMover:
    """Plays a scripted white policy; the seat's network may still learn."""

    def __init__(
        self,
        policy: ScriptedPolicy,
        counters: Optional[SessionCounters] = None,
        learn: bool = True,
    ):
        self.policy = policy
        self.counters = counters
        self.learn = learn

    def choose(self, state, net, params, rng) -> MoveChoice:
        return MoveChoice(scripted_move(self.policy, state, self.counters), None, None, None)


class ProviderMover:
    """Pulls moves from a callable; used for live human play and replays."""

    def __init__(self, provider: Callable[[GameState], Move], learn: bool = True):
        self.provider = provider
        self.learn = learn

    def choose(self, state, net, params, rng) -> MoveChoice:
        return MoveChoice(self.provider(state), None, None, None)


def mover_from_spec(
    spec: Mapping,
    counters: Optional[SessionCounters] = None,
    provider: Optional[Callable[[GameState], Move]] = None,
):
    """Build a mover from an agent-spec mapping
    ({"kind": "rl"|"scripted"|"human", "policy": ..., "learn": ...})."""
    kind = spec.get("kind", "rl")
    learn = bool(spec.get("learn", True))
    if kind == "rl":
        return RLMover(learn=learn)
    if kind == "scripted":
        return ScriptedMover(ScriptedPolicy(spec["policy"]), counters, learn=learn)
    if kind == "human":
        if provider is None:
            raise ContractViolation("a human seat needs an interactive session")
        return ProviderMover(provider, learn=learn)
    raise ContractViolation(f"unknown agent kind {kind!r}")


@dataclass
class GameRecord:
    """One game: everything needed to recompute stats or replay updates."""

    config: BoardConfig
    moves: list[Move] = field(default_factory=list)
    events: list[MoveEvents] = field(default_factory=list)
    rewards: list[tuple[float, float]] = field(default_factory=list)
    result: str = "aborted"  # "white" | "black" | "aborted"
    plies: int = 0


def play_game(
    config: BoardConfig,
    white,
    black,
    nets: Mapping[Player, Optional[ValueNetwork]],
    traces: Mapping[Player, Optional[dict]],
    scheme: RewardScheme,
    params: TDParams,
    rng: np.random.Generator,
    max_plies: int = 1000,
    observer: Optional[Callable] = None,
    weight_alarm: float = WEIGHT_ALARM,
) -> GameRecord:
    """Play one game from kickoff, updating each learning seat's network.

    A seat learns when its mover says so and it has a network and traces.
    Rewards accumulate between a seat's own moves (so the opponent's reply
    is folded into the next update); at the end both learners flush a
    terminal update with v_next = 0. Games that hit ``max_plies`` are
    recorded as aborted and trigger no terminal update.
    """
    movers = {Player.WHITE: white, Player.BLACK: black}
    learning = {
        p: bool(movers[p].learn and nets.get(p) is not None and traces.get(p) is not None)
        for p in Player
    }
    state = new_game(config)
    x_last: dict[Player, np.ndarray] = {}
    acc = {Player.WHITE: 0.0, Player.BLACK: 0.0}
    for p in Player:
        if learning[p]:
            reset_traces(traces[p])
            x_last[p] = encode_features(state, p)
    record = GameRecord(config)
    while state.status is Status.ONGOING and state.ply < max_plies:
        p = state.to_move
        choice = movers[p].choose(state, nets.get(p), params, rng)
        if choice.after is not None:
            nxt, events = choice.after, choice.events
        else:
            nxt, events = apply_move(state, choice.move)
        r_w, r_b = compute_rewards(scheme, state, choice.move, nxt, events)
        acc[Player.WHITE] += r_w
        acc[Player.BLACK] += r_b
        record.moves.append(choice.move)
        record.events.append(events)
        record.rewards.append((r_w, r_b))
        if observer is not None:
            observer(state, choice.move, events, nxt)
        if nxt.status is Status.WON:
            for q in Player:
                if learning[q]:
                    td_step(nets[q], traces[q], params, x_last[q], acc[q], 0.0, True)
                    acc[q] = 0.0
            state = nxt
            break
        if learning[p]:
            x_cur = encode_features(nxt, p)
            v_next = nets[p].value(x_cur)
            td_step(nets[p], traces[p], params, x_last[p], acc[p], v_next, False)
            x_last[p] = x_cur
            acc[p] = 0.0
        state = nxt
    if state.status is Status.ONGOING:
        state = mark_aborted(state)
    for q in Player:
        if learning[q]:
            check_weights(nets[q], weight_alarm)
    record.result = state.winner.value if state.status is Status.WON else "aborted"
    record.plies = state.ply
    return record


# --- game record JSON --------------------------------------------------------

def record_to_json(rec: GameRecord) -> dict:
    return {
        "config": {"n": rec.config.n, "a": rec.config.a, "beta": rec.config.beta},
        "moves": [move_to_json(mv) for mv in rec.moves],
        "events": [events_to_json(ev) for ev in rec.events],
        "rewards": [list(r) for r in rec.rewards],
        "result": rec.result,
        "plies": rec.plies,
    }


def record_from_json(obj: dict) -> GameRecord:
    return GameRecord(
        config=BoardConfig(**obj["config"]),
        moves=[move_from_json(m) for m in obj["moves"]],
        events=[events_from_json(e) for e in obj["events"]],
        rewards=[tuple(r) for r in obj["rewards"]],
        result=obj["result"],
        plies=obj["plies"],
    )
