"""Rules engine for the corner-base board game.

The board is an n x n grid. White owns the a x a base in the lower-left
corner, Black the a x a base in the upper-right corner. Each side starts
with ``beta`` pawns inside its base. A pawn moves one square orthogonally
onto an empty non-base square, and its distance from its own base (the
maximum of the per-axis gaps to the base region, not the sum) must never
decrease. Moving a pawn into the opponent's base wins immediately. After
every other move, any pawn of either colour that has no move left is
removed, simultaneously, until no such pawn remains; a base with no empty
adjacent square loses all pawns still inside it. A side with no pawns at
all loses.

States are treated as immutable values: every operation returns a new
state and never touches its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

from .errors import ConfigError, ContractViolation, IllegalMoveError

Square = tuple[int, int]  # (x, y), zero-based from the white-base corner

_ORTHO = ((1, 0), (-1, 0), (0, 1), (0, -1))


class Player(Enum):
    WHITE = "white"
    BLACK = "black"

    @property
    def opponent(self) -> "Player":
        return Player.BLACK if self is Player.WHITE else Player.WHITE


class Status(Enum):
    ONGOING = "ongoing"
    WON = "won"
    ABORTED = "aborted"


class MoveKind(Enum):
    EXIT = "exit"
    STEP = "step"
    ENTER = "enter"


class Move(NamedTuple):
    """One legal action: leave the base, step, or enter the enemy base."""

    kind: MoveKind
    src: Optional[Square]  # None for EXIT
    dst: Optional[Square]  # None for ENTER


@dataclass(frozen=True)
class BoardConfig:
    """Static game parameters: board side, base side, pawns per player."""

    n: int = 8
    a: int = 2
    beta: int = 10

    def __post_init__(self) -> None:
        if self.a < 1:
            raise ConfigError(f"base side must be >= 1, got a={self.a}")
        if self.beta < 1:
            raise ConfigError(f"pawn count must be >= 1, got beta={self.beta}")
        if self.n < 2 * self.a + 2:
            raise ConfigError(
                f"board side {self.n} too small for base side {self.a}: "
                f"need n >= 2a+2 = {2 * self.a + 2}"
            )


@dataclass(frozen=True)
class MoveEvents:
    """What a move caused: removed pawns per side and the win, if any."""

    removed_white: tuple[Square, ...] = ()
    removed_black: tuple[Square, ...] = ()
    removed_base_white: int = 0
    removed_base_black: int = 0
    winner: Optional[Player] = None

    def removed_count(self, player: Player) -> int:
        if player is Player.WHITE:
            return len(self.removed_white) + self.removed_base_white
        return len(self.removed_black) + self.removed_base_black


class Geometry:
    """Precomputed per-(n, a) square tables shared by all states."""

    def __init__(self, n: int, a: int):
        self.n = n
        self.a = a
        white_base = {(x, y) for x in range(a) for y in range(a)}
        black_base = {(x, y) for x in range(n - a, n) for y in range(n - a, n)}
        self.base_squares = {Player.WHITE: white_base, Player.BLACK: black_base}
        all_base = white_base | black_base
        # Playable squares in row-major (y, then x) order; this fixes both
        # the canonical move ordering and the feature-slot layout.
        self.playable: tuple[Square, ...] = tuple(
            (x, y) for y in range(n) for x in range(n) if (x, y) not in all_base
        )
        self.playable_set = frozenset(self.playable)

        def white_dist(sq: Square) -> int:
            return max(0, sq[0] - (a - 1), sq[1] - (a - 1))

        def black_dist(sq: Square) -> int:
            return max(0, (n - a) - sq[0], (n - a) - sq[1])

        self.dist = {
            Player.WHITE: {sq: white_dist(sq) for sq in self.playable},
            Player.BLACK: {sq: black_dist(sq) for sq in self.playable},
        }

        # Squares orthogonally adjacent to each base region, canonical order.
        exits: dict[Player, tuple[Square, ...]] = {}
        for player, base in self.base_squares.items():
            adj = {
                (bx + dx, by + dy)
                for bx, by in base
                for dx, dy in _ORTHO
                if (bx + dx, by + dy) in self.playable_set
            }
            exits[player] = tuple(sorted(adj, key=lambda s: (s[1], s[0])))
        self.base_exits = exits
        # From a player's point of view: squares from which it can enter.
        self.enemy_adjacent = {
            Player.WHITE: frozenset(exits[Player.BLACK]),
            Player.BLACK: frozenset(exits[Player.WHITE]),
        }

        # For each player and square, the step destinations that keep the
        # distance from the own base non-decreasing, canonical order.
        self.steps_ok: dict[Player, dict[Square, tuple[Square, ...]]] = {}
        for player in Player:
            dist = self.dist[player]
            table: dict[Square, tuple[Square, ...]] = {}
            for sq in self.playable:
                x, y = sq
                cand = [
                    (x + dx, y + dy)
                    for dx, dy in _ORTHO
                    if (x + dx, y + dy) in self.playable_set
                    and dist[(x + dx, y + dy)] >= dist[sq]
                ]
                table[sq] = tuple(sorted(cand, key=lambda s: (s[1], s[0])))
            self.steps_ok[player] = table

        # Square -> feature index per perspective: White reads the board
        # row-major from its corner, Black reads the 180-degree rotation,
        # so slot k always means the same square relative to the own base.
        self.feature_slots: dict[Player, dict[Square, int]] = {
            Player.WHITE: {sq: i for i, sq in enumerate(self.playable)},
            Player.BLACK: {
                (n - 1 - sq[0], n - 1 - sq[1]): i for i, sq in enumerate(self.playable)
            },
        }

        # Playable orthogonal neighbours of each playable square.
        self.neighbours: dict[Square, tuple[Square, ...]] = {
            (x, y): tuple(
                (x + dx, y + dy)
                for dx, dy in _ORTHO
                if (x + dx, y + dy) in self.playable_set
            )
            for (x, y) in self.playable
        }

        # Plain-attribute aliases: the capture sweep and feature encoder run
        # per candidate move, where enum-keyed dict lookups show up.
        self.steps_white = self.steps_ok[Player.WHITE]
        self.steps_black = self.steps_ok[Player.BLACK]
        self.adjacent_white = self.enemy_adjacent[Player.WHITE]
        self.adjacent_black = self.enemy_adjacent[Player.BLACK]
        self.exits_white = self.base_exits[Player.WHITE]
        self.exits_black = self.base_exits[Player.BLACK]
        self.dist_white = self.dist[Player.WHITE]
        self.dist_black = self.dist[Player.BLACK]
        self.slots_white = self.feature_slots[Player.WHITE]
        self.slots_black = self.feature_slots[Player.BLACK]

    def in_base(self, sq: Square) -> bool:
        return sq in self.base_squares[Player.WHITE] or sq in self.base_squares[Player.BLACK]


@lru_cache(maxsize=None)
def geometry(n: int, a: int) -> Geometry:
    return Geometry(n, a)


class GameState:
    """Full position: pawn sets, base counts, side to move, status.

    Treat instances as immutable; ``apply_move`` and friends return fresh
    states. ``resolved`` records that the state is known to contain no
    immobile pawn (true for everything produced by ``new_game`` /
    ``apply_move``), which lets capture resolution skip the full-board
    sweep on the hot path. States assembled by hand default to unresolved.
    """

    __slots__ = (
        "config", "geo", "white", "black", "base_white", "base_black",
        "to_move", "ply", "status", "winner", "resolved",
    )

    def __init__(
        self,
        config: BoardConfig,
        white: set[Square],
        black: set[Square],
        base_white: int,
        base_black: int,
        to_move: Player = Player.WHITE,
        ply: int = 0,
        status: Status = Status.ONGOING,
        winner: Optional[Player] = None,
        resolved: bool = False,
    ):
        self.config = config
        self.geo = geometry(config.n, config.a)
        self.white = white
        self.black = black
        self.base_white = base_white
        self.base_black = base_black
        self.to_move = to_move
        self.ply = ply
        self.status = status
        self.winner = winner
        self.resolved = resolved

    def pawns(self, player: Player) -> set[Square]:
        return self.white if player is Player.WHITE else self.black

    def base_count(self, player: Player) -> int:
        return self.base_white if player is Player.WHITE else self.base_black

    def total_pawns(self, player: Player) -> int:
        return len(self.pawns(player)) + self.base_count(player)

    def occupant(self, sq: Square) -> Optional[Player]:
        if sq in self.white:
            return Player.WHITE
        if sq in self.black:
            return Player.BLACK
        return None

    def occupied(self, sq: Square) -> bool:
        return sq in self.white or sq in self.black

    def copy(self) -> "GameState":
        s = GameState.__new__(GameState)
        s.config = self.config
        s.geo = self.geo
        s.white = set(self.white)
        s.black = set(self.black)
        s.base_white = self.base_white
        s.base_black = self.base_black
        s.to_move = self.to_move
        s.ply = self.ply
        s.status = self.status
        s.winner = self.winner
        s.resolved = self.resolved
        return s

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameState):
            return NotImplemented
        return (
            self.config == other.config
            and self.white == other.white
            and self.black == other.black
            and self.base_white == other.base_white
            and self.base_black == other.base_black
            and self.to_move == other.to_move
            and self.ply == other.ply
            and self.status == other.status
            and self.winner == other.winner
        )

    def __repr__(self) -> str:
        return (
            f"GameState(n={self.config.n}, a={self.config.a}, ply={self.ply}, "
            f"to_move={self.to_move.value}, status={self.status.value}, "
            f"white={sorted(self.white)}+{self.base_white}b, "
            f"black={sorted(self.black)}+{self.base_black}b)"
        )


def new_game(config: BoardConfig) -> GameState:
    """Kickoff state: all pawns in their bases, White to move."""
    return GameState(
        config=config,
        white=set(),
        black=set(),
        base_white=config.beta,
        base_black=config.beta,
        resolved=True,
    )


def base_distance(config: BoardConfig, player: Player, sq: Square) -> int:
    """Distance of ``sq`` from ``player``'s base: max of the per-axis gaps."""
    return geometry(config.n, config.a).dist[player][sq]


def legal_moves(state: GameState) -> list[Move]:
    """All legal moves for the side to move, in canonical order.

    Order: ExitBase moves first (by destination), then Steps (by source,
    then destination), then EnterEnemyBase (by source); coordinates compare
    as (y, x). The order is part of the contract so tie-breaking downstream
    is reproducible.
    """
    if state.status is not Status.ONGOING:
        raise ContractViolation("legal_moves called on a terminal state")
    p = state.to_move
    geo = state.geo
    white, black = state.white, state.black
    moves: list[Move] = []
    if state.base_count(p) > 0:
        for dst in geo.base_exits[p]:
            if dst not in white and dst not in black:
                moves.append(Move(MoveKind.EXIT, None, dst))
    own = sorted(state.pawns(p), key=lambda s: (s[1], s[0]))
    steps_ok = geo.steps_ok[p]
    for src in own:
        for dst in steps_ok[src]:
            if dst not in white and dst not in black:
                moves.append(Move(MoveKind.STEP, src, dst))
    enemy_adj = geo.enemy_adjacent[p]
    for src in own:
        if src in enemy_adj:
            moves.append(Move(MoveKind.ENTER, src, None))
    return moves


def _validate(state: GameState, mv: Move) -> None:
    """Raise IllegalMoveError naming the violated rule, or return."""
    if state.status is not Status.ONGOING:
        raise IllegalMoveError("game-over")
    p = state.to_move
    geo = state.geo
    if mv.kind is MoveKind.EXIT:
        if state.base_count(p) == 0:
            raise IllegalMoveError("not-your-pawn", "no pawn left in the base")
        if mv.dst not in geo.base_exits[p]:
            raise IllegalMoveError("not-adjacent", f"{mv.dst} is not adjacent to your base")
        if state.occupied(mv.dst):
            raise IllegalMoveError("occupied", f"{mv.dst} is occupied")
    elif mv.kind is MoveKind.STEP:
        if mv.src not in state.pawns(p):
            raise IllegalMoveError("not-your-pawn", f"no own pawn on {mv.src}")
        if mv.dst not in geo.steps_ok[p].get(mv.src, ()):
            # Distinguish the geometric failure from the distance rule.
            x, y = mv.src
            if mv.dst not in {(x + dx, y + dy) for dx, dy in _ORTHO} or (
                mv.dst not in geo.playable_set
            ):
                raise IllegalMoveError("not-adjacent", f"{mv.src} -> {mv.dst}")
            raise IllegalMoveError(
                "distance-decrease", f"{mv.src} -> {mv.dst} moves back toward your base"
            )
        if state.occupied(mv.dst):
            raise IllegalMoveError("occupied", f"{mv.dst} is occupied")
    elif mv.kind is MoveKind.ENTER:
        if mv.src not in state.pawns(p):
            raise IllegalMoveError("not-your-pawn", f"no own pawn on {mv.src}")
        if mv.src not in geo.enemy_adjacent[p]:
            raise IllegalMoveError("not-adjacent", f"{mv.src} is not adjacent to the enemy base")
    else:  # pragma: no cover - NamedTuple kind is always a MoveKind
        raise IllegalMoveError("not-adjacent", f"unknown move kind {mv.kind}")


def _pawn_mobile(state: GameState, player: Player, sq: Square) -> bool:
    """A board pawn can move iff it has a step destination or can enter."""
    if sq in state.geo.enemy_adjacent[player]:
        return True
    white, black = state.white, state.black
    for nb in state.geo.steps_ok[player][sq]:
        if nb not in white and nb not in black:
            return True
    return False


def _base_sealed(state: GameState, player: Player) -> bool:
    white, black = state.white, state.black
    return all(sq in white or sq in black for sq in state.geo.base_exits[player])


_NO_EVENTS = MoveEvents()


def _resolve_in_place(
    state: GameState, first_candidates: Optional[tuple[Square, ...]] = None
) -> MoveEvents:
    """Remove immobile pawns of both sides to fixpoint, mutating ``state``.

    Each sweep first collects every removable pawn (and every base with no
    empty adjacent square), then removes them simultaneously; sweeps repeat
    until one removes nothing. ``first_candidates`` optionally restricts the
    first sweep to the squares whose occupants' mobility the last move could
    have changed; it may only be passed when the pre-move state had no
    immobile pawn, so the restriction is exact.
    """
    geo = state.geo
    white, black = state.white, state.black
    steps_w = geo.steps_white
    steps_b = geo.steps_black
    adj_w = geo.adjacent_white
    adj_b = geo.adjacent_black
    exits_w = geo.exits_white
    exits_b = geo.exits_black
    removed_w: list[Square] = []
    removed_b: list[Square] = []
    removed_base_w = 0
    removed_base_b = 0
    candidates = first_candidates
    while True:
        if candidates is None:
            pool_w: Iterable[Square] = white
            pool_b: Iterable[Square] = black
        else:
            pool_w = [sq for sq in candidates if sq in white]
            pool_b = [sq for sq in candidates if sq in black]
        doomed_w = []
        for sq in pool_w:
            if sq in adj_w:
                continue
            for nb in steps_w[sq]:
                if nb not in white and nb not in black:
                    break
            else:
                doomed_w.append(sq)
        doomed_b = []
        for sq in pool_b:
            if sq in adj_b:
                continue
            for nb in steps_b[sq]:
                if nb not in white and nb not in black:
                    break
            else:
                doomed_b.append(sq)
        seal_w = state.base_white > 0 and all(sq in white or sq in black for sq in exits_w)
        seal_b = state.base_black > 0 and all(sq in white or sq in black for sq in exits_b)
        if not (doomed_w or doomed_b or seal_w or seal_b):
            break
        for sq in doomed_w:
            white.discard(sq)
        for sq in doomed_b:
            black.discard(sq)
        removed_w += doomed_w
        removed_b += doomed_b
        if seal_w:
            removed_base_w += state.base_white
            state.base_white = 0
        if seal_b:
            removed_base_b += state.base_black
            state.base_black = 0
        candidates = None  # later sweeps rescan the whole board
    state.resolved = True
    if not (removed_w or removed_b or removed_base_w or removed_base_b):
        return _NO_EVENTS
    return MoveEvents(
        removed_white=tuple(sorted(removed_w, key=lambda s: (s[1], s[0]))),
        removed_black=tuple(sorted(removed_b, key=lambda s: (s[1], s[0]))),
        removed_base_white=removed_base_w,
        removed_base_black=removed_base_b,
    )


def resolve_immobility(state: GameState) -> tuple[GameState, MoveEvents]:
    """Remove every pawn with no move left, to fixpoint; idempotent."""
    if state.status is not Status.ONGOING:
        raise ContractViolation("resolve_immobility called on a terminal state")
    out = state.copy()
    events = _resolve_in_place(out)
    return out, events


def _local_candidates(state: GameState, dst: Square) -> tuple[Square, ...]:
    """Squares whose occupants' mobility filling ``dst`` could have revoked:
    the destination itself plus its playable orthogonal neighbours."""
    return (dst,) + state.geo.neighbours[dst]


def apply_move(state: GameState, mv: Move, *, trusted: bool = False) -> tuple[GameState, MoveEvents]:
    """Apply ``mv`` and resolve its consequences.

    Entering the enemy base wins on the spot (no capture pass: the winning
    pawn is left on its source square for the record). Any other move is
    followed by immobility resolution; a side left with no pawn at all
    loses. ``trusted`` skips validation for moves taken from
    ``legal_moves`` output.
    """
    if not trusted:
        _validate(state, mv)
    elif state.status is not Status.ONGOING:
        raise IllegalMoveError("game-over")
    p = state.to_move
    s = state.copy()
    s.ply += 1
    if mv.kind is MoveKind.ENTER:
        s.status = Status.WON
        s.winner = p
        return s, MoveEvents(winner=p)
    own = s.pawns(p)
    if mv.kind is MoveKind.EXIT:
        if p is Player.WHITE:
            s.base_white -= 1
        else:
            s.base_black -= 1
    else:
        own.discard(mv.src)
    own.add(mv.dst)
    first = _local_candidates(s, mv.dst) if state.resolved else None
    events = _resolve_in_place(s, first)
    opp = p.opponent
    if s.total_pawns(opp) == 0:
        s.status = Status.WON
        s.winner = p
        events = MoveEvents(
            events.removed_white, events.removed_black,
            events.removed_base_white, events.removed_base_black, winner=p,
        )
    elif s.total_pawns(p) == 0:
        # The mover wiped out its own last pawns; running out of pawns loses.
        s.status = Status.WON
        s.winner = opp
        events = MoveEvents(
            events.removed_white, events.removed_black,
            events.removed_base_white, events.removed_base_black, winner=opp,
        )
    else:
        s.to_move = opp
    return s, events


def mark_aborted(state: GameState) -> GameState:
    """Flag a game stopped at the move cap; aborted games leave win stats."""
    if state.status is not Status.ONGOING:
        raise ContractViolation("only an ongoing game can be aborted")
    s = state.copy()
    s.status = Status.ABORTED
    return s


# --- JSON wire helpers (game record serialization) -------------------------

def move_to_json(mv: Move) -> dict:
    if mv.kind is MoveKind.EXIT:
        return {"kind": "exit", "dst": list(mv.dst)}
    if mv.kind is MoveKind.STEP:
        return {"kind": "step", "src": list(mv.src), "dst": list(mv.dst)}
    return {"kind": "enter", "src": list(mv.src)}


def move_from_json(obj: dict) -> Move:
    kind = obj.get("kind")
    if kind == "exit":
        return Move(MoveKind.EXIT, None, tuple(obj["dst"]))
    if kind == "step":
        return Move(MoveKind.STEP, tuple(obj["src"]), tuple(obj["dst"]))
    if kind == "enter":
        return Move(MoveKind.ENTER, tuple(obj["src"]), None)
    raise ValueError(f"unknown move kind {kind!r}")


def events_to_json(ev: MoveEvents) -> dict:
    return {
        "removed_white": [list(sq) for sq in ev.removed_white],
        "removed_black": [list(sq) for sq in ev.removed_black],
        "removed_base_white": ev.removed_base_white,
        "removed_base_black": ev.removed_base_black,
        "winner": ev.winner.value if ev.winner else None,
    }


def events_from_json(obj: dict) -> MoveEvents:
    winner = obj.get("winner")
    return MoveEvents(
        removed_white=tuple(tuple(sq) for sq in obj["removed_white"]),
        removed_black=tuple(tuple(sq) for sq in obj["removed_black"]),
        removed_base_white=obj["removed_base_white"],
        removed_base_black=obj["removed_base_black"],
        winner=Player(winner) if winner else None,
    )
