"""Per-player value network and its TD(lambda) learning rule.

One fixed two-layer shape: n^2 - 2a^2 + 10 inputs (one per non-base square
plus ten summary slots), half as many sigmoid hidden units, one linear
output read as the prospect of winning. Gradients are hand-derived; traces
are per-weight accumulators decayed by gamma*lambda each backed-up step.

The TD update is written against a small duck-typed model surface
(``weights`` dict, ``value``, ``gradient``) so the same update code can be
exercised on degenerate one-weight models in tests.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ContractViolation, NumericFault
from .game import BoardConfig, GameState, Player

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence]

AUX_SLOTS = 10
WEIGHT_ALARM = 1e6  # |weight| beyond this is treated as a numeric fault


@dataclass(frozen=True)
class NetworkTopology:
    """Layer sizes; derive from a board with :meth:`for_board`."""

    inputs: int
    hidden: int
    outputs: int = 1

    def __post_init__(self) -> None:
        if self.inputs < 1 or self.hidden < 1 or self.outputs != 1:
            raise ConfigError(f"bad topology {self}")

    @classmethod
    def for_board(cls, config: BoardConfig) -> "NetworkTopology":
        inputs = config.n ** 2 - 2 * config.a ** 2 + AUX_SLOTS
        return cls(inputs=inputs, hidden=math.ceil(inputs / 2))


@dataclass(frozen=True)
class TDParams:
    """Learning constants; lambda and the greedy probability follow the
    defaults the training protocol fixes, the rest is configurable."""

    lam: float = 0.5
    gamma: float = 1.0
    alpha: float = 0.01
    epsilon_best: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be in [0,1], got {self.lam}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in (0,1], got {self.gamma}")
        if self.alpha <= 0.0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.epsilon_best <= 1.0:
            raise ConfigError(f"epsilon_best must be in [0,1], got {self.epsilon_best}")


class ValueNetwork:
    """Two-layer feed-forward approximator: sigmoid hidden, identity out."""

    __slots__ = ("topology", "weights")

    def __init__(self, topology: NetworkTopology, weights: dict[str, np.ndarray]):
        self.topology = topology
        self.weights = weights

    def value(self, x: np.ndarray) -> float:
        w = self.weights
        if x.shape != (self.topology.inputs,):
            raise ContractViolation(
                f"input shape {x.shape}, expected ({self.topology.inputs},)"
            )
        h = expit(w["w_ih"] @ x + w["b_h"])
        return float(w["w_ho"] @ h + w["b_o"])

    def values(self, xs: np.ndarray) -> np.ndarray:
        """Batched forward pass over rows of ``xs``."""
        w = self.weights
        if xs.ndim != 2 or xs.shape[1] != self.topology.inputs:
            raise ContractViolation(
                f"input shape {xs.shape}, expected (*, {self.topology.inputs})"
            )
        h = expit(xs @ w["w_ih"].T + w["b_h"])
        return h @ w["w_ho"] + float(w["b_o"])

    def gradient(self, x: np.ndarray) -> dict[str, np.ndarray]:
        w = self.weights
        if x.shape != (self.topology.inputs,):
            raise ContractViolation(
                f"input shape {x.shape}, expected ({self.topology.inputs},)"
            )
        h = expit(w["w_ih"] @ x + w["b_h"])
        dh = w["w_ho"] * h * (1.0 - h)
        return {
            "w_ih": np.outer(dh, x),
            "b_h": dh,
            "w_ho": h,
            "b_o": np.ones(()),
        }

    def copy(self) -> "ValueNetwork":
        return ValueNetwork(self.topology, {k: v.copy() for k, v in self.weights.items()})

    def max_abs_weight(self) -> float:
        return max(float(np.max(np.abs(v))) if v.size else 0.0 for v in self.weights.values())


def init_network(topology: NetworkTopology, seed: SeedLike) -> ValueNetwork:
    """Fresh network, weights uniform in [-0.1, 0.1]; same seed, same bits.

    Near-zero weights make every position start out near-equal in value.
    """
    rng = np.random.default_rng(seed)
    lo, hi = -0.1, 0.1
    weights = {
        "w_ih": rng.uniform(lo, hi, (topology.hidden, topology.inputs)),
        "b_h": rng.uniform(lo, hi, topology.hidden),
        "w_ho": rng.uniform(lo, hi, topology.hidden),
        "b_o": rng.uniform(lo, hi, ()),
    }
    return ValueNetwork(topology, weights)


def forward(net: ValueNetwork, x: np.ndarray) -> float:
    return net.value(x)


def gradient(net: ValueNetwork, x: np.ndarray) -> dict[str, np.ndarray]:
    return net.gradient(x)


def make_traces(model) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in model.weights.items()}


def reset_traces(traces: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    for v in traces.values():
        v[...] = 0.0
    return traces


def td_step(
    model,
    traces: dict[str, np.ndarray],
    params: TDParams,
    x_prev: np.ndarray,
    reward: float,
    v_next: float,
    terminal: bool,
) -> tuple[object, dict[str, np.ndarray]]:
    """One backed-up TD(lambda) update, in place.

    delta = reward + gamma*v_next - V(x_prev) (v_next dropped on terminal
    steps); traces decay by gamma*lambda then absorb the current gradient;
    every weight moves by alpha*delta along its trace.
    """
    if not (math.isfinite(reward) and math.isfinite(v_next)):
        raise NumericFault(f"non-finite TD inputs: reward={reward}, v_next={v_next}")
    v_prev = model.value(x_prev)
    if not math.isfinite(v_prev):
        raise NumericFault("network produced a non-finite value; weights corrupted")
    target = reward if terminal else reward + params.gamma * v_next
    delta = target - v_prev
    grads = model.gradient(x_prev)
    decay = params.gamma * params.lam
    step = params.alpha * delta
    for key, e in traces.items():
        e *= decay
        e += grads[key]
        model.weights[key] += step * e
    return model, traces


def check_weights(net: ValueNetwork, alarm: float = WEIGHT_ALARM) -> None:
    """Raise NumericFault if any weight is non-finite or past the alarm."""
    for key, v in net.weights.items():
        if not np.all(np.isfinite(v)):
            raise NumericFault(f"non-finite weights in {key}")
    worst = net.max_abs_weight()
    if worst > alarm:
        raise NumericFault(f"weight magnitude {worst:.3e} exceeds alarm {alarm:.0e}")


# --- feature encoding -------------------------------------------------------

def encode_features(state: GameState, perspective: Player) -> np.ndarray:
    """Board seen from one player's side, as the network's input vector.

    One slot per non-base square (+1 own pawn, -1 opponent, 0 empty),
    enumerated in the perspective player's own frame so that a
    colour-swapped mirror position encodes identically for the other side.
    Ten summary slots follow, all within [-1, 1]: base and board pawn
    counts for both sides, the total-pawn difference, pawns parked next to
    either base, how close the best own pawn is to the enemy base, whose
    turn it is, and a constant bias.
    """
    geo = state.geo
    config = state.config
    if perspective is Player.WHITE:
        own_pawns, opp_pawns = state.white, state.black
        own_base, opp_base = state.base_white, state.base_black
        slots = geo.slots_white
        enemy_adj = geo.adjacent_white
        opp_near = geo.adjacent_black
        dist_to_enemy = geo.dist_black
    else:
        own_pawns, opp_pawns = state.black, state.white
        own_base, opp_base = state.base_black, state.base_white
        slots = geo.slots_black
        enemy_adj = geo.adjacent_black
        opp_near = geo.adjacent_white
        dist_to_enemy = geo.dist_white
    base = len(geo.playable)
    vec = np.zeros(base + AUX_SLOTS)
    for sq in own_pawns:
        vec[slots[sq]] = 1.0
    for sq in opp_pawns:
        vec[slots[sq]] = -1.0

    beta = config.beta
    n_own = len(own_pawns)
    n_opp = len(opp_pawns)
    own_adj = 0
    nearest = config.n  # larger than any reachable distance
    for sq in own_pawns:
        if sq in enemy_adj:
            own_adj += 1
        d = dist_to_enemy[sq]
        if d < nearest:
            nearest = d
    opp_adj = 0
    for sq in opp_pawns:
        if sq in opp_near:
            opp_adj += 1
    cap = 4 * config.a
    closeness = 1.0 - nearest / (config.n - config.a) if n_own else 0.0

    vec[base:] = (
        own_base / beta,
        opp_base / beta,
        n_own / beta,
        n_opp / beta,
        ((own_base + n_own) - (opp_base + n_opp)) / beta,
        min(own_adj / cap, 1.0),
        min(opp_adj / cap, 1.0),
        closeness,
        1.0 if state.to_move is perspective else -1.0,
        1.0,
    )
    return vec


# --- snapshot files ---------------------------------------------------------

SNAPSHOT_FORMAT = "valuenet-v1"


def save_snapshot(
    net: ValueNetwork,
    board: BoardConfig,
    path: str,
    provenance: Optional[dict] = None,
) -> None:
    """Write the network as JSON with full round-trip float precision."""
    payload = {
        "format": SNAPSHOT_FORMAT,
        "board": {"n": board.n, "a": board.a, "beta": board.beta},
        "topology": {"inputs": net.topology.inputs, "hidden": net.topology.hidden},
        "activation": {"hidden": "sigmoid", "output": "identity"},
        "w_ih": net.weights["w_ih"].tolist(),
        "b_h": net.weights["b_h"].tolist(),
        "w_ho": net.weights["w_ho"].tolist(),
        "b_o": float(net.weights["b_o"]),
        "provenance": provenance or {},
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def load_snapshot(path: str, board: Optional[BoardConfig] = None) -> tuple[ValueNetwork, BoardConfig, dict]:
    """Load a snapshot, checking its topology against the board it claims."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != SNAPSHOT_FORMAT:
        raise ConfigError(f"{path}: unknown snapshot format {payload.get('format')!r}")
    saved_board = BoardConfig(**payload["board"])
    if board is not None and board != saved_board:
        raise ConfigError(
            f"{path}: snapshot board {saved_board} does not match expected {board}"
        )
    topology = NetworkTopology(**payload["topology"])
    expected = NetworkTopology.for_board(saved_board)
    if topology != expected:
        raise ConfigError(
            f"{path}: topology {topology} inconsistent with board {saved_board} "
            f"(expected {expected})"
        )
    weights = {
        "w_ih": np.asarray(payload["w_ih"], dtype=np.float64),
        "b_h": np.asarray(payload["b_h"], dtype=np.float64),
        "w_ho": np.asarray(payload["w_ho"], dtype=np.float64),
        "b_o": np.asarray(payload["b_o"], dtype=np.float64),
    }
    if weights["w_ih"].shape != (topology.hidden, topology.inputs) or (
        weights["b_h"].shape != (topology.hidden,)
        or weights["w_ho"].shape != (topology.hidden,)
        or weights["b_o"].shape != ()
    ):
        raise ConfigError(f"{path}: weight arrays do not match the declared topology")
    return ValueNetwork(topology, weights), saved_board, payload.get("provenance", {})


def weights_digest(net: ValueNetwork) -> str:
    """Stable hash of the weight values only (no provenance)."""
    import hashlib

    blob = json.dumps(
        {
            "w_ih": net.weights["w_ih"].tolist(),
            "b_h": net.weights["b_h"].tolist(),
            "w_ho": net.weights["w_ho"].tolist(),
            "b_o": float(net.weights["b_o"]),
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()
