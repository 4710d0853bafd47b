"""Value network tests: topology, forward/gradient, TD updates, snapshots."""

from __future__ import annotations

import random

import numpy as np
import pytest

from baseraid.errors import ConfigError, ContractViolation, NumericFault
from baseraid.game import BoardConfig, GameState, Player, new_game
from baseraid.net import (
    NetworkTopology, TDParams, ValueNetwork, check_weights, encode_features,
    forward, gradient, init_network, load_snapshot, make_traces,
    reset_traces, save_snapshot, td_step, weights_digest,
)
from oracles import straight_line_value
from conftest import random_playout_states


class LinearModel:
    """One-weight linear value V(x) = w * x, for exercising td_step."""

    def __init__(self, w: float = 0.0):
        self.weights = {"w": np.array([float(w)])}

    def value(self, x) -> float:
        return float(self.weights["w"] @ x)

    def gradient(self, x):
        return {"w": np.asarray(x, dtype=float).copy()}


def finite_difference(net: ValueNetwork, x: np.ndarray, h: float = 1e-5):
    """Central-difference partials for every weight, straight off V."""
    out = {}
    for key, arr in net.weights.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = net.value(x)
            flat[i] = orig - h
            down = net.value(x)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out[key] = g
    return out


def test_topology_formula_default_board():
    topo = NetworkTopology.for_board(BoardConfig(8, 2, 10))
    assert topo.inputs == 66
    assert topo.hidden == 33
    assert topo.outputs == 1


@pytest.mark.parametrize("n,a", [(6, 1), (8, 2), (10, 3), (12, 2), (9, 2)])
def test_topology_formula_general(n, a):
    topo = NetworkTopology.for_board(BoardConfig(n, a, 1))
    assert topo.inputs == n * n - 2 * a * a + 10
    assert topo.hidden == -(-topo.inputs // 2)  # ceil division


def test_topology_rejects_nonsense():
    with pytest.raises(ConfigError):
        NetworkTopology(inputs=0, hidden=5)
    with pytest.raises(ConfigError):
        NetworkTopology(inputs=10, hidden=5, outputs=2)


def test_init_is_deterministic():
    topo = NetworkTopology(66, 33)
    a = init_network(topo, 42)
    b = init_network(topo, 42)
    for key in a.weights:
        assert np.array_equal(a.weights[key], b.weights[key])
    c = init_network(topo, 43)
    assert not np.array_equal(a.weights["w_ih"], c.weights["w_ih"])


def test_init_weights_in_range():
    net = init_network(NetworkTopology(66, 33), 7)
    for arr in net.weights.values():
        assert np.all(np.abs(arr) <= 0.1)


def test_fresh_network_values_nearly_uniform():
    # Envelope measured over 12 seeds x 1000 random reachable states per
    # perspective: worst spread 0.119. Pinned with margin, well under 0.5.
    config = BoardConfig(8, 2, 10)
    net = init_network(NetworkTopology.for_board(config), 3)
    values = []
    for state in random_playout_states(config, seed=103, n_states=1000):
        values.append(net.value(encode_features(state, Player.WHITE)))
    assert max(values) - min(values) < 0.2


def test_forward_zero_network():
    topo = NetworkTopology(66, 33)
    net = ValueNetwork(topo, {
        "w_ih": np.zeros((33, 66)), "b_h": np.zeros(33),
        "w_ho": np.zeros(33), "b_o": np.zeros(()),
    })
    assert forward(net, np.random.default_rng(0).normal(size=66)) == 0.0


def test_forward_single_hidden_unit_hand_value():
    topo = NetworkTopology(inputs=4, hidden=1)
    net = ValueNetwork(topo, {
        "w_ih": np.zeros((1, 4)), "b_h": np.zeros(1),
        "w_ho": np.array([2.0]), "b_o": np.array(1.0),
    })
    x = np.array([0.3, -1.0, 0.5, 0.0])
    assert forward(net, x) == pytest.approx(1.0 + 2.0 * 0.5, abs=1e-15)


def test_forward_matches_straight_line_oracle():
    rng = np.random.default_rng(11)
    for _ in range(5):
        topo = NetworkTopology(17, 9)
        net = init_network(topo, int(rng.integers(1 << 30)))
        x = rng.uniform(-1, 1, topo.inputs)
        expected = straight_line_value(
            net.weights["w_ih"], net.weights["b_h"],
            net.weights["w_ho"], net.weights["b_o"], x,
        )
        assert forward(net, x) == pytest.approx(expected, abs=1e-12)


def test_forward_shape_mismatch():
    net = init_network(NetworkTopology(10, 5), 1)
    with pytest.raises(ContractViolation):
        forward(net, np.zeros(11))
    with pytest.raises(ContractViolation):
        net.values(np.zeros((3, 11)))


def test_gradient_output_bias_is_one():
    net = init_network(NetworkTopology(12, 6), 5)
    g = gradient(net, np.random.default_rng(5).uniform(-1, 1, 12))
    assert float(g["b_o"]) == 1.0


def test_gradient_hidden_to_output_is_activation():
    from scipy.special import expit

    net = init_network(NetworkTopology(12, 6), 6)
    x = np.random.default_rng(6).uniform(-1, 1, 12)
    g = gradient(net, x)
    h = expit(net.weights["w_ih"] @ x + net.weights["b_h"])
    assert np.allclose(g["w_ho"], h, atol=1e-15)


@pytest.mark.parametrize("seed", range(6))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    topo = NetworkTopology(int(rng.integers(8, 20)), int(rng.integers(4, 10)))
    net = init_network(topo, seed + 1000)
    x = rng.uniform(-1, 1, topo.inputs)
    analytic = gradient(net, x)
    numeric = finite_difference(net, x)
    for key in analytic:
        a, nmr = analytic[key], numeric[key]
        denom = np.maximum(np.abs(a), np.abs(nmr))
        ok = (np.abs(a - nmr) <= 1e-4 * denom) | (np.abs(a - nmr) <= 1e-8)
        assert ok.all(), f"{key}: worst {np.max(np.abs(a - nmr))}"


def test_td_step_two_terminal_steps_hand_values():
    params = TDParams(lam=0.5, gamma=1.0, alpha=0.5)
    model = LinearModel(0.0)
    traces = make_traces(model)
    x = np.array([1.0])
    td_step(model, traces, params, x, reward=1.0, v_next=0.0, terminal=True)
    assert abs(float(model.weights["w"][0]) - 0.5) < 1e-12
    reset_traces(traces)
    td_step(model, traces, params, x, reward=1.0, v_next=0.0, terminal=True)
    assert abs(float(model.weights["w"][0]) - 0.75) < 1e-12


def test_td_step_zero_error_keeps_weights():
    params = TDParams(alpha=0.1)
    model = LinearModel(0.5)
    traces = make_traces(model)
    x = np.array([1.0])
    # reward + gamma*v_next = 0.2 + 0.3 = V(x) = 0.5 -> delta = 0
    td_step(model, traces, params, x, reward=0.2, v_next=0.3, terminal=False)
    assert float(model.weights["w"][0]) == 0.5
    assert float(traces["w"][0]) == 1.0  # traces still accumulated the gradient


def test_traces_geometric_series():
    params = TDParams(lam=0.5, gamma=1.0, alpha=1e-12)
    model = LinearModel(0.0)
    traces = make_traces(model)
    x = np.array([1.0])
    for k in range(1, 8):
        td_step(model, traces, params, x, reward=0.0, v_next=0.0, terminal=False)
        expected = 2.0 - 2.0 ** (1 - k)
        assert float(traces["w"][0]) == pytest.approx(expected, abs=1e-9)


def test_reset_traces_idempotent_and_step_equals_gradient():
    net = init_network(NetworkTopology(12, 6), 9)
    traces = make_traces(net)
    x = np.random.default_rng(9).uniform(-1, 1, 12)
    td_step(net, traces, TDParams(), x, reward=1.0, v_next=0.0, terminal=True)
    reset_traces(traces)
    reset_traces(traces)
    assert all(np.all(v == 0.0) for v in traces.values())
    g = gradient(net, x)
    td_step(net, traces, TDParams(), x, reward=0.0, v_next=0.0, terminal=False)
    for key in traces:
        assert np.allclose(traces[key], g[key], atol=1e-15)


def test_td_step_rejects_non_finite_inputs():
    model = LinearModel(0.0)
    traces = make_traces(model)
    with pytest.raises(NumericFault):
        td_step(model, traces, TDParams(), np.array([1.0]), float("nan"), 0.0, True)
    with pytest.raises(NumericFault):
        td_step(model, traces, TDParams(), np.array([1.0]), 0.0, float("inf"), False)


def test_check_weights_alarm():
    net = init_network(NetworkTopology(10, 5), 2)
    check_weights(net)
    net.weights["w_ho"][0] = 2e6
    with pytest.raises(NumericFault):
        check_weights(net)
    net.weights["w_ho"][0] = float("nan")
    with pytest.raises(NumericFault):
        check_weights(net)


# --- feature encoding -------------------------------------------------------

def test_encode_kickoff_white():
    config = BoardConfig(8, 2, 10)
    vec = encode_features(new_game(config), Player.WHITE)
    assert vec.shape == (66,)
    assert np.all(vec[:56] == 0.0)
    assert list(vec[56:]) == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]


def test_encode_kickoff_black_side_flag():
    config = BoardConfig(8, 2, 10)
    vec = encode_features(new_game(config), Player.BLACK)
    assert list(vec[56:]) == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0]


def _mirror(state: GameState) -> GameState:
    n = state.config.n
    flip = lambda sq: (n - 1 - sq[0], n - 1 - sq[1])
    return GameState(
        state.config,
        white={flip(sq) for sq in state.black},
        black={flip(sq) for sq in state.white},
        base_white=state.base_black,
        base_black=state.base_white,
        to_move=state.to_move.opponent,
        ply=state.ply,
    )


def test_encode_mirror_symmetry():
    config = BoardConfig(8, 2, 10)
    for state in random_playout_states(config, seed=31, n_states=200):
        mirrored = _mirror(state)
        assert np.array_equal(
            encode_features(state, Player.WHITE), encode_features(mirrored, Player.BLACK)
        )
        assert np.array_equal(
            encode_features(state, Player.BLACK), encode_features(mirrored, Player.WHITE)
        )


def test_encode_pawn_difference_slot():
    config = BoardConfig(8, 2, 10)
    # White has all ten pawns on the board, Black is down to five.
    white = {(x, 2) for x in range(8)} | {(0, 3), (1, 3)}
    black = {(x, 5) for x in range(5)}
    state = GameState(config, white, black, 0, 0)
    vec = encode_features(state, Player.WHITE)
    assert vec[56 + 4] == pytest.approx(0.5)
    assert encode_features(state, Player.BLACK)[56 + 4] == pytest.approx(-0.5)


def test_encode_entries_bounded():
    config = BoardConfig(6, 1, 3)
    rng = random.Random(4)
    from conftest import random_synthetic_state

    for _ in range(200):
        state = random_synthetic_state(config, rng)
        for p in Player:
            vec = encode_features(state, p)
            assert np.all(vec[:34] >= -1) and np.all(vec[:34] <= 1)
            assert np.all(np.isin(vec[:34], [-1.0, 0.0, 1.0]))
            assert np.all(vec[34:] >= -1 - 1e-12) and np.all(vec[34:] <= 1 + 1e-12)


def test_batched_values_match_single():
    config = BoardConfig(8, 2, 10)
    net = init_network(NetworkTopology.for_board(config), 17)
    rows = []
    singles = []
    for state in random_playout_states(config, seed=41, n_states=50):
        x = encode_features(state, Player.WHITE)
        rows.append(x)
        singles.append(net.value(x))
    batched = net.values(np.array(rows))
    assert np.allclose(batched, singles, atol=1e-12)


# --- snapshots --------------------------------------------------------------

def test_snapshot_round_trip(tmp_path):
    config = BoardConfig(8, 2, 10)
    net = init_network(NetworkTopology.for_board(config), 23)
    path = str(tmp_path / "net.json")
    save_snapshot(net, config, path, provenance={"batch_id": "b1", "stage": 3, "rng_seed": 42})
    loaded, board, prov = load_snapshot(path)
    assert board == config
    assert prov == {"batch_id": "b1", "stage": 3, "rng_seed": 42}
    for key in net.weights:
        assert np.array_equal(loaded.weights[key], net.weights[key])
    assert weights_digest(loaded) == weights_digest(net)


def test_snapshot_rejects_board_mismatch(tmp_path):
    config = BoardConfig(8, 2, 10)
    net = init_network(NetworkTopology.for_board(config), 29)
    path = str(tmp_path / "net.json")
    save_snapshot(net, config, path)
    with pytest.raises(ConfigError):
        load_snapshot(path, board=BoardConfig(6, 1, 3))


def test_snapshot_rejects_inconsistent_topology(tmp_path):
    import json as js

    config = BoardConfig(8, 2, 10)
    net = init_network(NetworkTopology.for_board(config), 31)
    path = str(tmp_path / "net.json")
    save_snapshot(net, config, path)
    payload = js.load(open(path))
    payload["topology"]["hidden"] = 12
    js.dump(payload, open(path, "w"))
    with pytest.raises(ConfigError):
        load_snapshot(path)
