"""Bidirectional encoder: cell equations, sequence behavior, pair states."""

import math

import numpy as np
import pytest

import protorole.autodiff as ad
from protorole import encoder
from protorole.data import EmbeddingTable
from protorole.errors import DimensionError, DomainError

import oracles


def make_weights(input_dim, d, rng):
    return encoder.init_lstm(input_dim, d, rng)


def tensor_triple(w):
    return w.w_x.data.tolist(), w.w_h.data.tolist(), w.b.data.tolist()


def test_init_shapes_and_ranges():
    rng = np.random.default_rng(0)
    w = make_weights(5, 3, rng)
    assert w.w_x.shape == (12, 5)
    assert w.w_h.shape == (12, 3)
    assert w.b.shape == (12,)
    s = 1.0 / math.sqrt(3)
    assert np.all(np.abs(w.w_x.data) <= s)
    assert np.all(np.abs(w.w_h.data) <= s)
    # forget-gate bias block starts at one, everything else at zero
    np.testing.assert_array_equal(w.b.data[3:6], np.ones(3))
    np.testing.assert_array_equal(w.b.data[:3], np.zeros(3))
    np.testing.assert_array_equal(w.b.data[6:], np.zeros(6))


def test_cell_matches_equation_oracle():
    rng = np.random.default_rng(1)
    w = make_weights(4, 3, rng)
    x = rng.normal(size=4)
    h0 = rng.normal(size=3)
    c0 = rng.normal(size=3)
    h, c = encoder.lstm_cell(
        ad.constant(x), ad.constant(h0), ad.constant(c0), w
    )
    want_h, want_c = oracles.lstm_cell(
        x.tolist(), h0.tolist(), c0.tolist(), *tensor_triple(w)
    )
    np.testing.assert_allclose(h.data, want_h, atol=1e-12)
    np.testing.assert_allclose(c.data, want_c, atol=1e-12)


def test_cell_scalar_hand_computation():
    # d=1, all weights zero except biases: gates reduce to constants
    w = encoder.LstmWeights(
        w_x=ad.parameter(np.zeros((4, 1))),
        w_h=ad.parameter(np.zeros((4, 1))),
        b=ad.parameter(np.array([0.0, 1.0, 0.0, 0.5])),
        hidden_dim=1,
    )
    h, c = encoder.lstm_cell(
        ad.constant([2.0]), ad.constant([0.3]), ad.constant([0.7]), w
    )
    i = oracles.sigmoid(0.0)
    f = oracles.sigmoid(1.0)
    o = oracles.sigmoid(0.0)
    cand = math.tanh(0.5)
    want_c = f * 0.7 + i * cand
    want_h = o * math.tanh(want_c)
    assert float(c.data[0]) == pytest.approx(want_c, abs=1e-12)
    assert float(h.data[0]) == pytest.approx(want_h, abs=1e-12)


def test_zero_weights_zero_bias_fixed_point():
    w = encoder.LstmWeights(
        w_x=ad.parameter(np.zeros((4, 2))),
        w_h=ad.parameter(np.zeros((4, 1))),
        b=ad.parameter(np.zeros(4)),
        hidden_dim=1,
    )
    h, c = encoder.lstm_cell(
        ad.constant([1.0, -1.0]), ad.constant([0.0]), ad.constant([0.0]), w
    )
    # candidate is tanh(0)=0, so the cell stays exactly at zero
    assert float(c.data[0]) == 0.0
    assert float(h.data[0]) == 0.0


def test_saturated_forget_gate_carries_cell_state():
    # huge forget bias, huge negative input bias: c ~= c_prev
    b = np.array([-50.0, 50.0, 0.0, 0.0])
    w = encoder.LstmWeights(
        w_x=ad.parameter(np.zeros((4, 1))),
        w_h=ad.parameter(np.zeros((4, 1))),
        b=ad.parameter(b),
        hidden_dim=1,
    )
    c_prev = 0.829
    _, c = encoder.lstm_cell(
        ad.constant([3.0]), ad.constant([0.0]), ad.constant([c_prev]), w
    )
    assert abs(float(c.data[0]) - c_prev) < 1e-9


def test_cell_dimension_errors():
    rng = np.random.default_rng(2)
    w = make_weights(4, 3, rng)
    ok = ad.constant(np.zeros(3))
    with pytest.raises(DimensionError):
        encoder.lstm_cell(ad.constant(np.zeros(5)), ok, ok, w)
    with pytest.raises(DimensionError):
        encoder.lstm_cell(ad.constant(np.zeros(4)), ad.constant(np.zeros(2)), ok, w)


def table_for(tokens, dim, seed=0):
    return EmbeddingTable.random(tokens, dim=dim, seed=seed)


def test_encode_matches_bidirectional_oracle():
    rng = np.random.default_rng(3)
    params = encoder.init_encoder(4, 3, rng)
    tokens = ["a", "b", "c", "d", "e"]
    table = table_for(tokens, 4)
    states = encoder.encode(tokens, table, params)
    xs = [table.lookup(t).tolist() for t in tokens]
    want = oracles.bilstm_states(
        xs, tensor_triple(params.forward), tensor_triple(params.backward)
    )
    assert len(states) == 5
    for got, ref in zip(states, want):
        assert got.shape == (6,)
        np.testing.assert_allclose(got.data, ref, atol=1e-12)


def test_encode_single_token():
    rng = np.random.default_rng(4)
    params = encoder.init_encoder(4, 2, rng)
    table = table_for(["only"], 4)
    states = encoder.encode(["only"], table, params)
    assert len(states) == 1
    assert states[0].shape == (4,)
    # with one token, forward and backward both see the same single input
    xs = [table.lookup("only").tolist()]
    want = oracles.bilstm_states(
        xs, tensor_triple(params.forward), tensor_triple(params.backward)
    )
    np.testing.assert_allclose(states[0].data, want[0], atol=1e-12)


def test_encode_empty_rejected():
    rng = np.random.default_rng(5)
    params = encoder.init_encoder(4, 2, rng)
    with pytest.raises(DomainError):
        encoder.encode([], table_for(["x"], 4), params)


def test_reversal_symmetry():
    # swapping the direction weights and reversing the sentence flips the
    # forward and backward halves of each state
    rng = np.random.default_rng(6)
    params = encoder.init_encoder(3, 2, rng)
    swapped = encoder.EncoderParams(
        forward=params.backward,
        backward=params.forward,
        input_dim=3,
        hidden_dim=2,
    )
    tokens = ["t1", "t2", "t3", "t4"]
    table = table_for(tokens, 3)
    states = encoder.encode(tokens, table, params)
    rev_states = encoder.encode(tokens[::-1], table, swapped)[::-1]
    d = 2
    for s, r in zip(states, rev_states):
        np.testing.assert_allclose(s.data[:d], r.data[d:], atol=1e-12)
        np.testing.assert_allclose(s.data[d:], r.data[:d], atol=1e-12)


def test_first_forward_state_ignores_later_tokens():
    rng = np.random.default_rng(7)
    params = encoder.init_encoder(3, 2, rng)
    table = table_for(["a", "b", "c"], 3)
    s1 = encoder.encode(["a", "b"], table, params)
    s2 = encoder.encode(["a", "c"], table, params)
    d = 2
    np.testing.assert_allclose(s1[0].data[:d], s2[0].data[:d], atol=1e-15)
    # while the backward half at position 0 must differ
    assert not np.allclose(s1[0].data[d:], s2[0].data[d:])


def test_pair_state_layout_and_bounds():
    rng = np.random.default_rng(8)
    params = encoder.init_encoder(3, 2, rng)
    tokens = ["a", "b", "c"]
    table = table_for(tokens, 3)
    states = encoder.encode(tokens, table, params)
    pair = encoder.pair_state(states, 2, 0)
    assert pair.shape == (8,)
    np.testing.assert_array_equal(pair.data[:4], states[2].data)
    np.testing.assert_array_equal(pair.data[4:], states[0].data)
    # same-position pairs are allowed
    same = encoder.pair_state(states, 1, 1)
    np.testing.assert_array_equal(same.data[:4], same.data[4:])
    with pytest.raises(IndexError, match="argument head"):
        encoder.pair_state(states, 0, 3)
    with pytest.raises(IndexError, match="predicate head"):
        encoder.pair_state(states, -1, 0)


def test_pair_state_order_sensitivity():
    rng = np.random.default_rng(9)
    params = encoder.init_encoder(3, 2, rng)
    tokens = ["a", "b"]
    table = table_for(tokens, 3)
    states = encoder.encode(tokens, table, params)
    ab = encoder.pair_state(states, 0, 1)
    ba = encoder.pair_state(states, 1, 0)
    np.testing.assert_array_equal(ab.data[:4], ba.data[4:])
    assert not np.array_equal(ab.data, ba.data)


def test_gradients_reach_both_directions():
    rng = np.random.default_rng(10)
    params = encoder.init_encoder(3, 2, rng)
    tokens = ["a", "b", "c"]
    table = table_for(tokens, 3)
    states = encoder.encode(tokens, table, params)
    loss = ad.sum_(ad.square(encoder.pair_state(states, 0, 2)))
    grads = ad.backward(loss)
    for name, tensor in encoder.encoder_tensors(params).items():
        assert tensor in grads, name
        assert float(np.abs(grads[tensor]).max()) > 0.0, name


def test_cell_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    d, input_dim = 2, 3
    x = rng.normal(size=input_dim)
    flat_sizes = {
        "w_x": (4 * d, input_dim),
        "w_h": (4 * d, d),
        "b": (4 * d,),
    }
    base = {k: rng.normal(size=s) * 0.4 for k, s in flat_sizes.items()}

    def loss_of(values):
        w = encoder.LstmWeights(
            w_x=ad.parameter(values["w_x"]),
            w_h=ad.parameter(values["w_h"]),
            b=ad.parameter(values["b"]),
            hidden_dim=d,
        )
        h, c = encoder.lstm_cell(
            ad.constant(x),
            ad.constant(np.array([0.1, -0.2])),
            ad.constant(np.array([0.3, 0.05])),
            w,
        )
        return ad.sum_(ad.add(ad.square(h), ad.square(c))), w

    loss, w = loss_of(base)
    grads = ad.backward(loss)
    for key, tensor in (("w_x", w.w_x), ("w_h", w.w_h), ("b", w.b)):
        analytic = grads[tensor].ravel()

        def f(flat, key=key):
            vals = {k: v.copy() for k, v in base.items()}
            vals[key] = np.asarray(flat).reshape(flat_sizes[key])
            return float(loss_of(vals)[0].data)

        numeric = oracles.finite_diff(f, list(base[key].ravel()))
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_encoder_tensor_names_stable():
    rng = np.random.default_rng(12)
    params = encoder.init_encoder(3, 2, rng)
    assert list(encoder.encoder_tensors(params)) == [
        "encoder.fwd.w_x",
        "encoder.fwd.w_h",
        "encoder.fwd.b",
        "encoder.bwd.w_x",
        "encoder.bwd.w_h",
        "encoder.bwd.b",
    ]


def test_state_dim_property():
    rng = np.random.default_rng(13)
    params = encoder.init_encoder(7, 5, rng)
    assert params.state_dim == 10
