"""Bidirectional LSTM sentence encoder and predicate-argument pair states.

One forward and one backward LSTM share nothing; per-token states are the
concatenation of the two directions' hidden vectors, and the pair state for
heads (e, a) concatenates the states at those two positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .data import EmbeddingTable
from .errors import DimensionError, DomainError


@dataclass
class LstmWeights:
    """Fused gate parameters for one direction.

    Rows of ``w_x`` and ``w_h`` are laid out in gate order
    [input, forget, output, candidate], each block of size ``hidden_dim``.
    """

    w_x: ad.Tensor  # (4d, input_dim)
    w_h: ad.Tensor  # (4d, d)
    b: ad.Tensor  # (4d,)
    hidden_dim: int


@dataclass
class EncoderParams:
    forward: LstmWeights
    backward: LstmWeights
    input_dim: int
    hidden_dim: int

    @property
    def state_dim(self) -> int:
        return 2 * self.hidden_dim


def init_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmWeights:
    """Uniform [-s, s] init with s = 1/sqrt(d); forget-gate bias starts at 1."""
    s = 1.0 / np.sqrt(hidden_dim)
    w_x = ad.parameter(rng.uniform(-s, s, size=(4 * hidden_dim, input_dim)))
    w_h = ad.parameter(rng.uniform(-s, s, size=(4 * hidden_dim, hidden_dim)))
    b = np.zeros(4 * hidden_dim)
    b[hidden_dim : 2 * hidden_dim] = 1.0
    return LstmWeights(w_x, w_h, ad.parameter(b), hidden_dim)


def init_encoder(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> EncoderParams:
    return EncoderParams(
        forward=init_lstm(input_dim, hidden_dim, rng),
        backward=init_lstm(input_dim, hidden_dim, rng),
        input_dim=input_dim,
        hidden_dim=hidden_dim,
    )


def lstm_cell(
    x: ad.Tensor, h_prev: ad.Tensor, c_prev: ad.Tensor, weights: LstmWeights
) -> tuple[ad.Tensor, ad.Tensor]:
    """One step of a standard LSTM (no peepholes)."""
    d = weights.hidden_dim
    if x.size != weights.w_x.shape[1]:
        raise DimensionError(
            f"lstm_cell input has dim {x.size}, weights expect {weights.w_x.shape[1]}"
        )
    if h_prev.size != d or c_prev.size != d:
        raise DimensionError(
            f"lstm_cell state dims ({h_prev.size}, {c_prev.size}) != hidden dim {d}"
        )
    gates = ad.add(ad.add(ad.matmul(weights.w_x, x), ad.matmul(weights.w_h, h_prev)), weights.b)
    i = ad.sigmoid(ad.slice1d(gates, 0, d))
    f = ad.sigmoid(ad.slice1d(gates, d, 2 * d))
    o = ad.sigmoid(ad.slice1d(gates, 2 * d, 3 * d))
    cand = ad.tanh(ad.slice1d(gates, 3 * d, 4 * d))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, cand))
    h = ad.mul(o, ad.tanh(c))
    return h, c


def encode(tokens: list[str], table: EmbeddingTable, params: EncoderParams) -> list[ad.Tensor]:
    """Per-token states [forward_h[t]; backward_h[t]], each of dim 2d.

    Initial hidden and cell states are zero in both directions; embeddings
    enter the graph as constants (the table is frozen).
    """
    if not tokens:
        raise DomainError("cannot encode an empty sentence")
    embs = [ad.constant(table.lookup(t)) for t in tokens]
    d = params.hidden_dim

    def run(weights: LstmWeights, sequence: list[ad.Tensor]) -> list[ad.Tensor]:
        h = ad.constant(np.zeros(d))
        c = ad.constant(np.zeros(d))
        states = []
        for x in sequence:
            h, c = lstm_cell(x, h, c, weights)
            states.append(h)
        return states

    fwd = run(params.forward, embs)
    bwd = run(params.backward, embs[::-1])[::-1]
    return [ad.concat([f, b]) for f, b in zip(fwd, bwd)]


def pair_state(states: list[ad.Tensor], e: int, a: int) -> ad.Tensor:
    """Concatenate the states at the predicate head e and argument head a."""
    n = len(states)
    for name, idx in (("predicate head", e), ("argument head", a)):
        if not 0 <= idx < n:
            raise IndexError(f"{name} index {idx} out of range for {n} states")
    return ad.concat([states[e], states[a]])


def encoder_tensors(params: EncoderParams) -> dict[str, ad.Tensor]:
    """Named parameter tensors, in a fixed order (used for checkpoints)."""
    return {
        "encoder.fwd.w_x": params.forward.w_x,
        "encoder.fwd.w_h": params.forward.w_h,
        "encoder.fwd.b": params.forward.b,
        "encoder.bwd.w_x": params.backward.w_x,
        "encoder.bwd.w_h": params.backward.w_h,
        "encoder.bwd.b": params.backward.b,
    }
