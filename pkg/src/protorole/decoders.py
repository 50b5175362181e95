"""Prediction heads over encoder states.

* the proto-role two-layer perceptron, scored per property, in binary
  (log-odds) and scalar (squared-error) modes;
* a categorical decoder over abstract PropBank roles;
* a supersense distribution decoder fed by the argument-head state only;
* an attention-based sequence decoder used for translation pretraining.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .data import PropertyCatalog
from .encoder import EncoderParams, LstmWeights, encode, init_lstm, lstm_cell
from .errors import ContractError, DomainError

BOS = "<s>"
UNK = "<unk>"


def _uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    s = 1.0 / np.sqrt(cols)
    return rng.uniform(-s, s, size=(rows, cols))


# ---------------------------------------------------------------------------
# proto-role decoder


@dataclass
class SprDecoderParams:
    """Two-layer perceptron with the first layer shared across properties.

    score(attr) = w_attr · g(w_shared · h_ea + b_shared) + b_attr
    """

    w_shared: ad.Tensor  # (m, pair_dim)
    b_shared: ad.Tensor  # (m,)
    w_attr: ad.Tensor  # (P, m), one row per catalog property
    b_attr: ad.Tensor  # (P,)
    activation: str
    catalog: PropertyCatalog


def init_spr_decoder(
    catalog: PropertyCatalog,
    pair_dim: int,
    hidden_dim: int = 300,
    activation: str = "relu",
    rng: np.random.Generator | None = None,
) -> SprDecoderParams:
    if activation not in ("relu", "tanh"):
        raise ContractError(f"activation must be 'relu' or 'tanh', got {activation!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    return SprDecoderParams(
        w_shared=ad.parameter(_uniform(rng, hidden_dim, pair_dim)),
        b_shared=ad.parameter(np.zeros(hidden_dim)),
        w_attr=ad.parameter(_uniform(rng, len(catalog), hidden_dim)),
        b_attr=ad.parameter(np.zeros(len(catalog))),
        activation=activation,
        catalog=catalog,
    )


def spr_hidden(h_ea: ad.Tensor, params: SprDecoderParams) -> ad.Tensor:
    """The shared hidden activation, computed once per pair."""
    return ad.pointwise(
        params.activation, ad.add(ad.matmul(params.w_shared, h_ea), params.b_shared)
    )


def spr_score_vector(h_ea: ad.Tensor, params: SprDecoderParams) -> ad.Tensor:
    """Scores for every catalog property at once, in catalog order."""
    return ad.add(ad.matmul(params.w_attr, spr_hidden(h_ea, params)), params.b_attr)


def spr_scores(h_ea: ad.Tensor, params: SprDecoderParams) -> dict[str, ad.Tensor]:
    vec = spr_score_vector(h_ea, params)
    return {prop: ad.pick(vec, i) for i, prop in enumerate(params.catalog)}


def binary_prob(score: float) -> float:
    """Probability that the attribute holds, from its log-odds score."""
    score = float(score)
    z = np.exp(-abs(score))
    return float(1.0 / (1.0 + z)) if score >= 0 else float(z / (1.0 + z))


def predict_binary(score: float) -> bool:
    """Threshold at probability 0.5 — equivalently score > 0."""
    return float(score) > 0.0


def _check_keys(scores: Mapping, labels: Mapping) -> None:
    if set(scores) != set(labels):
        missing = sorted(set(scores) ^ set(labels))
        raise ContractError(f"score/label key mismatch: {missing}")


def binary_loss(scores: Mapping[str, ad.Tensor], labels: Mapping[str, bool]) -> ad.Tensor:
    """Sum over properties of -log p(correct label).

    softplus(-s) is -log sigmoid(s) and softplus(s) is -log(1 - sigmoid(s)),
    so each term saturates to 0 instead of overflowing.
    """
    _check_keys(scores, labels)
    terms = []
    for prop in sorted(scores):
        s = scores[prop]
        terms.append(ad.softplus(ad.neg(s) if labels[prop] else s))
    return ad.add_n(terms)


def scalar_loss(scores: Mapping[str, ad.Tensor], targets: Mapping[str, float]) -> ad.Tensor:
    """Sum of squared errors against the scalar targets; scores unclamped."""
    _check_keys(scores, targets)
    terms = []
    for prop in sorted(scores):
        terms.append(ad.square(ad.sub(scores[prop], ad.constant(float(targets[prop])))))
    return ad.add_n(terms)


def binary_loss_vector(
    score_vec: ad.Tensor, labels: np.ndarray, weights: np.ndarray | None = None
) -> ad.Tensor:
    """Vectorized binary loss with optional per-property weights.

    ``labels`` is a boolean vector in catalog order; a weight of 0 drops a
    property from the loss entirely.
    """
    if score_vec.size != labels.size:
        raise ContractError(
            f"score vector length {score_vec.size} != label vector length {labels.size}"
        )
    sign = np.where(labels, -1.0, 1.0)
    per_prop = ad.softplus(ad.mul(score_vec, ad.constant(sign)))
    w = np.ones(labels.size) if weights is None else np.asarray(weights, dtype=np.float64)
    return ad.dot(per_prop, ad.constant(w))


def scalar_loss_vector(
    score_vec: ad.Tensor, targets: np.ndarray, weights: np.ndarray | None = None
) -> ad.Tensor:
    if score_vec.size != targets.size:
        raise ContractError(
            f"score vector length {score_vec.size} != target vector length {targets.size}"
        )
    per_prop = ad.square(ad.sub(score_vec, ad.constant(targets)))
    w = np.ones(targets.size) if weights is None else np.asarray(weights, dtype=np.float64)
    return ad.dot(per_prop, ad.constant(w))


# ---------------------------------------------------------------------------
# PropBank role decoder


@dataclass
class PropBankDecoderParams:
    w: ad.Tensor  # (R, pair_dim)
    b: ad.Tensor  # (R,)
    roles: tuple[str, ...]


def init_propbank_decoder(
    roles: Sequence[str], pair_dim: int, rng: np.random.Generator | None = None
) -> PropBankDecoderParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    return PropBankDecoderParams(
        w=ad.parameter(_uniform(rng, len(roles), pair_dim)),
        b=ad.parameter(np.zeros(len(roles))),
        roles=tuple(roles),
    )


def propbank_forward(
    h_ea: ad.Tensor, params: PropBankDecoderParams, gold_index: int | None = None
) -> tuple[np.ndarray, ad.Tensor | None]:
    """Role distribution and, when a gold index is given, its -log prob."""
    log_probs = ad.log_softmax(ad.add(ad.matmul(params.w, h_ea), params.b))
    probs = np.exp(log_probs.data)
    if gold_index is None:
        return probs, None
    if not 0 <= gold_index < len(params.roles):
        raise IndexError(
            f"gold role index {gold_index} out of range for {len(params.roles)} roles"
        )
    return probs, ad.neg(ad.pick(log_probs, gold_index))


# ---------------------------------------------------------------------------
# supersense decoder


@dataclass
class SupersenseDecoderParams:
    w: ad.Tensor  # (S, state_dim) — input is the argument-head state only
    b: ad.Tensor  # (S,)
    supersenses: tuple[str, ...]


def init_supersense_decoder(
    supersenses: Sequence[str], state_dim: int, rng: np.random.Generator | None = None
) -> SupersenseDecoderParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    return SupersenseDecoderParams(
        w=ad.parameter(_uniform(rng, len(supersenses), state_dim)),
        b=ad.parameter(np.zeros(len(supersenses))),
        supersenses=tuple(supersenses),
    )


def supersense_forward(
    h_a: ad.Tensor, params: SupersenseDecoderParams, gold: np.ndarray | None = None
) -> tuple[np.ndarray, ad.Tensor | None]:
    """Predicted distribution and its cross-entropy against a gold distribution."""
    log_probs = ad.log_softmax(ad.add(ad.matmul(params.w, h_a), params.b))
    probs = np.exp(log_probs.data)
    if gold is None:
        return probs, None
    gold = np.asarray(gold, dtype=np.float64)
    if gold.shape != (len(params.supersenses),):
        raise ContractError(
            f"gold distribution shape {gold.shape} != ({len(params.supersenses)},)"
        )
    if abs(gold.sum() - 1.0) > 1e-6 or np.any(gold < 0):
        raise ContractError(f"gold distribution not normalized (sum={gold.sum()!r})")
    return probs, ad.neg(ad.dot(ad.constant(gold), log_probs))


# ---------------------------------------------------------------------------
# translation decoder


@dataclass
class MtDecoderParams:
    """Stacked-LSTM decoder with dot-product attention over encoder states.

    The bottom layer's initial hidden state is the encoder's final
    left-to-right state; upper layers start at zero.  Attention logits are
    s · (w_alpha h_t + b_alpha) with s the top-layer state.
    """

    vocab: dict[str, int]  # reserves BOS at id 0 and UNK at id 1
    embeddings: ad.Tensor  # (V, emb_dim), trainable
    layers: list[LstmWeights]
    w_alpha: ad.Tensor  # (dec_dim, enc_state_dim)
    b_alpha: ad.Tensor  # (dec_dim,)
    w_out: ad.Tensor  # (V, dec_dim + enc_state_dim)
    b_out: ad.Tensor  # (V,)
    dec_dim: int
    enc_state_dim: int

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)


def make_target_vocab(sentences: Sequence[Sequence[str]], max_size: int | None = None) -> dict[str, int]:
    """Frequency-capped vocabulary with reserved start and unknown tokens."""
    counts: dict[str, int] = {}
    for sent in sentences:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
    # most frequent first; ties broken alphabetically for determinism
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    if max_size is not None:
        ranked = ranked[: max(0, max_size - 2)]
    vocab = {BOS: 0, UNK: 1}
    for tok in ranked:
        if tok not in vocab:
            vocab[tok] = len(vocab)
    return vocab


def token_id(vocab: Mapping[str, int], token: str) -> int:
    return vocab.get(token, vocab[UNK])


def init_mt_decoder(
    vocab: Mapping[str, int],
    enc_state_dim: int,
    dec_dim: int,
    emb_dim: int | None = None,
    num_layers: int = 2,
    rng: np.random.Generator | None = None,
) -> MtDecoderParams:
    if vocab.get(BOS) != 0 or vocab.get(UNK) != 1:
        raise ContractError("target vocabulary must reserve <s>=0 and <unk>=1")
    rng = rng if rng is not None else np.random.default_rng(0)
    emb_dim = dec_dim if emb_dim is None else emb_dim
    layers = [init_lstm(emb_dim if i == 0 else dec_dim, dec_dim, rng) for i in range(num_layers)]
    v = len(vocab)
    return MtDecoderParams(
        vocab=dict(vocab),
        embeddings=ad.parameter(_uniform(rng, v, emb_dim)),
        layers=layers,
        w_alpha=ad.parameter(_uniform(rng, dec_dim, enc_state_dim)),
        b_alpha=ad.parameter(np.zeros(dec_dim)),
        w_out=ad.parameter(_uniform(rng, v, dec_dim + enc_state_dim)),
        b_out=ad.parameter(np.zeros(v)),
        dec_dim=dec_dim,
        enc_state_dim=enc_state_dim,
    )


def attention(
    s: ad.Tensor, states, params: MtDecoderParams
) -> tuple[ad.Tensor, ad.Tensor]:
    """Context vector and weights for decoder state ``s`` over encoder states.

    ``states`` is either the per-token state list or an already stacked
    (n, enc_state_dim) matrix.  logit_t = s·(w_alpha h_t + b_alpha), computed
    for all t as H (w_alphaᵀ s) + s·b_alpha.
    """
    if isinstance(states, (list, tuple)):
        if not states:
            raise DomainError("attention over an empty state sequence")
        h_mat = ad.stack(states)
    else:
        h_mat = states
        if h_mat.size == 0:
            raise DomainError("attention over an empty state sequence")
    logits = ad.add_scalar(
        ad.matmul(h_mat, ad.matmul(ad.transpose(params.w_alpha), s)),
        ad.dot(s, params.b_alpha),
    )
    alpha = ad.softmax(logits)
    context = ad.matmul(ad.transpose(h_mat), alpha)
    return context, alpha


DecoderStack = list[tuple[ad.Tensor, ad.Tensor]]


def initial_decoder_stack(enc_states: list[ad.Tensor], params: MtDecoderParams) -> DecoderStack:
    """Bottom layer starts from the last forward encoder state, rest at zero."""
    d_enc = params.enc_state_dim // 2
    s0 = ad.slice1d(enc_states[-1], 0, d_enc)
    if s0.size != params.dec_dim:
        raise ContractError(
            f"decoder dim {params.dec_dim} must equal encoder forward dim {d_enc} "
            "to seed the bottom layer"
        )
    stack: DecoderStack = [(s0, ad.constant(np.zeros(params.dec_dim)))]
    for _ in params.layers[1:]:
        stack.append(
            (ad.constant(np.zeros(params.dec_dim)), ad.constant(np.zeros(params.dec_dim)))
        )
    return stack


def mt_step(
    y_prev: int, stack: DecoderStack, h_mat: ad.Tensor, params: MtDecoderParams
) -> tuple[DecoderStack, ad.Tensor]:
    """Advance the decoder one token; returns the new stack and log P(y).

    P(y) = softmax(tanh(w_out [s; c] + b_out)) with c the attention context
    of the top-layer state s.
    """
    x = ad.row(params.embeddings, y_prev)
    new_stack: DecoderStack = []
    for (h_prev, c_prev), weights in zip(stack, params.layers):
        h, c = lstm_cell(x, h_prev, c_prev, weights)
        new_stack.append((h, c))
        x = h
    s = new_stack[-1][0]
    context, _ = attention(s, h_mat, params)
    logits = ad.tanh(ad.add(ad.matmul(params.w_out, ad.concat([s, context])), params.b_out))
    return new_stack, ad.log_softmax(logits)


def mt_sequence_loss(
    src_tokens: list[str],
    ref_tokens: list[str],
    table,
    enc_params: EncoderParams,
    params: MtDecoderParams,
) -> ad.Tensor:
    """Teacher-forced negative log-likelihood of the reference sequence."""
    if not ref_tokens:
        raise DomainError("reference sequence is empty")
    enc_states = encode(src_tokens, table, enc_params)
    h_mat = ad.stack(enc_states)
    stack = initial_decoder_stack(enc_states, params)
    y_prev = params.vocab[BOS]
    terms = []
    for tok in ref_tokens:
        stack, log_probs = mt_step(y_prev, stack, h_mat, params)
        y = token_id(params.vocab, tok)
        terms.append(ad.neg(ad.pick(log_probs, y)))
        y_prev = y
    return ad.add_n(terms)


def greedy_decode(
    src_tokens: list[str],
    table,
    enc_params: EncoderParams,
    params: MtDecoderParams,
    max_len: int,
) -> list[str]:
    """Argmax decoding for ``max_len`` steps (no stopping symbol)."""
    enc_states = encode(src_tokens, table, enc_params)
    h_mat = ad.stack(enc_states)
    stack = initial_decoder_stack(enc_states, params)
    id_to_token = {i: t for t, i in params.vocab.items()}
    y_prev = params.vocab[BOS]
    out = []
    for _ in range(max_len):
        stack, log_probs = mt_step(y_prev, stack, h_mat, params)
        y_prev = int(np.argmax(log_probs.data))
        out.append(id_to_token[y_prev])
    return out


# ---------------------------------------------------------------------------
# named tensors for checkpointing


def spr_tensors(params: SprDecoderParams, prefix: str = "dec.spr") -> dict[str, ad.Tensor]:
    return {
        f"{prefix}.w_shared": params.w_shared,
        f"{prefix}.b_shared": params.b_shared,
        f"{prefix}.w_attr": params.w_attr,
        f"{prefix}.b_attr": params.b_attr,
    }


def propbank_tensors(params: PropBankDecoderParams, prefix: str = "dec.propbank") -> dict[str, ad.Tensor]:
    return {f"{prefix}.w": params.w, f"{prefix}.b": params.b}


def supersense_tensors(params: SupersenseDecoderParams, prefix: str = "dec.supersense") -> dict[str, ad.Tensor]:
    return {f"{prefix}.w": params.w, f"{prefix}.b": params.b}


def mt_tensors(params: MtDecoderParams, prefix: str = "dec.mt") -> dict[str, ad.Tensor]:
    out = {f"{prefix}.embeddings": params.embeddings}
    for i, layer in enumerate(params.layers):
        out[f"{prefix}.layer{i}.w_x"] = layer.w_x
        out[f"{prefix}.layer{i}.w_h"] = layer.w_h
        out[f"{prefix}.layer{i}.b"] = layer.b
    out[f"{prefix}.w_alpha"] = params.w_alpha
    out[f"{prefix}.b_alpha"] = params.b_alpha
    out[f"{prefix}.w_out"] = params.w_out
    out[f"{prefix}.b_out"] = params.b_out
    return out
