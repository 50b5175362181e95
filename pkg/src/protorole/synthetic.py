"""Deterministic synthetic datasets for capacity and learnability checks.

Every label is a pure function of the token identities at the two head
positions and of the positions themselves, so a pair-state model can in
principle reach perfect accuracy.
"""

from __future__ import annotations

import numpy as np

from .data import EmbeddingTable, Instance, PropertyCatalog, SentencePair

SYNTH_PROPERTIES = (
    "pred_precedes_arg",
    "heads_adjacent",
    "pred_token_even",
    "arg_token_even",
    "arg_in_first_half",
    "heads_same_parity",
)

SYNTH_CATALOG = PropertyCatalog(SYNTH_PROPERTIES)


def _token(i: int) -> str:
    return f"w{i:03d}"


def synth_vocabulary(vocab_size: int = 40) -> list[str]:
    return [_token(i) for i in range(vocab_size)]


def _labels(ids: np.ndarray, e: int, a: int) -> dict[str, bool]:
    n = len(ids)
    return {
        "pred_precedes_arg": e < a,
        "heads_adjacent": abs(e - a) == 1,
        "pred_token_even": ids[e] % 2 == 0,
        "arg_token_even": ids[a] % 2 == 0,
        "arg_in_first_half": a < n / 2,
        "heads_same_parity": ids[e] % 2 == ids[a] % 2,
    }


def make_instances(
    n: int,
    seed: int,
    mode: str = "binary",
    vocab_size: int = 40,
    min_len: int = 5,
    max_len: int = 9,
    properties: tuple[str, ...] = SYNTH_PROPERTIES,
    supersenses: tuple[str, ...] | None = None,
    roles: tuple[str, ...] | None = None,
) -> list[Instance]:
    """Instances with labels computable from heads and token identities.

    Binary labels are the predicates above; scalar mode maps True/False to
    5.0/1.0.  When ``supersenses`` or ``roles`` are given, auxiliary labels
    are attached, also deterministically.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        ids = rng.integers(0, vocab_size, size=length)
        e, a = (int(x) for x in rng.choice(length, size=2, replace=False))
        truth = _labels(ids, e, a)
        if mode == "binary":
            labels = {p: bool(truth[p]) for p in properties}
        else:
            labels = {p: 5.0 if truth[p] else 1.0 for p in properties}
        supersense = None
        if supersenses:
            k = len(supersenses)
            major = supersenses[int(ids[a]) % k]
            minor = supersenses[(int(ids[a]) + 1) % k]
            supersense = {major: 2 / 3, minor: 1 / 3}
        role = None
        if roles:
            role = roles[(int(ids[e]) + (0 if e < a else 1)) % len(roles)]
        out.append(
            Instance(
                sentence_id=f"s{i:05d}",
                tokens=[_token(int(t)) for t in ids],
                pred_head=e,
                arg_head=a,
                labels=labels,
                supersense=supersense,
                propbank_role=role,
            )
        )
    return out


def make_copy_pairs(
    n: int, seed: int, vocab_size: int = 20, min_len: int = 2, max_len: int = 5
) -> list[SentencePair]:
    """A toy translation corpus whose reference equals its source."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        toks = [_token(int(t)) for t in rng.integers(0, vocab_size, size=length)]
        pairs.append(SentencePair(sentence_id=f"p{i:05d}", src=toks, ref=list(toks)))
    return pairs


def make_table(vocab_size: int, dim: int, seed: int) -> EmbeddingTable:
    return EmbeddingTable.random(synth_vocabulary(vocab_size), dim, seed)
