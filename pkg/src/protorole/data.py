"""Dataset ingestion and label construction.

Covers the Likert-rating mappings for binary and scalar task views,
two-way redundancy averaging, supersense distributions, PropBank label
abstraction, embedding loading with seeded out-of-vocabulary vectors, and
nested fraction subsampling for learning-curve experiments.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    DataFormatError,
    DataIntegrityError,
    DomainError,
    FrameLookupError,
)

NA = "NA"
RATINGS = (1, 2, 3, 4, 5, NA)

# Standard data fractions for learning-curve runs; other values work but
# are flagged as non-standard.
FRACTION_LADDER = (0.01, 0.05, 0.10, 0.25, 0.50, 1.00)

SPR1_PROPERTIES = (
    "instigation",
    "volition",
    "awareness",
    "sentient",
    "physically_existed",
    "existed_before",
    "existed_during",
    "existed_after",
    "created",
    "destroyed",
    "changed",
    "changed_state",
    "changed_possession",
    "changed_location",
    "stationary",
    "location",
    "physical_contact",
    "manipulated",
)

SPR2_PROPERTIES = (
    "instigation",
    "volition",
    "awareness",
    "sentient",
    "existed_before",
    "existed_during",
    "existed_after",
    "changed_state",
    "changed_possession",
    "change_of_location",
    "changed_state_continuous",
    "was_for_benefit",
    "was_used",
    "partitive",
)

# The 26 coarse WordNet noun supersenses (lexicographer file names).
NOUN_SUPERSENSES = (
    "noun.Tops",
    "noun.act",
    "noun.animal",
    "noun.artifact",
    "noun.attribute",
    "noun.body",
    "noun.cognition",
    "noun.communication",
    "noun.event",
    "noun.feeling",
    "noun.food",
    "noun.group",
    "noun.location",
    "noun.motive",
    "noun.object",
    "noun.person",
    "noun.phenomenon",
    "noun.plant",
    "noun.possession",
    "noun.process",
    "noun.quantity",
    "noun.relation",
    "noun.shape",
    "noun.state",
    "noun.substance",
    "noun.time",
)

# Default inventory of 16 sense-independent PropBank role labels.  Frame
# files may carry any labels; the decoder's output catalog can be overridden
# in config, so this tuple is just the out-of-the-box ordering.
PROPBANK_ROLES = (
    "PAG",
    "PPT",
    "GOL",
    "LOC",
    "TMP",
    "MNR",
    "CAU",
    "EXT",
    "DIR",
    "PRD",
    "COM",
    "ADV",
    "MOD",
    "REC",
    "PRP",
    "VSP",
)


# ---------------------------------------------------------------------------
# rating mappings


def parse_rating(value):
    """Validate a raw rating: an integer 1-5 or the sentinel "NA"."""
    if value == NA:
        return NA
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataFormatError(f"rating must be an integer 1-5 or 'NA', got {value!r}")
    if not 1 <= value <= 5:
        raise DataFormatError(f"rating out of range: {value}")
    return value


def map_binary(rating) -> bool:
    """Binary task view: 4 and 5 mean the property holds."""
    rating = parse_rating(rating)
    return rating != NA and rating >= 4


def map_scalar(rating) -> float:
    """Scalar task view: NA collapses to the bottom of the scale."""
    rating = parse_rating(rating)
    return 1.0 if rating == NA else float(rating)


def merge_redundant(r1, r2) -> float:
    """Average a two-way redundant annotation pair on the scalar scale."""
    return (map_scalar(r1) + map_scalar(r2)) / 2.0


def binarize_scalar(s: float) -> bool:
    """Cut a scalar label at the midpoint: strictly greater than 3 is True."""
    return s > 3.0


# ---------------------------------------------------------------------------
# supersense distributions


def supersense_distribution(
    selections: Sequence[Iterable[str]],
    sense_map: Mapping[str, object],
) -> dict[str, float]:
    """Build a gold supersense distribution from per-annotator sense sets.

    Each annotator contributes at most 1 to a supersense's weight no matter
    how many of their selected fine senses map to it; weights are then
    normalized.  ``sense_map`` values may be a single supersense or an
    iterable of them.
    """
    counts: dict[str, int] = {}
    any_selection = False
    for chosen in selections:
        reached: set[str] = set()
        for sense in chosen:
            any_selection = True
            try:
                target = sense_map[sense]
            except KeyError:
                raise DataIntegrityError(f"fine sense {sense!r} has no supersense mapping") from None
            if isinstance(target, str):
                reached.add(target)
            else:
                reached.update(target)
        for ss in reached:
            counts[ss] = counts.get(ss, 0) + 1
    if not any_selection:
        raise DataIntegrityError("no annotator selected any sense")
    return distribution_from_counts(counts)


def distribution_from_counts(counts: Mapping[str, float]) -> dict[str, float]:
    """Normalize non-negative counts into a probability map."""
    total = float(sum(counts.values()))
    if total <= 0:
        raise DataIntegrityError("cannot normalize an all-zero count map")
    return {k: v / total for k, v in counts.items()}


def distribution_vector(dist: Mapping[str, float], catalog: Sequence[str]) -> np.ndarray:
    """Lay a probability map out as a dense vector in catalog order."""
    index = {name: i for i, name in enumerate(catalog)}
    vec = np.zeros(len(catalog), dtype=np.float64)
    for name, p in dist.items():
        try:
            vec[index[name]] = p
        except KeyError:
            raise DataIntegrityError(f"supersense {name!r} not in catalog") from None
    return vec


def perplexity(probs: Iterable[float]) -> float:
    """exp of the entropy of a distribution; 1.0 for a point mass."""
    h = 0.0
    for p in probs:
        if p > 0:
            h -= p * np.log(p)
    return float(np.exp(h))


def mean_gold_perplexity(instances: Sequence["Instance"]) -> float:
    values = [perplexity(inst.supersense.values()) for inst in instances if inst.supersense]
    if not values:
        raise DomainError("no supersense distributions present")
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# PropBank role abstraction


def load_frame_map(path) -> dict[tuple[str, str], str]:
    """Read a frame map: tab-separated ``sense:label`` → abstract label.

    Lines starting with '#' and blank lines are skipped.
    """
    frame_map: dict[tuple[str, str], str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or ":" not in parts[0]:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'sense:label<TAB>abstract', got {line!r}"
                )
            sense, label = parts[0].split(":", 1)
            frame_map[(sense, label)] = parts[1]
    return frame_map


def map_propbank(label: str, sense: str, frame_map: Mapping[tuple[str, str], str]) -> str:
    """Abstract a sense-specific role label via the frame map."""
    try:
        return frame_map[(sense, label)]
    except KeyError:
        raise FrameLookupError(sense, label) from None


# ---------------------------------------------------------------------------
# instances and catalogs


@dataclass(frozen=True)
class PropertyCatalog:
    """Ordered, unique property names; decoder output rows follow this order."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ConfigError("property catalog contains duplicate names")
        if not self.names:
            raise ConfigError("property catalog is empty")

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ContractError(f"property {name!r} not in catalog") from None

    @classmethod
    def from_instances(cls, instances: Sequence["Instance"]) -> "PropertyCatalog":
        seen: set[str] = set()
        for inst in instances:
            seen.update(inst.labels)
        return cls(tuple(sorted(seen)))


SPR1_CATALOG = PropertyCatalog(SPR1_PROPERTIES)
SPR2_CATALOG = PropertyCatalog(SPR2_PROPERTIES)
SUPERSENSE_CATALOG = NOUN_SUPERSENSES
PROPBANK_CATALOG = PROPBANK_ROLES


@dataclass
class Instance:
    """One predicate-argument pair with its labels.

    ``labels`` holds the task-view values: booleans in binary mode, reals
    in [1,5] in scalar mode.  ``supersense`` is a probability map over
    supersenses for the argument head; ``propbank_role`` an abstract role
    label.  Both auxiliary fields are optional.
    """

    sentence_id: str
    tokens: list[str]
    pred_head: int
    arg_head: int
    labels: dict[str, object] = field(default_factory=dict)
    supersense: dict[str, float] | None = None
    propbank_role: str | None = None

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise DataIntegrityError(f"{self.sentence_id}: empty token sequence")
        for name, idx in (("pred_head", self.pred_head), ("arg_head", self.arg_head)):
            if not 0 <= idx < n:
                raise DataIntegrityError(
                    f"{self.sentence_id}: {name}={idx} out of range for {n} tokens"
                )


def check_labels(instance: Instance, catalog: PropertyCatalog, mode: str) -> None:
    """Verify an instance carries a valid label for every catalog property."""
    for prop in catalog:
        if prop not in instance.labels:
            raise DataIntegrityError(
                f"{instance.sentence_id}: missing label for property {prop!r}"
            )
        value = instance.labels[prop]
        if mode == "binary":
            if not isinstance(value, (bool, np.bool_)):
                raise DataIntegrityError(
                    f"{instance.sentence_id}: property {prop!r} is not boolean"
                )
        elif mode == "scalar":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DataIntegrityError(
                    f"{instance.sentence_id}: property {prop!r} is not numeric"
                )
            if not 1.0 <= float(value) <= 5.0:
                raise DataIntegrityError(
                    f"{instance.sentence_id}: scalar label {value!r} outside [1,5]"
                )
        else:
            raise ConfigError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# JSON Lines dataset files

_RECORD_KEYS = ("sentence_id", "tokens", "pred_head", "arg_head", "labels",
                "supersense", "propbank_role")
_REQUIRED_KEYS = ("sentence_id", "tokens", "pred_head", "arg_head", "labels")


def read_jsonl(path) -> list[dict]:
    """Parse a dataset file into validated raw records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}:{lineno}: record is not an object")
            for key in _REQUIRED_KEYS:
                if key not in record:
                    raise DataFormatError(f"{path}:{lineno}: missing field {key!r}")
            unknown = set(record) - set(_RECORD_KEYS)
            if unknown:
                raise DataFormatError(
                    f"{path}:{lineno}: unknown fields {sorted(unknown)}"
                )
            records.append(record)
    return records


def write_jsonl(records: Iterable[dict], path) -> None:
    """Serialize records one per line with canonical key order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            ordered = {k: record[k] for k in _RECORD_KEYS if k in record}
            fh.write(json.dumps(ordered, ensure_ascii=False) + "\n")


def _label_value(raw, mode: str, sentence_id: str, prop: str):
    """Convert one raw label field to the requested task view.

    Raw values may be a single rating, a two-element rating pair, or an
    already-final boolean/float.
    """
    if isinstance(raw, bool):
        if mode == "scalar":
            raise DataFormatError(
                f"{sentence_id}: {prop} is boolean; cannot produce a scalar label"
            )
        return raw
    if isinstance(raw, float):
        if not 1.0 <= raw <= 5.0:
            raise DataFormatError(f"{sentence_id}: {prop} scalar {raw} outside [1,5]")
        return raw if mode == "scalar" else binarize_scalar(raw)
    if isinstance(raw, list):
        if len(raw) != 2:
            raise DataIntegrityError(
                f"{sentence_id}: {prop} expects a two-way rating pair, got {raw!r}"
            )
        merged = merge_redundant(raw[0], raw[1])
        return merged if mode == "scalar" else binarize_scalar(merged)
    # a bare rating
    return map_scalar(raw) if mode == "scalar" else map_binary(raw)


def instance_from_record(record: dict, mode: str) -> Instance:
    labels = {}
    for prop, raw in record["labels"].items():
        labels[prop] = _label_value(raw, mode, record["sentence_id"], prop)
    supersense = record.get("supersense")
    if supersense is not None:
        supersense = distribution_from_counts(supersense)
    return Instance(
        sentence_id=str(record["sentence_id"]),
        tokens=[str(t) for t in record["tokens"]],
        pred_head=int(record["pred_head"]),
        arg_head=int(record["arg_head"]),
        labels=labels,
        supersense=supersense,
        propbank_role=record.get("propbank_role"),
    )


def load_dataset(path, mode: str, catalog: PropertyCatalog | None = None) -> list[Instance]:
    """Read a dataset file and map raw labels into the requested task view.

    When a catalog is given, every instance must carry a label for every
    property in it.
    """
    if mode not in ("binary", "scalar"):
        raise ConfigError(f"mode must be 'binary' or 'scalar', got {mode!r}")
    instances = [instance_from_record(r, mode) for r in read_jsonl(path)]
    if catalog is not None:
        for inst in instances:
            check_labels(inst, catalog, mode)
    return instances


def dataset_fingerprint(path) -> str:
    """Content hash of a dataset file (sha256 hex digest)."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def vocabulary_of(instances: Sequence[Instance]) -> set[str]:
    vocab: set[str] = set()
    for inst in instances:
        vocab.update(t.lower() for t in inst.tokens)
    return vocab


# ---------------------------------------------------------------------------
# parallel corpora (for translation pretraining)


@dataclass
class SentencePair:
    """A source sentence and its reference translation."""

    sentence_id: str
    src: list[str]
    ref: list[str]

    def __post_init__(self):
        if not self.src:
            raise DataIntegrityError(f"{self.sentence_id}: empty source sentence")
        if not self.ref:
            raise DataIntegrityError(f"{self.sentence_id}: empty reference sentence")


def load_parallel(path) -> list[SentencePair]:
    """Read a parallel corpus: JSON Lines with sentence_id, src, ref."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            for key in ("sentence_id", "src", "ref"):
                if key not in record:
                    raise DataFormatError(f"{path}:{lineno}: missing field {key!r}")
            pairs.append(
                SentencePair(
                    sentence_id=str(record["sentence_id"]),
                    src=[str(t) for t in record["src"]],
                    ref=[str(t) for t in record["ref"]],
                )
            )
    return pairs


def write_parallel(pairs: Iterable[SentencePair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {"sentence_id": p.sentence_id, "src": p.src, "ref": p.ref},
                    ensure_ascii=False,
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# embeddings


class EmbeddingTable:
    """Frozen token → vector map with a reserved unknown-token row.

    Rows never change after construction; lookups lowercase the token and
    fall back to the unknown row.
    """

    UNK = "<unk>"

    def __init__(self, vocab: dict[str, int], matrix: np.ndarray):
        if EmbeddingTable.UNK not in vocab:
            raise ConfigError("embedding table must reserve an unknown-token row")
        if matrix.ndim != 2 or len(vocab) != matrix.shape[0]:
            raise ConfigError(
                f"vocabulary size {len(vocab)} does not match matrix shape {matrix.shape}"
            )
        self.vocab = dict(vocab)
        self.matrix = matrix.copy()
        self.matrix.flags.writeable = False
        self.dim = matrix.shape[1]

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)

    def lookup(self, token: str) -> np.ndarray:
        idx = self.vocab.get(token.lower())
        if idx is None:
            idx = self.vocab[EmbeddingTable.UNK]
        return self.matrix[idx]

    @classmethod
    def random(cls, vocabulary: Iterable[str], dim: int, seed: int) -> "EmbeddingTable":
        """A fully random table (for synthetic data and tests)."""
        tokens = sorted({t.lower() for t in vocabulary} | {cls.UNK})
        rng = np.random.default_rng(seed)
        matrix = rng.uniform(-0.01, 0.01, size=(len(tokens), dim))
        return cls({t: i for i, t in enumerate(tokens)}, matrix)


def load_embeddings(path, vocabulary: Iterable[str], seed: int, dim: int = 300) -> EmbeddingTable:
    """Build an embedding table for a vocabulary from a text vector file.

    File lines are whitespace-separated: token then ``dim`` floats.  Tokens
    found in the file keep their file vectors bit-exactly; the rest
    (including the reserved unknown token) get seeded uniform samples from
    [-0.01, 0.01].  Sampling iterates the missing tokens in sorted order,
    so the result depends only on the seed and the vocabulary as a set.
    """
    wanted = {t.lower() for t in vocabulary}
    found: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0].lower(), parts[1:]
            if len(values) != dim:
                if all(_is_float(v) for v in values):
                    raise ConfigError(
                        f"{path}:{lineno}: expected {dim} components, found {len(values)}"
                    )
                raise DataFormatError(f"{path}:{lineno}: malformed embedding line")
            if token in wanted and token not in found:
                try:
                    found[token] = np.array([float(v) for v in values], dtype=np.float64)
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{lineno}: non-numeric embedding component"
                    ) from None

    rng = np.random.default_rng(seed)
    missing = sorted((wanted | {EmbeddingTable.UNK}) - set(found))
    oov = {t: rng.uniform(-0.01, 0.01, size=dim) for t in missing}

    tokens = sorted(set(found) | set(oov))
    matrix = np.empty((len(tokens), dim), dtype=np.float64)
    for i, t in enumerate(tokens):
        matrix[i] = found[t] if t in found else oov[t]
    return EmbeddingTable({t: i for i, t in enumerate(tokens)}, matrix)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# fraction subsampling


def sample_fraction(dataset: Sequence, p: float, seed: int) -> list:
    """Sample round(p*N) items without replacement, keeping original order.

    Samples are nested: for a fixed seed, the sample at a smaller fraction
    is a subset of the sample at any larger fraction, because both take
    prefixes of the same seeded permutation.
    """
    n = len(dataset)
    if n == 0:
        raise DomainError("cannot sample from an empty dataset")
    if not 0.0 < p <= 1.0:
        raise DomainError(f"fraction must be in (0, 1], got {p}")
    if not any(abs(p - q) < 1e-12 for q in FRACTION_LADDER):
        warnings.warn(f"non-standard fraction {p}", stacklevel=2)
    k = max(1, int(np.floor(p * n + 0.5)))
    order = np.random.default_rng(seed).permutation(n)
    chosen = np.sort(order[:k])
    return [dataset[i] for i in chosen]
