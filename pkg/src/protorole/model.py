"""The full model: frozen embeddings, shared encoder, one head per task."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from . import decoders as dec
from .data import (
    EmbeddingTable,
    Instance,
    PropertyCatalog,
    SentencePair,
    distribution_vector,
)
from .encoder import EncoderParams, encode, encoder_tensors, init_encoder, pair_state
from .errors import ConfigError, ContractError, DataIntegrityError
from .seeding import seed_for

TASK_KINDS = ("spr-binary", "spr-scalar", "propbank", "supersense", "mt")
SPR_KINDS = ("spr-binary", "spr-scalar")


@dataclass
class ModelConfig:
    input_dim: int = 300
    hidden_dim: int = 600
    spr_hidden_dim: int = 300
    activation: str = "relu"
    mt_layers: int = 2


@dataclass
class HeadSpec:
    """What a decoder needs to be built, independent of its weights."""

    kind: str
    catalog: PropertyCatalog | None = None  # spr kinds
    roles: tuple[str, ...] | None = None  # propbank
    supersenses: tuple[str, ...] | None = None  # supersense
    vocab: dict[str, int] | None = None  # mt

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ConfigError(f"unknown task kind {self.kind!r}")
        needed = {
            "spr-binary": self.catalog,
            "spr-scalar": self.catalog,
            "propbank": self.roles,
            "supersense": self.supersenses,
            "mt": self.vocab,
        }[self.kind]
        if needed is None:
            raise ConfigError(f"head spec for kind {self.kind!r} is missing its catalog")


@dataclass
class DecoderHead:
    kind: str
    params: object


@dataclass
class SprlModel:
    table: EmbeddingTable | None
    encoder: EncoderParams
    heads: dict[str, DecoderHead]
    config: ModelConfig
    cache: dict = field(default_factory=dict, repr=False)

    def head(self, task: str) -> DecoderHead:
        try:
            return self.heads[task]
        except KeyError:
            raise ContractError(f"model has no decoder for task {task!r}") from None

    def named_tensors(self) -> dict[str, ad.Tensor]:
        tensors = encoder_tensors(self.encoder)
        for name in sorted(self.heads):
            head = self.heads[name]
            prefix = f"dec.{name}"
            if head.kind in SPR_KINDS:
                tensors.update(dec.spr_tensors(head.params, prefix))
            elif head.kind == "propbank":
                tensors.update(dec.propbank_tensors(head.params, prefix))
            elif head.kind == "supersense":
                tensors.update(dec.supersense_tensors(head.params, prefix))
            else:
                tensors.update(dec.mt_tensors(head.params, prefix))
        return tensors

    def parameters(self) -> list[ad.Tensor]:
        return list(self.named_tensors().values())

    def require_table(self) -> EmbeddingTable:
        if self.table is None:
            raise ContractError("model has no embedding table attached")
        return self.table


def build_head(spec: HeadSpec, config: ModelConfig, rng: np.random.Generator) -> DecoderHead:
    pair_dim = 4 * config.hidden_dim
    state_dim = 2 * config.hidden_dim
    if spec.kind in SPR_KINDS:
        params = dec.init_spr_decoder(
            spec.catalog, pair_dim, config.spr_hidden_dim, config.activation, rng
        )
    elif spec.kind == "propbank":
        params = dec.init_propbank_decoder(spec.roles, pair_dim, rng)
    elif spec.kind == "supersense":
        params = dec.init_supersense_decoder(spec.supersenses, state_dim, rng)
    else:
        params = dec.init_mt_decoder(
            spec.vocab,
            enc_state_dim=state_dim,
            dec_dim=config.hidden_dim,
            num_layers=config.mt_layers,
            rng=rng,
        )
    return DecoderHead(spec.kind, params)


def build_model(
    config: ModelConfig,
    table: EmbeddingTable | None,
    head_specs: Mapping[str, HeadSpec],
    master_seed: int,
) -> SprlModel:
    """Assemble a model with deterministic, purpose-named initialization.

    The encoder and every head draw from independent seeded streams, so a
    model with heads {A} and one with heads {A, B} share identical A and
    encoder weights for the same master seed.
    """
    if table is not None and table.dim != config.input_dim:
        raise ConfigError(
            f"embedding dim {table.dim} does not match configured input dim {config.input_dim}"
        )
    enc_rng = np.random.default_rng(seed_for(master_seed, "init.encoder"))
    encoder = init_encoder(config.input_dim, config.hidden_dim, enc_rng)
    heads = {}
    for name in sorted(head_specs):
        rng = np.random.default_rng(seed_for(master_seed, f"init.dec.{name}"))
        heads[name] = build_head(head_specs[name], config, rng)
    return SprlModel(table=table, encoder=encoder, heads=heads, config=config)


# ---------------------------------------------------------------------------
# forward passes


def instance_states(model: SprlModel, inst: Instance) -> list[ad.Tensor]:
    return encode(inst.tokens, model.require_table(), model.encoder)


def spr_score_vector_for(model: SprlModel, task: str, inst: Instance) -> ad.Tensor:
    head = model.head(task)
    if head.kind not in SPR_KINDS:
        raise ContractError(f"task {task!r} is {head.kind}, not a proto-role task")
    states = instance_states(model, inst)
    h_ea = pair_state(states, inst.pred_head, inst.arg_head)
    return dec.spr_score_vector(h_ea, head.params)


def label_vector(inst: Instance, catalog: PropertyCatalog, kind: str) -> np.ndarray:
    """Instance labels in catalog order, as floats (binary) or reals (scalar)."""
    values = []
    for prop in catalog:
        if prop not in inst.labels:
            raise DataIntegrityError(
                f"{inst.sentence_id}: missing label for property {prop!r}"
            )
        values.append(inst.labels[prop])
    if kind == "spr-binary":
        return np.array([bool(v) for v in values])
    return np.array([float(v) for v in values])


def instance_loss(
    model: SprlModel,
    task: str,
    item,
    property_weights: np.ndarray | None = None,
) -> ad.Tensor:
    """The training loss of one instance under one task's decoder.

    ``property_weights`` applies only to proto-role tasks and reweights the
    per-property loss terms (used by the learning-curve ablation).
    """
    head = model.head(task)
    if head.kind in SPR_KINDS:
        score_vec = spr_score_vector_for(model, task, item)
        labels = label_vector(item, head.params.catalog, head.kind)
        if head.kind == "spr-binary":
            return dec.binary_loss_vector(score_vec, labels, property_weights)
        return dec.scalar_loss_vector(score_vec, labels, property_weights)
    if property_weights is not None:
        raise ContractError("property weights apply only to proto-role tasks")
    if head.kind == "propbank":
        if item.propbank_role is None:
            raise DataIntegrityError(f"{item.sentence_id}: no PropBank role")
        try:
            gold = head.params.roles.index(item.propbank_role)
        except ValueError:
            raise DataIntegrityError(
                f"{item.sentence_id}: role {item.propbank_role!r} not in catalog"
            ) from None
        states = instance_states(model, item)
        h_ea = pair_state(states, item.pred_head, item.arg_head)
        _, loss = dec.propbank_forward(h_ea, head.params, gold)
        return loss
    if head.kind == "supersense":
        if item.supersense is None:
            raise DataIntegrityError(f"{item.sentence_id}: no supersense distribution")
        gold = distribution_vector(item.supersense, head.params.supersenses)
        states = instance_states(model, item)
        _, loss = dec.supersense_forward(states[item.arg_head], head.params, gold)
        return loss
    # translation
    if not isinstance(item, SentencePair):
        raise ContractError("translation tasks train on sentence pairs")
    return dec.mt_sequence_loss(
        item.src, item.ref, model.require_table(), model.encoder, head.params
    )


def spr_scores_matrix(model: SprlModel, task: str, instances: Sequence[Instance]) -> np.ndarray:
    """Raw decoder scores for many instances, rows in instance order."""
    head = model.head(task)
    out = np.empty((len(instances), len(head.params.catalog)), dtype=np.float64)
    for i, inst in enumerate(instances):
        out[i] = spr_score_vector_for(model, task, inst).data
    return out


def gold_matrix(task_kind: str, catalog: PropertyCatalog, instances: Sequence[Instance]) -> np.ndarray:
    rows = [label_vector(inst, catalog, task_kind) for inst in instances]
    return np.stack(rows) if rows else np.zeros((0, len(catalog)))


def mean_loss(model: SprlModel, task: str, dataset: Sequence) -> float:
    """Forward-only mean loss over a dataset (used as an aux dev metric)."""
    if not dataset:
        raise ContractError("mean_loss over an empty dataset")
    total = 0.0
    for item in dataset:
        total += instance_loss(model, task, item).item()
    return total / len(dataset)


# ---------------------------------------------------------------------------
# parameter snapshots (epoch selection, ablation cells)


def snapshot_params(model: SprlModel) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in model.named_tensors().items()}


def restore_params(model: SprlModel, snapshot: Mapping[str, np.ndarray]) -> None:
    tensors = model.named_tensors()
    if set(tensors) != set(snapshot):
        raise ContractError("snapshot does not match the model's parameter set")
    for name, t in tensors.items():
        if snapshot[name].shape != t.data.shape:
            raise ContractError(
                f"snapshot tensor {name} has shape {snapshot[name].shape}, "
                f"model expects {t.data.shape}"
            )
        t.data[...] = snapshot[name]
