"""Training loops, multi-task regimes, epoch selection, the learning-curve
ablation, and checkpoint serialization."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .data import PropertyCatalog, sample_fraction
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DivergenceError,
    DomainError,
)
from .evaluation import (
    BinaryCounts,
    aggregate,
    binary_report,
    counts_from_predictions,
    f1,
    pearson_with_flag,
    scalar_report,
)
from .model import (
    HeadSpec,
    ModelConfig,
    SprlModel,
    build_model,
    gold_matrix,
    instance_loss,
    mean_loss,
    restore_params,
    snapshot_params,
    spr_scores_matrix,
)
from .optim import Adam, clip_global_norm
from .seeding import seed_for

LAMBDA_GRID = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)

CHECKPOINT_VERSION = 1


@dataclass
class TaskSpec:
    """One training task: its data, decoder kind, and loss weighting."""

    name: str
    kind: str
    train: list
    dev: list | None = None
    test: list | None = None
    role: str = "target"
    alpha: float = 1.0
    lam: float = 1.0
    catalog: PropertyCatalog | None = None
    roles: tuple[str, ...] | None = None
    supersenses: tuple[str, ...] | None = None
    vocab: dict[str, int] | None = None

    def __post_init__(self):
        if self.role not in ("target", "auxiliary"):
            raise ConfigError(f"task role must be target or auxiliary, got {self.role!r}")
        if self.role == "target" and (self.alpha != 1.0 or self.lam != 1.0):
            raise ConfigError("target tasks must have alpha = lambda = 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lambda must lie in [0, 1]")

    @property
    def weight(self) -> float:
        """Effective loss multiplier for one instance of this task."""
        return 1.0 if self.role == "target" else self.alpha * self.lam

    def head_spec(self) -> HeadSpec:
        return HeadSpec(
            kind=self.kind,
            catalog=self.catalog,
            roles=self.roles,
            supersenses=self.supersenses,
            vocab=self.vocab,
        )


@dataclass
class TrainConfig:
    """Everything one training run needs besides the embedding table."""

    tasks: list[TaskSpec]
    regime: str = "single"
    epochs: int = 10
    lr: float = 1e-3
    seed: int = 0
    clip_norm: float = 5.0
    selection_metric: str = "auto"
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.regime not in ("single", "concurrent", "init-pretrain", "combined"):
            raise ConfigError(f"unknown regime {self.regime!r}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")

    def target(self) -> TaskSpec:
        targets = [t for t in self.tasks if t.role == "target"]
        if len(targets) != 1:
            raise ConfigError(f"expected exactly one target task, found {len(targets)}")
        return targets[0]


def mixing_weight(n_target: int, n_aux: int) -> float:
    """Auxiliary-loss multiplier proportional to the dataset-size ratio."""
    if n_target <= 0 or n_aux <= 0:
        raise DomainError(f"dataset sizes must be positive, got {n_target} and {n_aux}")
    return n_target / n_aux


def schedule_epoch(tasks: Sequence[TaskSpec], seed: int) -> list[tuple[str, int]]:
    """A seeded permutation of every task's training instances.

    Returns (task name, index-into-task-train) pairs; each instance appears
    exactly once per epoch.
    """
    pool = [(t.name, i) for t in tasks for i in range(len(t.train))]
    if not pool:
        raise DomainError("no training instances in any task")
    order = np.random.default_rng(seed).permutation(len(pool))
    return [pool[i] for i in order]


def train_step(
    model: SprlModel,
    task: TaskSpec,
    item,
    optimizer: Adam,
    clip_norm: float = 5.0,
    property_weights: np.ndarray | None = None,
) -> float:
    """One forward/backward/update on a single instance.

    The loss is scaled by the task's effective weight before
    differentiation; a zero weight is a no-op (parameters untouched).
    Returns the scaled loss value.
    """
    w = task.weight
    if w == 0.0:
        return 0.0
    loss = instance_loss(model, task.name, item, property_weights)
    if w != 1.0:
        loss = ad.scale(loss, w)
    value = loss.item()
    if not np.isfinite(value):
        raise DivergenceError(item.sentence_id, value)
    grads = ad.backward(loss)
    clip_global_norm(grads, clip_norm)
    optimizer.step(grads)
    return value


# ---------------------------------------------------------------------------
# dev metrics and epoch selection


def spr_property_counts(
    model: SprlModel, task: str, instances: Sequence
) -> dict[str, BinaryCounts]:
    catalog = model.head(task).params.catalog
    scores = spr_scores_matrix(model, task, instances)
    golds = gold_matrix("spr-binary", catalog, instances)
    return {
        prop: counts_from_predictions(scores[:, j] > 0.0, golds[:, j].astype(bool))
        for j, prop in enumerate(catalog)
    }


def spr_property_pearson(
    model: SprlModel, task: str, instances: Sequence
) -> dict[str, tuple[float, bool]]:
    catalog = model.head(task).params.catalog
    scores = spr_scores_matrix(model, task, instances)
    golds = gold_matrix("spr-scalar", catalog, instances)
    return {
        prop: pearson_with_flag(scores[:, j], golds[:, j])
        for j, prop in enumerate(catalog)
    }


def selection_metric_for(kind: str, requested: str = "auto") -> str:
    if requested != "auto":
        return requested
    return {
        "spr-binary": "micro_f1",
        "spr-scalar": "macro_avg_pearson",
        "propbank": "neg_mean_loss",
        "supersense": "neg_mean_loss",
        "mt": "neg_mean_loss",
    }[kind]


def evaluate_metric(model: SprlModel, task: TaskSpec, dataset: Sequence, metric: str) -> float:
    """One scalar dev metric, oriented so that higher is always better."""
    if metric == "micro_f1":
        return aggregate(spr_property_counts(model, task.name, dataset))[0]
    if metric == "macro_f1":
        return aggregate(spr_property_counts(model, task.name, dataset))[1]
    if metric == "macro_avg_pearson":
        per_prop = spr_property_pearson(model, task.name, dataset)
        return float(np.mean([r for r, _ in per_prop.values()]))
    if metric == "neg_mean_loss":
        return -mean_loss(model, task.name, dataset)
    raise ConfigError(f"unknown selection metric {metric!r}")


def full_report(model: SprlModel, task: TaskSpec, dataset: Sequence, split: str, epoch: int):
    kind = model.head(task.name).kind
    if kind == "spr-binary":
        return binary_report(spr_property_counts(model, task.name, dataset), split, epoch)
    if kind == "spr-scalar":
        catalog = model.head(task.name).params.catalog
        scores = spr_scores_matrix(model, task.name, dataset)
        golds = gold_matrix("spr-scalar", catalog, dataset)
        preds = {prop: scores[:, j] for j, prop in enumerate(catalog)}
        gold_map = {prop: golds[:, j] for j, prop in enumerate(catalog)}
        return scalar_report(preds, gold_map, split, epoch)
    raise ContractError(f"no tabular report for task kind {kind!r}")


# ---------------------------------------------------------------------------
# the training loop


@dataclass
class TrainResult:
    model: SprlModel
    config: TrainConfig
    best_epoch: int
    metric_name: str
    best_metric: float | None
    history: list[dict]
    pretrain_history: list[dict] | None = None


def _fit(model: SprlModel, config: TrainConfig, stage: str) -> TrainResult:
    """The epoch loop shared by all regimes; mutates ``model`` in place.

    After every epoch the target task is scored on its dev split; the
    parameters of the best epoch (ties go to the earliest) are restored at
    the end.  Without a dev split the final epoch wins; with zero epochs
    the initialization is returned untouched.
    """
    target = config.target()
    by_name = {t.name: t for t in config.tasks}
    if len(by_name) != len(config.tasks):
        raise ConfigError("task names must be unique")
    optimizer = Adam(lr=config.lr)
    metric_name = selection_metric_for(target.kind, config.selection_metric)

    history: list[dict] = []
    best_epoch = 0
    best_metric: float | None = None
    best_snapshot = snapshot_params(model)

    for epoch in range(1, config.epochs + 1):
        stream = schedule_epoch(config.tasks, seed_for(config.seed, f"{stage}.schedule.{epoch}"))
        total = 0.0
        for task_name, idx in stream:
            spec = by_name[task_name]
            total += train_step(model, spec, spec.train[idx], optimizer, config.clip_norm)
        history.append(
            {
                "epoch": epoch,
                "task": "ALL",
                "split": "train",
                "metric": "mean_loss",
                "value": total / len(stream),
            }
        )
        if target.dev:
            value = evaluate_metric(model, target, target.dev, metric_name)
            history.append(
                {
                    "epoch": epoch,
                    "task": target.name,
                    "split": "dev",
                    "metric": metric_name,
                    "value": value,
                }
            )
            if best_metric is None or value > best_metric:
                best_metric = value
                best_epoch = epoch
                best_snapshot = snapshot_params(model)
        else:
            best_epoch = epoch
            best_snapshot = snapshot_params(model)

    restore_params(model, best_snapshot)
    return TrainResult(
        model=model,
        config=config,
        best_epoch=best_epoch,
        metric_name=metric_name,
        best_metric=best_metric,
        history=history,
    )


def train(config: TrainConfig, table, stage: str = "main") -> TrainResult:
    """Build a model from the config's seed and run one training phase."""
    head_specs = {t.name: t.head_spec() for t in config.tasks}
    model = build_model(config.model, table, head_specs, config.seed)
    return _fit(model, config, stage)


def pretrain_then_finetune(aux_config: TrainConfig, target_config: TrainConfig, table) -> TrainResult:
    """Pretrain the encoder on auxiliary tasks, then train the target run.

    The encoder weights carry over exactly; auxiliary decoders are
    discarded and the target run builds its own decoders from its seed.
    Everything (encoder included) keeps updating during the target phase.
    """
    if aux_config.model.hidden_dim != target_config.model.hidden_dim or (
        aux_config.model.input_dim != target_config.model.input_dim
    ):
        raise ConfigError(
            "pretraining and target configs must agree on encoder dimensions"
        )
    pre = train(aux_config, table, stage="pretrain")

    head_specs = {t.name: t.head_spec() for t in target_config.tasks}
    model = build_model(target_config.model, table, head_specs, target_config.seed)
    # graft the pretrained encoder
    model.encoder = pre.model.encoder

    result = _fit(model, target_config, stage="main")
    result.pretrain_history = pre.history
    return result


def history_to_csv(history: Sequence[Mapping]) -> str:
    lines = ["epoch,task,split,metric,value"]
    for row in history:
        lines.append(
            f"{row['epoch']},{row['task']},{row['split']},{row['metric']},{row['value']!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# learning-curve ablation


ABLATION_MODES = ("target-only", "co-train")


def ablation_run(
    config: TrainConfig,
    prop: str,
    fractions: Sequence[float],
    modes: Sequence[str],
    seeds: Sequence[int],
    table,
    co_lambda: float = 0.1,
) -> list[dict]:
    """Data-fraction curves for one property.

    In target-only mode, training sees just the subsampled instances and
    only the target property's loss.  In co-train mode, training sees every
    instance: the other properties contribute loss everywhere (weight
    ``co_lambda``), while the target property contributes only on the
    subsample.  All cells for one seed start from the same initialization.
    Rows report the dev-selected epoch's dev and test F1 for the property.
    """
    target = config.target()
    if target.kind != "spr-binary":
        raise ConfigError("the ablation protocol is defined for binary proto-role tasks")
    catalog = target.catalog
    prop_idx = catalog.index(prop)
    for mode in modes:
        if mode not in ABLATION_MODES:
            raise ConfigError(f"unknown ablation mode {mode!r}")

    rows: list[dict] = []
    n = len(target.train)
    for seed in seeds:
        model = build_model(config.model, table, {target.name: target.head_spec()}, seed)
        init_snapshot = snapshot_params(model)
        sub_seed = seed_for(seed, f"subsample.{prop}")
        for fraction in fractions:
            sampled = set(sample_fraction(list(range(n)), fraction, sub_seed))
            n_pos = sum(
                1 for i in sampled if bool(target.train[i].labels[prop])
            )
            for mode in modes:
                restore_params(model, init_snapshot)
                optimizer = Adam(lr=config.lr)
                if mode == "target-only":
                    indices = sorted(sampled)
                    weight_of = {
                        i: _one_hot(len(catalog), prop_idx) for i in indices
                    }
                else:
                    indices = list(range(n))
                    weight_of = {}
                    for i in indices:
                        w = np.full(len(catalog), co_lambda)
                        w[prop_idx] = 1.0 if i in sampled else 0.0
                        weight_of[i] = w

                best_epoch, best_dev = 0, None
                best_snapshot = snapshot_params(model)
                for epoch in range(1, config.epochs + 1):
                    order = np.random.default_rng(
                        seed_for(seed, f"ablate.{prop}.{fraction}.{mode}.schedule.{epoch}")
                    ).permutation(len(indices))
                    for k in order:
                        i = indices[k]
                        train_step(
                            model, target, target.train[i], optimizer,
                            config.clip_norm, property_weights=weight_of[i],
                        )
                    dev_f1 = _property_f1(model, target, target.dev, prop_idx)
                    if best_dev is None or dev_f1 > best_dev:
                        best_dev, best_epoch = dev_f1, epoch
                        best_snapshot = snapshot_params(model)
                restore_params(model, best_snapshot)
                test_f1 = _property_f1(model, target, target.test, prop_idx)

                common = {
                    "property": prop,
                    "fraction": fraction,
                    "mode": mode,
                    "seed": seed,
                    "epoch": best_epoch,
                }
                rows.append({**common, "split": "dev", "metric": "f1", "value": best_dev})
                rows.append({**common, "split": "test", "metric": "f1", "value": test_f1})
                if n_pos == 0:
                    rows.append(
                        {**common, "split": "train", "metric": "flag_zero_positives",
                         "value": 1.0}
                    )
    return rows


def _one_hot(n: int, i: int) -> np.ndarray:
    w = np.zeros(n)
    w[i] = 1.0
    return w


def _property_f1(model: SprlModel, task: TaskSpec, dataset: Sequence, prop_idx: int) -> float:
    if not dataset:
        raise ConfigError("ablation needs dev and test splits on the target task")
    scores = spr_scores_matrix(model, task.name, dataset)
    golds = gold_matrix("spr-binary", task.catalog, dataset)
    counts = counts_from_predictions(scores[:, prop_idx] > 0.0, golds[:, prop_idx].astype(bool))
    return f1(counts)[2]


def ablation_to_csv(rows: Sequence[Mapping]) -> str:
    lines = ["property,fraction,mode,seed,epoch,split,metric,value"]
    for row in rows:
        lines.append(
            f"{row['property']},{row['fraction']!r},{row['mode']},{row['seed']},"
            f"{row['epoch']},{row['split']},{row['metric']},{row['value']!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# lambda grid


def lambda_grid(
    make_config,
    lambdas: Sequence[float],
    table,
) -> list[dict]:
    """Train once per lambda value and tabulate the dev-selected metrics.

    ``make_config(lam)`` must return a fresh TrainConfig with the auxiliary
    tasks' lambda set to ``lam``.
    """
    rows = []
    for lam in lambdas:
        result = train(make_config(lam), table)
        rows.append(
            {
                "lambda": lam,
                "metric": result.metric_name,
                "best_epoch": result.best_epoch,
                "value": result.best_metric,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# checkpoints


def _head_meta(spec_kind: str, params) -> dict:
    if spec_kind in ("spr-binary", "spr-scalar"):
        return {
            "kind": spec_kind,
            "catalog": list(params.catalog.names),
            "activation": params.activation,
            "hidden_dim": params.w_shared.shape[0],
        }
    if spec_kind == "propbank":
        return {"kind": spec_kind, "roles": list(params.roles)}
    if spec_kind == "supersense":
        return {"kind": spec_kind, "supersenses": list(params.supersenses)}
    vocab_in_order = [t for t, _ in sorted(params.vocab.items(), key=lambda kv: kv[1])]
    return {"kind": spec_kind, "vocab": vocab_in_order, "layers": len(params.layers)}


def save_checkpoint(
    model: SprlModel,
    path,
    epoch: int = 0,
    dev_metric: Mapping | None = None,
    config_fingerprint: str = "",
) -> None:
    """Write a text header plus raw little-endian float64 tensor data."""
    tensors = model.named_tensors()
    header = {
        "format": "sprl-checkpoint",
        "version": CHECKPOINT_VERSION,
        "tensors": [{"name": n, "shape": list(t.data.shape)} for n, t in tensors.items()],
        "model": {
            "input_dim": model.config.input_dim,
            "hidden_dim": model.config.hidden_dim,
            "spr_hidden_dim": model.config.spr_hidden_dim,
            "activation": model.config.activation,
            "mt_layers": model.config.mt_layers,
            "heads": {
                name: _head_meta(head.kind, head.params)
                for name, head in sorted(model.heads.items())
            },
        },
        "epoch": epoch,
        "dev_metric": dict(dev_metric) if dev_metric else None,
        "config_fingerprint": config_fingerprint,
        "embedding": None,
    }
    if model.table is not None:
        header["embedding"] = {
            "dim": model.table.dim,
            "rows": len(model.table),
            "sha256": hashlib.sha256(model.table.matrix.tobytes()).hexdigest(),
        }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8") + b"\n"
    with open(path, "wb") as fh:
        fh.write(blob)
        for t in tensors.values():
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path, table=None) -> tuple[SprlModel, dict]:
    """Rebuild a model from a checkpoint; bit-exact inverse of save.

    The frozen embedding table is not stored; pass the same table to get a
    usable model (its fingerprint is checked against the header).
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise CheckpointError("missing header terminator")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from None
    if header.get("format") != "sprl-checkpoint":
        raise CheckpointError("not a checkpoint file")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {header.get('version')!r}"
        )

    config = ModelConfig(
        input_dim=header["model"]["input_dim"],
        hidden_dim=header["model"]["hidden_dim"],
        spr_hidden_dim=header["model"]["spr_hidden_dim"],
        activation=header["model"]["activation"],
        mt_layers=header["model"]["mt_layers"],
    )
    specs = {}
    for name, meta in header["model"]["heads"].items():
        kind = meta["kind"]
        if kind in ("spr-binary", "spr-scalar"):
            specs[name] = HeadSpec(kind, catalog=PropertyCatalog(tuple(meta["catalog"])))
            if meta["hidden_dim"] != config.spr_hidden_dim or meta["activation"] != config.activation:
                raise CheckpointError(f"head {name!r} metadata disagrees with model config")
        elif kind == "propbank":
            specs[name] = HeadSpec(kind, roles=tuple(meta["roles"]))
        elif kind == "supersense":
            specs[name] = HeadSpec(kind, supersenses=tuple(meta["supersenses"]))
        elif kind == "mt":
            specs[name] = HeadSpec(kind, vocab={t: i for i, t in enumerate(meta["vocab"])})
        else:
            raise CheckpointError(f"unknown head kind {kind!r}")

    if table is not None and header.get("embedding"):
        if table.dim != header["embedding"]["dim"]:
            raise CheckpointError(
                f"embedding dim {table.dim} differs from checkpointed "
                f"{header['embedding']['dim']}"
            )
        sha = hashlib.sha256(table.matrix.tobytes()).hexdigest()
        if sha != header["embedding"]["sha256"]:
            warnings.warn("embedding table differs from the one used at save time")

    model = build_model(config, table, specs, master_seed=0)
    tensors = model.named_tensors()
    names = [entry["name"] for entry in header["tensors"]]
    if set(names) != set(tensors):
        raise CheckpointError("checkpoint tensor names do not match the model")

    data = raw[newline + 1 :]
    offset = 0
    for entry in header["tensors"]:
        t = tensors[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != t.data.shape:
            raise CheckpointError(
                f"tensor {entry['name']} has shape {shape}, expected {t.data.shape}"
            )
        nbytes = int(np.prod(shape)) * 8
        if offset + nbytes > len(data):
            raise CheckpointError("checkpoint is truncated")
        t.data[...] = np.frombuffer(
            data, dtype="<f8", count=int(np.prod(shape)), offset=offset
        ).reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("checkpoint has trailing bytes")

    meta = {
        "epoch": header["epoch"],
        "dev_metric": header["dev_metric"],
        "config_fingerprint": header["config_fingerprint"],
        "embedding": header["embedding"],
    }
    return model, meta
