"""Command-line entry point: prep, train, eval, ablate, compare.

Every run is driven by a JSON config plus a master seed; a manifest with
resolved settings and dataset fingerprints is written before training so
any experiment can be reproduced bit-exactly.

Exit codes: 0 success; 1 usage or configuration problem; 2 data problem;
3 numeric divergence during training.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    EmbeddingTable,
    NOUN_SUPERSENSES,
    PROPBANK_ROLES,
    PropertyCatalog,
    SPR1_PROPERTIES,
    SPR2_PROPERTIES,
    check_labels,
    dataset_fingerprint,
    instance_from_record,
    load_dataset,
    load_embeddings,
    load_parallel,
    mean_gold_perplexity,
    vocabulary_of,
    write_jsonl,
    _RECORD_KEYS,
    _REQUIRED_KEYS,
)
from .decoders import make_target_vocab, binary_prob
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DataFormatError,
    DataIntegrityError,
    DivergenceError,
    DomainError,
    FrameLookupError,
    ProtoRoleError,
)
from .evaluation import contingency_delta, disagreement_sample, report_to_csv
from .model import ModelConfig, gold_matrix, spr_scores_matrix
from .seeding import seed_for
from .training import (
    ABLATION_MODES,
    TaskSpec,
    TrainConfig,
    ablation_run,
    ablation_to_csv,
    full_report,
    history_to_csv,
    load_checkpoint,
    mixing_weight,
    pretrain_then_finetune,
    save_checkpoint,
    train,
)

_CATALOG_ALIASES = {
    "spr1": SPR1_PROPERTIES,
    "spr2": SPR2_PROPERTIES,
}

_CONFIG_KEYS = {
    "regime", "seed", "epochs", "lr", "clip_norm", "selection_metric",
    "model", "embeddings", "tasks", "pretrain",
}
_MODEL_KEYS = {"input_dim", "hidden_dim", "spr_hidden_dim", "activation", "mt_layers"}
_EMBEDDING_KEYS = {"path", "random", "dim"}
_TASK_KEYS = {
    "name", "kind", "role", "train", "dev", "test",
    "catalog", "roles", "supersenses", "vocab_size", "alpha", "lambda",
}
_PRETRAIN_KEYS = {"epochs", "tasks"}


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


# ---------------------------------------------------------------------------
# config loading


def _resolve_config(raw: dict) -> dict:
    """Materialize every default; unknown keys anywhere are errors."""
    _reject_unknown(raw, _CONFIG_KEYS, "config")
    resolved = {
        "regime": raw.get("regime", "single"),
        "seed": int(raw.get("seed", 0)),
        "epochs": int(raw.get("epochs", 10)),
        "lr": float(raw.get("lr", 1e-3)),
        "clip_norm": float(raw.get("clip_norm", 5.0)),
        "selection_metric": raw.get("selection_metric", "auto"),
    }
    model = dict(raw.get("model", {}))
    _reject_unknown(model, _MODEL_KEYS, "config.model")
    resolved["model"] = {
        "input_dim": int(model.get("input_dim", 300)),
        "hidden_dim": int(model.get("hidden_dim", 600)),
        "spr_hidden_dim": int(model.get("spr_hidden_dim", 300)),
        "activation": model.get("activation", "relu"),
        "mt_layers": int(model.get("mt_layers", 2)),
    }
    emb = dict(raw.get("embeddings", {"random": True, "dim": resolved["model"]["input_dim"]}))
    _reject_unknown(emb, _EMBEDDING_KEYS, "config.embeddings")
    resolved["embeddings"] = {
        "path": emb.get("path"),
        "random": bool(emb.get("random", emb.get("path") is None)),
        "dim": int(emb.get("dim", resolved["model"]["input_dim"])),
    }
    if resolved["embeddings"]["path"] is None and not resolved["embeddings"]["random"]:
        raise ConfigError("embeddings need either a path or random: true")
    if resolved["embeddings"]["dim"] != resolved["model"]["input_dim"]:
        raise ConfigError("embeddings.dim must equal model.input_dim")

    tasks = raw.get("tasks")
    if not tasks:
        raise ConfigError("config.tasks is required and must be non-empty")
    resolved["tasks"] = [_resolve_task(t, i) for i, t in enumerate(tasks)]

    if "pretrain" in raw:
        pre = dict(raw["pretrain"])
        _reject_unknown(pre, _PRETRAIN_KEYS, "config.pretrain")
        if not pre.get("tasks"):
            raise ConfigError("config.pretrain.tasks must be non-empty")
        resolved["pretrain"] = {
            "epochs": int(pre.get("epochs", 10)),
            "tasks": [_resolve_task(t, i) for i, t in enumerate(pre["tasks"])],
        }
    regime = resolved["regime"]
    if regime in ("init-pretrain", "combined") and "pretrain" not in resolved:
        raise ConfigError(f"regime {regime!r} requires a config.pretrain block")
    if regime in ("single", "concurrent") and "pretrain" in resolved:
        raise ConfigError(f"regime {regime!r} does not take a pretrain block")
    if regime == "single" and len(resolved["tasks"]) != 1:
        raise ConfigError("regime 'single' takes exactly one task")
    return resolved


def _resolve_task(t: dict, index: int) -> dict:
    _reject_unknown(t, _TASK_KEYS, f"config.tasks[{index}]")
    for key in ("name", "kind", "train"):
        if key not in t:
            raise ConfigError(f"config.tasks[{index}] is missing {key!r}")
    return {
        "name": t["name"],
        "kind": t["kind"],
        "role": t.get("role", "target"),
        "train": t["train"],
        "dev": t.get("dev"),
        "test": t.get("test"),
        "catalog": t.get("catalog"),
        "roles": t.get("roles"),
        "supersenses": t.get("supersenses"),
        "vocab_size": t.get("vocab_size"),
        "alpha": t.get("alpha", 1.0 if t.get("role", "target") == "target" else "auto"),
        "lambda": float(t.get("lambda", 1.0)),
    }


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return _resolve_config(raw)


def _catalog_from_spec(spec) -> PropertyCatalog | None:
    if spec is None:
        return None
    if isinstance(spec, str):
        try:
            return PropertyCatalog(_CATALOG_ALIASES[spec])
        except KeyError:
            raise ConfigError(f"unknown catalog alias {spec!r}") from None
    return PropertyCatalog(tuple(spec))


def _build_tasks(task_dicts: list[dict], fingerprints: dict) -> list[TaskSpec]:
    """Load datasets and construct TaskSpec objects; resolves 'auto' alphas."""
    specs = []
    for t in task_dicts:
        kind = t["kind"]
        datasets = {}
        for split in ("train", "dev", "test"):
            path = t[split]
            if path is None:
                datasets[split] = None
                continue
            fingerprints[str(path)] = dataset_fingerprint(path)
            if kind == "mt":
                datasets[split] = load_parallel(path)
            elif kind in ("spr-binary", "spr-scalar"):
                mode = kind.split("-", 1)[1]
                datasets[split] = load_dataset(path, mode)
            else:
                datasets[split] = load_dataset(path, "binary")
        if not datasets["train"]:
            raise DataIntegrityError(f"task {t['name']!r} has an empty training set")

        catalog = roles = supersenses = vocab = None
        if kind in ("spr-binary", "spr-scalar"):
            catalog = _catalog_from_spec(t["catalog"])
            if catalog is None:
                catalog = PropertyCatalog.from_instances(datasets["train"])
            mode = kind.split("-", 1)[1]
            for split in ("train", "dev", "test"):
                for inst in datasets[split] or ():
                    check_labels(inst, catalog, mode)
        elif kind == "propbank":
            roles = tuple(t["roles"]) if t["roles"] else PROPBANK_ROLES
            for inst in datasets["train"]:
                if inst.propbank_role is None:
                    raise DataIntegrityError(
                        f"{inst.sentence_id}: task {t['name']!r} needs propbank_role"
                    )
        elif kind == "supersense":
            supersenses = tuple(t["supersenses"]) if t["supersenses"] else NOUN_SUPERSENSES
            for inst in datasets["train"]:
                if inst.supersense is None:
                    raise DataIntegrityError(
                        f"{inst.sentence_id}: task {t['name']!r} needs supersense counts"
                    )
        elif kind == "mt":
            vocab = make_target_vocab(
                [p.ref for p in datasets["train"]], max_size=t["vocab_size"]
            )
        else:
            raise ConfigError(f"unknown task kind {kind!r}")

        specs.append(
            TaskSpec(
                name=t["name"],
                kind=kind,
                train=datasets["train"],
                dev=datasets["dev"],
                test=datasets["test"],
                role=t["role"],
                alpha=1.0,  # placeholder until auto-resolution below
                lam=t["lambda"] if t["role"] == "auxiliary" else 1.0,
                catalog=catalog,
                roles=roles,
                supersenses=supersenses,
                vocab=vocab,
            )
        )

    targets = [s for s in specs if s.role == "target"]
    if len(targets) == 1:
        n_target = len(targets[0].train)
        for spec, t in zip(specs, task_dicts):
            if spec.role != "auxiliary":
                continue
            alpha = t["alpha"]
            spec.alpha = (
                mixing_weight(n_target, len(spec.train)) if alpha == "auto" else float(alpha)
            )
    return specs


def _build_table(emb_cfg: dict, vocabulary: set[str], seed: int) -> EmbeddingTable:
    oov_seed = seed_for(seed, "oov")
    if emb_cfg["path"]:
        return load_embeddings(emb_cfg["path"], vocabulary, oov_seed, emb_cfg["dim"])
    return EmbeddingTable.random(vocabulary, emb_cfg["dim"], oov_seed)


def _encoder_vocabulary(tasks: list[TaskSpec]) -> set[str]:
    vocab: set[str] = set()
    for spec in tasks:
        for split in (spec.train, spec.dev, spec.test):
            if not split:
                continue
            if spec.kind == "mt":
                for pair in split:
                    vocab.update(tok.lower() for tok in pair.src)
            else:
                vocab |= vocabulary_of(split)
    return vocab


def _fingerprint(resolved: dict) -> str:
    return hashlib.sha256(json.dumps(resolved, sort_keys=True).encode()).hexdigest()


def _write_manifest(out_dir: Path, resolved: dict, fingerprints: dict) -> None:
    manifest = {
        "tool": "protorole",
        "version": __version__,
        "created_utc": _utc_now(),
        "master_seed": resolved["seed"],
        "config": resolved,
        "config_fingerprint": _fingerprint(resolved),
        "datasets": fingerprints,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# prep


def cmd_prep(args) -> int:
    out_dir = Path(args.out_dir)
    inputs = [(s, getattr(args, s)) for s in ("train", "dev", "test") if getattr(args, s)]
    if not inputs:
        raise ConfigError("prep needs at least one of --train/--dev/--test")

    converted: dict[str, list[dict]] = {}
    diagnostics: list[str] = []
    for split, path in inputs:
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    if not isinstance(rec, dict):
                        raise DataFormatError("record is not an object")
                    for key in _REQUIRED_KEYS:
                        if key not in rec:
                            raise DataFormatError(f"missing field {key!r}")
                    unknown = set(rec) - set(_RECORD_KEYS)
                    if unknown:
                        raise DataFormatError(f"unknown fields {sorted(unknown)}")
                    inst = instance_from_record(rec, args.mode)
                    out = dict(rec)
                    out["labels"] = {
                        p: (bool(v) if args.mode == "binary" else float(v))
                        for p, v in inst.labels.items()
                    }
                    records.append(out)
                except (json.JSONDecodeError, ProtoRoleError, ValueError) as exc:
                    diagnostics.append(f"{path}:{lineno}: {exc}")
        if not records and not diagnostics:
            diagnostics.append(f"{path}: empty input file")
        converted[split] = records

    if diagnostics:
        for d in diagnostics:
            print(d, file=sys.stderr)
        return 2

    out_dir.mkdir(parents=True, exist_ok=True)
    for split, records in converted.items():
        write_jsonl(records, out_dir / f"{split}.jsonl")

    for split, records in converted.items():
        instances = [instance_from_record(r, args.mode) for r in records]
        print(f"{split}: {len(instances)} instances")
        props = sorted({p for inst in instances for p in inst.labels})
        for prop in props:
            values = [inst.labels[prop] for inst in instances if prop in inst.labels]
            if args.mode == "binary":
                rate = sum(bool(v) for v in values) / len(values)
                print(f"  {prop}: positive rate {rate:.3f}")
            else:
                print(f"  {prop}: mean {float(np.mean(values)):.3f}")
        if any(inst.supersense for inst in instances):
            print(f"  supersense mean perplexity {mean_gold_perplexity(instances):.3f}")
    return 0


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    resolved = _load_config_file(args.config)
    if args.seed is not None:
        resolved["seed"] = args.seed
    if args.regime is not None:
        resolved["regime"] = args.regime
    if args.lam is not None:
        for t in resolved["tasks"]:
            if t["role"] == "auxiliary":
                t["lambda"] = args.lam
        for t in resolved.get("pretrain", {}).get("tasks", []):
            if t["role"] == "auxiliary":
                t["lambda"] = args.lam

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fingerprints: dict[str, str] = {}
    tasks = _build_tasks(resolved["tasks"], fingerprints)
    pre_tasks = None
    if "pretrain" in resolved:
        pre_tasks = _build_tasks(resolved["pretrain"]["tasks"], fingerprints)

    model_cfg = ModelConfig(**resolved["model"])
    all_tasks = tasks + (pre_tasks or [])
    table = _build_table(resolved["embeddings"], _encoder_vocabulary(all_tasks), resolved["seed"])

    _write_manifest(out_dir, resolved, fingerprints)

    config = TrainConfig(
        tasks=tasks,
        regime=resolved["regime"],
        epochs=resolved["epochs"],
        lr=resolved["lr"],
        seed=resolved["seed"],
        clip_norm=resolved["clip_norm"],
        selection_metric=resolved["selection_metric"],
        model=model_cfg,
    )
    if pre_tasks is not None:
        # pretraining stage selects on its own target task (first task acts
        # as target if none is marked)
        if not any(t.role == "target" for t in pre_tasks):
            pre_tasks[0].role = "target"
            pre_tasks[0].alpha = 1.0
            pre_tasks[0].lam = 1.0
        aux_config = TrainConfig(
            tasks=pre_tasks,
            regime="single" if len(pre_tasks) == 1 else "concurrent",
            epochs=resolved["pretrain"]["epochs"],
            lr=resolved["lr"],
            seed=resolved["seed"],
            clip_norm=resolved["clip_norm"],
            model=model_cfg,
        )
        result = pretrain_then_finetune(aux_config, config, table)
    else:
        result = train(config, table)

    (out_dir / "history.csv").write_text(history_to_csv(result.history), encoding="utf-8")
    if result.pretrain_history is not None:
        (out_dir / "pretrain_history.csv").write_text(
            history_to_csv(result.pretrain_history), encoding="utf-8"
        )
    dev_metric = None
    if result.best_metric is not None:
        dev_metric = {"name": result.metric_name, "value": result.best_metric}
    save_checkpoint(
        result.model,
        out_dir / "best.ckpt",
        epoch=result.best_epoch,
        dev_metric=dev_metric,
        config_fingerprint=_fingerprint(resolved),
    )
    if result.best_metric is None:
        print(f"finished {resolved['epochs']} epochs (no dev split; kept final epoch)")
    else:
        print(
            f"best epoch {result.best_epoch}: "
            f"{result.metric_name}={result.best_metric:.6f}"
        )
    print(f"artifacts in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _spr_heads(model) -> list[str]:
    return [n for n, h in model.heads.items() if h.kind in ("spr-binary", "spr-scalar")]


def cmd_eval_impl(args) -> int:
    # the checkpoint header tells us the task kind before any data mapping
    probe_model, meta = load_checkpoint(args.checkpoint, table=None)
    spr_tasks = _spr_heads(probe_model)
    task = args.task
    if task is None:
        if len(spr_tasks) != 1:
            raise ConfigError(
                f"checkpoint has {len(spr_tasks)} proto-role heads; pick one with --task"
            )
        task = spr_tasks[0]
    if task not in probe_model.heads:
        raise ConfigError(f"checkpoint has no task {task!r}")
    kind = probe_model.heads[task].kind
    if kind not in ("spr-binary", "spr-scalar"):
        raise ConfigError(f"task {task!r} is {kind}; eval covers proto-role tasks")
    mode = kind.split("-", 1)[1]
    if args.mode is not None and args.mode != mode:
        raise ConfigError(f"--mode {args.mode} conflicts with checkpointed task ({mode})")

    instances = load_dataset(args.data, mode)
    if not instances:
        raise DataIntegrityError(f"{args.data}: empty dataset")
    catalog = probe_model.heads[task].params.catalog
    for inst in instances:
        for prop in catalog:
            if prop not in inst.labels:
                raise ContractError(
                    f"{inst.sentence_id}: dataset lacks property {prop!r} "
                    "from the checkpoint catalog"
                )

    if args.embeddings:
        table = load_embeddings(
            args.embeddings, vocabulary_of(instances), seed_for(args.seed, "oov"), args.dim
        )
    else:
        table = EmbeddingTable.random(
            vocabulary_of(instances), probe_model.config.input_dim, seed_for(args.seed, "oov")
        )
    model, meta = load_checkpoint(args.checkpoint, table=table)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    spec = TaskSpec(name=task, kind=kind, train=instances, catalog=catalog)
    report = full_report(model, spec, instances, args.split_name, meta["epoch"])
    (out_dir / "metrics.csv").write_text(report_to_csv(report), encoding="utf-8")

    scores = spr_scores_matrix(model, task, instances)
    golds = gold_matrix(kind, catalog, instances)
    with open(out_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for i, inst in enumerate(instances):
            for j, prop in enumerate(catalog):
                row = {
                    "sentence_id": inst.sentence_id,
                    "property": prop,
                    "score": float(scores[i, j]),
                }
                if mode == "binary":
                    row["probability"] = binary_prob(scores[i, j])
                    row["prediction"] = bool(scores[i, j] > 0)
                    row["gold"] = bool(golds[i, j])
                else:
                    row["prediction"] = float(scores[i, j])
                    row["gold"] = float(golds[i, j])
                fh.write(json.dumps(row) + "\n")

    for metric, value in sorted(report.aggregates.items()):
        print(f"{metric}: {value:.6f}")
    print(f"artifacts in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# ablate


def cmd_ablate(args) -> int:
    resolved = _load_config_file(args.config)
    if args.seed is not None:
        resolved["seed"] = args.seed
    fingerprints: dict[str, str] = {}
    tasks = _build_tasks(resolved["tasks"], fingerprints)
    config = TrainConfig(
        tasks=tasks,
        regime=resolved["regime"],
        epochs=resolved["epochs"],
        lr=resolved["lr"],
        seed=resolved["seed"],
        clip_norm=resolved["clip_norm"],
        model=ModelConfig(**resolved["model"]),
    )
    target = config.target()
    if target.dev is None or target.test is None:
        raise ConfigError("ablation requires dev and test splits on the target task")

    table = _build_table(resolved["embeddings"], _encoder_vocabulary(tasks), resolved["seed"])
    fractions = [float(f) for f in args.fractions.split(",")]
    modes = args.modes.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, resolved, fingerprints)

    rows = ablation_run(
        config, args.property, fractions, modes, seeds, table, co_lambda=args.co_lambda
    )
    (out_dir / "curve.csv").write_text(ablation_to_csv(rows), encoding="utf-8")
    print(f"{len(rows)} rows -> {out_dir / 'curve.csv'}")
    return 0


# ---------------------------------------------------------------------------
# compare


def _read_predictions(path, prop: str) -> tuple[dict[str, bool], dict[str, bool]]:
    preds: dict[str, bool] = {}
    golds: dict[str, bool] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if row.get("property") != prop:
                continue
            sid = row["sentence_id"]
            if not isinstance(row.get("prediction"), bool):
                raise DataFormatError(
                    f"{path}:{lineno}: comparison needs boolean predictions"
                )
            preds[sid] = row["prediction"]
            golds[sid] = bool(row["gold"])
    if not preds:
        raise DataIntegrityError(f"{path}: no predictions for property {prop!r}")
    return preds, golds


def cmd_compare(args) -> int:
    preds_a, golds_a = _read_predictions(args.preds_a, args.property)
    preds_b, golds_b = _read_predictions(args.preds_b, args.property)
    if set(preds_a) != set(preds_b):
        raise DataIntegrityError("prediction files cover different instances")
    if golds_a != golds_b:
        raise DataIntegrityError("prediction files disagree on gold labels")
    golds = golds_a

    subsets: dict[str, list[str]] = {"all": sorted(golds)}
    if args.subset:
        ids = [
            line.strip()
            for line in Path(args.subset).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        subsets[Path(args.subset).stem] = ids

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["subset,differ,delta_false_neg,delta_false_pos"]
    for name, ids in subsets.items():
        differ, d_fn, d_fp = contingency_delta(preds_a, preds_b, golds, ids)
        lines.append(f"{name},{differ},{d_fn},{d_fp}")
    (out_dir / "contingency.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    sample = disagreement_sample(
        preds_a, preds_b, golds, args.n_true, args.n_false, args.seed
    )
    rows = ["sentence_id,gold,pred_a,pred_b"]
    for sid in sample.ids:
        rows.append(f"{sid},{golds[sid]},{preds_a[sid]},{preds_b[sid]}")
    (out_dir / "sample.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    if sample.short:
        parts = []
        if sample.shortfall_true:
            parts.append(f"{len(sample.true_ids)}/{args.n_true} gold-True")
        if sample.shortfall_false:
            parts.append(f"{len(sample.false_ids)}/{args.n_false} gold-False")
        print("shortfall: only " + " and ".join(parts) + " disagreements available")
    print(f"artifacts in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="protorole", description="Proto-role labeling experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", parents=[], help="convert raw annotation files")
    p.add_argument("--mode", choices=("binary", "scalar"), required=True)
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--test")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="run a training regime from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--regime", choices=("single", "concurrent", "init-pretrain", "combined"),
                   default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="override every auxiliary task's lambda")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", default=None)
    p.add_argument("--mode", choices=("binary", "scalar"), default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-name", default="test")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval_impl)

    p = sub.add_parser("ablate", help="data-fraction learning curves")
    p.add_argument("--config", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("--fractions", default="0.01,0.05,0.1,0.25,0.5,1.0")
    p.add_argument("--modes", default=",".join(ABLATION_MODES))
    p.add_argument("--seeds", default="0")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--co-lambda", type=float, default=0.1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("compare", help="contingency deltas between two systems")
    p.add_argument("--preds-a", required=True, help="baseline predictions file")
    p.add_argument("--preds-b", required=True, help="new-system predictions file")
    p.add_argument("--property", required=True)
    p.add_argument("--subset", default=None, help="file of instance ids, one per line")
    p.add_argument("--n-true", type=int, default=40)
    p.add_argument("--n-false", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        DataFormatError,
        DataIntegrityError,
        FrameLookupError,
        CheckpointError,
        DomainError,
        FileNotFoundError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
