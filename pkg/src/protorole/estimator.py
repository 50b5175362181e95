"""A scikit-learn style facade over the proto-role pipeline.

`ProtoRoleLabeler` wraps table construction, model building, and the
training loop behind fit/predict, so the model slots into sklearn
workflows (cloning, grid search over constructor params).  X is a sequence
of :class:`~protorole.data.Instance`; labels ride along on the instances,
so ``y`` is accepted but ignored.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import EmbeddingTable, Instance, PropertyCatalog, check_labels, vocabulary_of
from .errors import ContractError
from .evaluation import counts_from_predictions, aggregate, pearson_with_flag
from .model import ModelConfig, gold_matrix, spr_scores_matrix
from .seeding import seed_for
from .training import TaskSpec, TrainConfig, train


def _check_instances(X) -> list[Instance]:
    items = list(X)
    if not items:
        raise ContractError("X is empty")
    for x in items:
        if not isinstance(x, Instance):
            raise ContractError(f"X must contain Instance objects, got {type(x).__name__}")
    return items


class ProtoRoleLabeler(BaseEstimator):
    """Per-property proto-role predictions from predicate-argument pairs.

    Parameters mirror the training configuration; defaults are sized for
    interactive use, not for full-scale runs.

    mode : 'binary' predicts booleans per property (thresholded log-odds);
        'scalar' predicts unclamped real scores trained on [1,5] targets.
    dev_fraction : held-out share of the training data used for epoch
        selection; 0 keeps every instance for training and returns the
        final epoch.
    """

    def __init__(
        self,
        mode: str = "binary",
        hidden_dim: int = 64,
        spr_hidden_dim: int = 64,
        embedding_dim: int = 32,
        epochs: int = 5,
        learning_rate: float = 1e-3,
        clip_norm: float = 5.0,
        activation: str = "relu",
        dev_fraction: float = 0.0,
        seed: int = 0,
    ):
        self.mode = mode
        self.hidden_dim = hidden_dim
        self.spr_hidden_dim = spr_hidden_dim
        self.embedding_dim = embedding_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm
        self.activation = activation
        self.dev_fraction = dev_fraction
        self.seed = seed

    # ------------------------------------------------------------------
    def fit(self, X, y=None):
        if self.mode not in ("binary", "scalar"):
            raise ContractError(f"mode must be 'binary' or 'scalar', got {self.mode!r}")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ContractError("dev_fraction must lie in [0, 1)")
        items = _check_instances(X)
        catalog = PropertyCatalog.from_instances(items)
        for inst in items:
            check_labels(inst, catalog, self.mode)

        table = EmbeddingTable.random(
            vocabulary_of(items), self.embedding_dim, seed_for(self.seed, "oov")
        )

        train_items, dev_items = items, None
        if self.dev_fraction > 0:
            k = max(1, int(round(self.dev_fraction * len(items))))
            if k >= len(items):
                raise ContractError("dev_fraction leaves no training data")
            order = np.random.default_rng(seed_for(self.seed, "devsplit")).permutation(len(items))
            dev_idx = set(order[:k].tolist())
            train_items = [x for i, x in enumerate(items) if i not in dev_idx]
            dev_items = [x for i, x in enumerate(items) if i in dev_idx]

        task = TaskSpec(
            name="spr",
            kind=f"spr-{self.mode}",
            train=train_items,
            dev=dev_items,
            catalog=catalog,
        )
        config = TrainConfig(
            tasks=[task],
            epochs=self.epochs,
            lr=self.learning_rate,
            seed=self.seed,
            clip_norm=self.clip_norm,
            model=ModelConfig(
                input_dim=self.embedding_dim,
                hidden_dim=self.hidden_dim,
                spr_hidden_dim=self.spr_hidden_dim,
                activation=self.activation,
            ),
        )
        result = train(config, table)
        self.model_ = result.model
        self.properties_ = tuple(catalog.names)
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("this ProtoRoleLabeler instance is not fitted yet")

    # ------------------------------------------------------------------
    def decision_function(self, X) -> np.ndarray:
        """Raw per-property scores, shape (n_instances, n_properties)."""
        self._require_fitted()
        return spr_scores_matrix(self.model_, "spr", _check_instances(X))

    def predict(self, X) -> np.ndarray:
        """Boolean matrix in binary mode, real-valued scores in scalar mode."""
        scores = self.decision_function(X)
        return scores > 0.0 if self.mode == "binary" else scores

    def predict_proba(self, X) -> np.ndarray:
        """Per-property probabilities (binary mode only)."""
        if self.mode != "binary":
            raise ContractError("predict_proba is defined only for binary mode")
        scores = self.decision_function(X)
        z = np.exp(-np.abs(scores))
        return np.where(scores >= 0, 1.0 / (1.0 + z), z / (1.0 + z))

    def score(self, X, y=None) -> float:
        """Micro-F1 over properties (binary) or macro-averaged Pearson (scalar)."""
        self._require_fitted()
        items = _check_instances(X)
        catalog = self.model_.head("spr").params.catalog
        for inst in items:
            check_labels(inst, catalog, self.mode)
        scores = spr_scores_matrix(self.model_, "spr", items)
        golds = gold_matrix(f"spr-{self.mode}", catalog, items)
        if self.mode == "binary":
            counts = {
                prop: counts_from_predictions(scores[:, j] > 0, golds[:, j].astype(bool))
                for j, prop in enumerate(catalog)
            }
            return aggregate(counts)[0]
        rs = [pearson_with_flag(scores[:, j], golds[:, j])[0] for j in range(len(catalog))]
        return float(np.mean(rs))
