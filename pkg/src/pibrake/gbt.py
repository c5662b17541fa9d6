"""Gradient-boosted regression trees with squared loss, from scratch.

Boosting is plain residual fitting: the model starts from the training-target
mean and each round adds ``learning_rate`` times a depth-limited regression
tree fit to the current residuals.  Splits are found by an exact scan over
the sorted unique values of every feature (no histogramming), minimizing the
children's squared error; ties are broken by lowest feature index, then
lowest threshold.

Determinism is taken seriously: training rows are put into a canonical order
(lexicographic in the feature columns, then the target) before anything else
happens, so fitting is bit-for-bit invariant under row permutation when
subsample = 1, and identical seeds give identical models regardless of
thread count.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .features import FeatureMatrix


@dataclass(frozen=True)
class GbtConfig:
    """Shared learner settings; one config is used across all schemes so that
    accuracy comparisons isolate the preprocessing.  Depth 6 keeps the noisy
    friction-limited datasets in a regime where every scheme is capacity-
    adequate (the saturation boundaries need interaction splits)."""

    n_rounds: int = 300
    learning_rate: float = 0.1
    max_depth: int = 6
    min_samples_leaf: int = 5
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")


def _ordered_sum(values: np.ndarray) -> float:
    # summation order fixed by value, not by row position
    return float(np.sum(np.sort(values)))


class RegressionTree:
    """Array-encoded binary tree; feature index -1 marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def n_splits(self) -> int:
        return int(np.sum(self.feature >= 0))

    def predict(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        idx = np.zeros(n, dtype=np.int32)
        active = self.feature[idx] >= 0
        rows = np.arange(n)
        while active.any():
            f = self.feature[idx]
            xv = x[rows, np.where(active, f, 0)]
            nxt = np.where(xv < self.threshold[idx], self.left[idx], self.right[idx])
            idx = np.where(active, nxt, idx)
            active = self.feature[idx] >= 0
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def _best_split(x: np.ndarray, resid: np.ndarray, orders: list[np.ndarray], msl: int):
    """Exact scan for the SSE-minimizing (feature, threshold) over a node.

    ``orders[f]`` holds the node's row indices sorted by feature f (stable in
    the canonical row order), which fixes the prefix-sum order.  Returns
    (feature, threshold) or None.  The candidate score for a left size i is
    ls^2/i + rs^2/(n-i); the parent score total^2/n is the bar a split must
    strictly beat.
    """
    n = orders[0].size
    best_score = -np.inf
    best: tuple[int, float] | None = None
    sizes = np.arange(1, n)
    for f, order in enumerate(orders):
        vs = x[order, f]
        valid = (vs[1:] > vs[:-1]) & (sizes >= msl) & ((n - sizes) >= msl)
        if not valid.any():
            continue
        csum = np.cumsum(resid[order])
        ls = csum[:-1]
        total = csum[-1]
        rs = total - ls
        score = np.where(valid, ls * ls / sizes + rs * rs / (n - sizes), -np.inf)
        j = int(np.argmax(score))
        parent = total * total / n
        if score[j] > parent and score[j] > best_score:
            best_score = float(score[j])
            best = (f, float(vs[j + 1]))
    return best


def _build_tree(
    x: np.ndarray,
    resid: np.ndarray,
    root_orders: list[np.ndarray],
    cfg: GbtConfig,
    leaf_out: np.ndarray | None = None,
) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def node(orders: list[np.ndarray], depth: int) -> int:
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        y = resid[orders[0]]
        n = y.size
        found = None
        if depth < cfg.max_depth and n >= 2 * cfg.min_samples_leaf and y.min() < y.max():
            found = _best_split(x, resid, orders, cfg.min_samples_leaf)
        if found is None:
            value[nid] = float(np.sum(y)) / n  # summation order fixed by orders[0]
            if leaf_out is not None:
                leaf_out[orders[0]] = value[nid]
            return nid
        f, thr = found
        feature[nid] = f
        threshold[nid] = thr
        go_left = [x[o, f] < thr for o in orders]
        left[nid] = node([o[m] for o, m in zip(orders, go_left)], depth + 1)
        right[nid] = node([o[~m] for o, m in zip(orders, go_left)], depth + 1)
        return nid

    node(root_orders, 0)
    return RegressionTree(feature, threshold, left, right, value)


@dataclass
class Ensemble:
    """base_score plus learning_rate-weighted sum of tree outputs."""

    base_score: float
    trees: list[RegressionTree]
    config: GbtConfig
    n_features: int
    train_loss: list[float] | None = None

    def predict(self, x: FeatureMatrix | np.ndarray) -> np.ndarray:
        x = _as_array(x)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got shape {x.shape}")
        out = np.full(x.shape[0], self.base_score)
        for tree in self.trees:
            out += self.config.learning_rate * tree.predict(x)
        return out

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "n_features": self.n_features,
            "config": asdict(self.config),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        return cls(
            base_score=d["base_score"],
            trees=[RegressionTree.from_dict(t) for t in d["trees"]],
            config=GbtConfig(**d["config"]),
            n_features=d["n_features"],
        )


def _as_array(x: FeatureMatrix | np.ndarray) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.values
    return np.asarray(x, dtype=float)


def fit(
    x: FeatureMatrix | np.ndarray,
    y: np.ndarray,
    cfg: GbtConfig = GbtConfig(),
    track_loss: bool = False,
) -> Ensemble:
    """Boost cfg.n_rounds trees onto the residuals of a squared-loss model."""
    x = _as_array(x)
    y = np.asarray(y, dtype=float)
    n = x.shape[0] if x.ndim == 2 else 0
    if n == 0 or y.shape != (n,):
        raise ValueError(f"need matching nonempty x and y, got {x.shape} and {y.shape}")
    if n < 2 * cfg.min_samples_leaf:
        raise ValueError(f"need at least {2 * cfg.min_samples_leaf} rows, got {n}")
    if not np.isfinite(y).all():
        raise ValueError("targets contain non-finite values")

    # canonical row order (lexicographic in features, then target) makes every
    # later step independent of how the caller ordered the rows
    p = x.shape[1]
    canon = np.lexsort(tuple([y] + [x[:, f] for f in range(p - 1, -1, -1)]))
    x = np.asfortranarray(x[canon])
    y = y[canon]
    full_orders = [np.argsort(x[:, f], kind="stable") for f in range(p)]

    base = _ordered_sum(y) / n
    pred = np.full(n, base)
    rng = np.random.default_rng(cfg.seed)
    trees: list[RegressionTree] = []
    losses: list[float] = []
    m_sub = max(1, int(round(cfg.subsample * n)))
    tree_pred = np.empty(n)
    for _ in range(cfg.n_rounds):
        resid = y - pred
        if cfg.subsample < 1.0:
            keep = np.zeros(n, dtype=bool)
            keep[rng.choice(n, size=m_sub, replace=False)] = True
            orders = [o[keep[o]] for o in full_orders]
            tree = _build_tree(x, resid, orders, cfg)
            pred += cfg.learning_rate * tree.predict(x)
        else:
            tree = _build_tree(x, resid, full_orders, cfg, leaf_out=tree_pred)
            pred += cfg.learning_rate * tree_pred
        trees.append(tree)
        if track_loss:
            losses.append(float(np.mean((y - pred) ** 2)))
    return Ensemble(base, trees, cfg, n_features=p, train_loss=losses if track_loss else None)


def predict(e: Ensemble, x: FeatureMatrix | np.ndarray) -> np.ndarray:
    return e.predict(x)


def fit_multi(
    x: FeatureMatrix | np.ndarray, y: np.ndarray, cfg: GbtConfig = GbtConfig()
) -> tuple[Ensemble, Ensemble, Ensemble]:
    """One independently-seeded ensemble per output column (seed, seed+1, seed+2)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != 3:
        raise ValueError(f"expected (n, 3) targets, got {y.shape}")
    return tuple(
        fit(x, y[:, j], replace(cfg, seed=cfg.seed + j)) for j in range(3)
    )


def save_ensembles(ensembles: list[Ensemble] | tuple[Ensemble, ...] | Ensemble, path: str | Path) -> Path:
    """Write one or more ensembles to a self-describing JSON text file."""
    if isinstance(ensembles, Ensemble):
        ensembles = [ensembles]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"format": "pibrake-gbt-v1", "ensembles": [e.to_dict() for e in ensembles]}
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def load_ensembles(path: str | Path) -> list[Ensemble]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "pibrake-gbt-v1":
        raise ValueError(f"{path} is not a saved model file")
    return [Ensemble.from_dict(d) for d in doc["ensembles"]]
