"""Gradient boosting over oblivious regression trees.

Each tree applies one ``(feature, threshold)`` test per level, shared by every
node of that level, so a sample's leaf is the bit vector of its test outcomes:
``leaf = sum(bit_d << d)`` with ``bit_d = x[feature_d] > threshold_d``.

Categorical columns are replaced by ordered target statistics: along a seeded
permutation each sample sees only the targets of the same-category samples
that precede it, blended with the global target mean.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (ArityMismatch, EmptyDataset, FormatVersionMismatch, InvalidArgument,
                     InvalidParams, IoError)
from .rng import XorShift64Star

MAX_DEPTH_CAP = 16
MODEL_FORMAT = "t2g-gbdt"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GbdtParams:
    iterations: int = 200
    learning_rate: float = 0.1
    max_depth: int = 6
    loss: str = "rmse"
    histogram_bins: int = 254
    seed: int = 0
    l2_leaf_reg: float = 1.0
    cat_prior_weight: float = 0.1
    normalize: bool = True

    def __post_init__(self):
        if not isinstance(self.iterations, int) or self.iterations < 1:
            raise InvalidParams("iterations must be a positive integer")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidParams("learning_rate must lie in (0, 1]")
        if not isinstance(self.max_depth, int) or not 1 <= self.max_depth <= MAX_DEPTH_CAP:
            raise InvalidParams(f"max_depth must lie in [1, {MAX_DEPTH_CAP}], got {self.max_depth}")
        if self.loss != "rmse":
            raise InvalidParams(f"unsupported loss {self.loss!r}; only 'rmse' is available")
        if not isinstance(self.histogram_bins, int) or self.histogram_bins < 2:
            raise InvalidParams("histogram_bins must be an integer >= 2")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")
        if not self.l2_leaf_reg >= 0 or not self.cat_prior_weight >= 0:
            raise InvalidParams("l2_leaf_reg and cat_prior_weight must be non-negative")


@dataclass(frozen=True)
class ObliviousTree:
    splits: tuple[tuple[int, float], ...]
    leaf_values: tuple[float, ...]

    def __post_init__(self):
        if len(self.leaf_values) != 2 ** len(self.splits):
            raise ValueError("an oblivious tree of depth d needs 2^d leaf values")

    @property
    def depth(self) -> int:
        return len(self.splits)

    def leaf_index(self, features: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(features), dtype=np.int64)
        for level, (f, thr) in enumerate(self.splits):
            idx |= (features[:, f] > thr).astype(np.int64) << level
        return idx

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(self.leaf_values)[self.leaf_index(features)]


@dataclass(frozen=True)
class CatStatistics:
    """Frozen per-category target sums and counts for inference-time encoding."""

    feature: int
    prior: float
    prior_weight: float
    table: dict[float, tuple[float, int]]

    def encode(self, category: float) -> float:
        s, c = self.table.get(float(category), (0.0, 0))
        return _blend(s, c, self.prior, self.prior_weight)


def _blend(total, count, prior, weight):
    denom = count + weight
    if denom == 0:
        return prior
    return (total + weight * prior) / denom


def encode_categorical_ordered(categories: Sequence, targets: Sequence[float],
                               permutation: Sequence[int], prior_weight: float,
                               feature: int = 0) -> tuple[np.ndarray, CatStatistics]:
    """Ordered target statistics for one categorical column.

    ``enc[i] = (sum of earlier same-category targets + w * mean) / (earlier count + w)``
    where "earlier" means before ``i`` in ``permutation`` and ``mean`` is the mean
    over all targets. Returns the encoded column and the final statistics.
    """
    cats = [float(c) for c in categories]
    y = np.asarray(targets, dtype=float)
    n = len(cats)
    if sorted(permutation) != list(range(n)):
        raise InvalidArgument("permutation must be a bijection over sample indices")
    prior = float(np.mean(y)) if n else 0.0
    sums: dict[float, float] = {}
    counts: dict[float, int] = {}
    enc = np.empty(n)
    for i in permutation:
        c = cats[i]
        s, k = sums.get(c, 0.0), counts.get(c, 0)
        enc[i] = _blend(s, k, prior, prior_weight)
        sums[c] = s + y[i]
        counts[c] = k + 1
    table = {c: (sums[c], counts[c]) for c in sorted(sums)}
    return enc, CatStatistics(feature, prior, float(prior_weight), table)


def _fit_minmax(col: np.ndarray) -> tuple[float, float]:
    return float(col.min()), float(col.max())


def _apply_minmax(col: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.zeros_like(col)
    return (col - lo) / (hi - lo)


def quantile_borders(values: np.ndarray, bins: int) -> np.ndarray:
    """Split candidates: midpoints between distinct values when there are at most
    ``bins`` of them, otherwise interior quantiles."""
    u = np.unique(values)
    if len(u) <= 1:
        return np.empty(0)
    if len(u) <= bins:
        return (u[:-1] + u[1:]) / 2.0
    q = np.unique(np.quantile(values, np.arange(1, bins) / bins))
    return q[(q >= u[0]) & (q < u[-1])]


@dataclass(frozen=True)
class GbdtModel:
    params: GbdtParams
    n_features: int
    cat_features: tuple[int, ...]
    base_prediction: float
    trees: tuple[ObliviousTree, ...]
    cat_statistics: tuple[CatStatistics, ...]
    feature_norm: tuple[tuple[float, float] | None, ...]
    target_norm: tuple[float, float] | None
    train_rmse: tuple[float, ...] = ()
    metadata: dict = field(default_factory=dict)

    def transform(self, X) -> np.ndarray:
        """Map raw samples into the model's numeric split space."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ArityMismatch(X.shape[1], self.n_features)
        out = np.empty_like(X)
        for j in range(self.n_features):
            norm = self.feature_norm[j]
            out[:, j] = X[:, j] if norm is None else _apply_minmax(X[:, j], *norm)
        for stats in self.cat_statistics:
            out[:, stats.feature] = [stats.encode(c) for c in X[:, stats.feature]]
        return out

    def raw_predict(self, X) -> np.ndarray:
        """Predictions in the (possibly normalized) target space."""
        f = self.transform(X)
        total = np.zeros(len(f))
        for tree in self.trees:
            total += tree.evaluate(f)
        return self.base_prediction + self.params.learning_rate * total

    def denormalize(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if self.target_norm is None:
            return v
        lo, hi = self.target_norm
        return v * (hi - lo) + lo

    def normalize_target(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if self.target_norm is None:
            return v
        return _apply_minmax(v, *self.target_norm)

    def predict(self, X) -> np.ndarray:
        return self.denormalize(self.raw_predict(X))

    def predict_one(self, sample: Sequence[float]) -> float:
        return float(self.predict(np.asarray(sample, dtype=float)[None, :])[0])


def _grow_tree(bins: list[np.ndarray], n_bins: list[int], borders: list[np.ndarray],
               candidates: list[int], residual: np.ndarray, max_depth: int,
               l2: float) -> tuple[ObliviousTree, np.ndarray]:
    n = len(residual)
    leaf = np.zeros(n, dtype=np.int64)
    total_s = float(residual.sum())
    current = total_s * total_s / (n + l2) if n + l2 > 0 else 0.0
    splits: list[tuple[int, float]] = []
    for level in range(max_depth):
        # histogram only the occupied leaves; empty leaves contribute nothing
        _, occ = np.unique(leaf, return_inverse=True)
        n_occ = int(occ.max()) + 1
        best = None
        for f in candidates:
            nb = n_bins[f]
            key = occ * nb + bins[f]
            hs = np.bincount(key, weights=residual, minlength=n_occ * nb).reshape(n_occ, nb)
            hc = np.bincount(key, minlength=n_occ * nb).reshape(n_occ, nb).astype(float)
            ls = np.cumsum(hs, axis=1)[:, :-1]
            lc = np.cumsum(hc, axis=1)[:, :-1]
            rs = hs.sum(axis=1, keepdims=True) - ls
            rc = hc.sum(axis=1, keepdims=True) - lc
            if l2 > 0:
                score = (ls * ls / (lc + l2) + rs * rs / (rc + l2)).sum(axis=0)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    score = (np.where(lc > 0, ls * ls / lc, 0.0)
                             + np.where(rc > 0, rs * rs / rc, 0.0)).sum(axis=0)
            j = int(np.argmax(score))
            if best is None or score[j] > best[0]:
                best = (float(score[j]), f, j)
        if best is None or best[0] - current <= 1e-12 * abs(current) + 1e-30:
            break
        current, f, j = best
        leaf |= (bins[f] > j).astype(np.int64) << level
        splits.append((f, float(borders[f][j])))
    n_leaves = 1 << len(splits)
    s = np.bincount(leaf, weights=residual, minlength=n_leaves)
    c = np.bincount(leaf, minlength=n_leaves).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(c + l2 > 0, s / (c + l2), 0.0)
    return ObliviousTree(tuple(splits), tuple(float(v) for v in values)), leaf


def _split_candidates(bins: list[np.ndarray], n_bins: list[int]) -> list[int]:
    """Features worth scanning: at least two bins, and not a bin-for-bin copy of
    an earlier feature (a copy scores identically and loses the index tie-break)."""
    keep: list[int] = []
    for f, b in enumerate(bins):
        if n_bins[f] < 2:
            continue
        if any(n_bins[g] == n_bins[f] and np.array_equal(bins[g], b) for g in keep):
            continue
        keep.append(f)
    return keep


def fit(X, y, params: GbdtParams, cat_features: Sequence[int] = (),
        metadata: dict | None = None) -> GbdtModel:
    """Train a boosted ensemble on squared loss.

    Stops early once no split improves the current residuals, so a constant
    target produces no trees at all.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise EmptyDataset("training needs at least one sample")
    if len(y) != len(X):
        raise InvalidArgument("features and target lengths differ")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidArgument("training data must be finite")
    cat_features = tuple(sorted(set(int(c) for c in cat_features)))
    n, p = X.shape
    if any(not 0 <= c < p for c in cat_features):
        raise InvalidArgument("categorical feature index out of range")

    feature_norm: list[tuple[float, float] | None] = []
    F = np.empty_like(X)
    for j in range(p):
        if j in cat_features or not params.normalize:
            feature_norm.append(None)
            F[:, j] = X[:, j]
        else:
            lo, hi = _fit_minmax(X[:, j])
            feature_norm.append((lo, hi))
            F[:, j] = _apply_minmax(X[:, j], lo, hi)
    target_norm = _fit_minmax(y) if params.normalize else None
    yn = _apply_minmax(y, *target_norm) if target_norm else y.copy()

    cat_stats = []
    if cat_features:
        perm = XorShift64Star(params.seed).permutation(n)
        for j in cat_features:
            F[:, j], stats = encode_categorical_ordered(X[:, j], yn, perm,
                                                        params.cat_prior_weight, feature=j)
            cat_stats.append(stats)

    borders = [quantile_borders(F[:, j], params.histogram_bins) for j in range(p)]
    bins = [np.searchsorted(borders[j], F[:, j], side="left").astype(np.int64) for j in range(p)]
    n_bins = [len(b) + 1 for b in borders]
    candidates = _split_candidates(bins, n_bins)

    base = float(np.mean(yn))
    pred = np.full(n, base)
    history = [float(np.sqrt(np.mean((yn - pred) ** 2)))]
    trees = []
    for _ in range(params.iterations):
        residual = yn - pred
        tree, leaf = _grow_tree(bins, n_bins, borders, candidates, residual,
                                params.max_depth, params.l2_leaf_reg)
        if tree.depth == 0:
            break
        trees.append(tree)
        pred = pred + params.learning_rate * np.asarray(tree.leaf_values)[leaf]
        history.append(float(np.sqrt(np.mean((yn - pred) ** 2))))

    return GbdtModel(params=params, n_features=p, cat_features=cat_features,
                     base_prediction=base, trees=tuple(trees), cat_statistics=tuple(cat_stats),
                     feature_norm=tuple(feature_norm), target_norm=target_norm,
                     train_rmse=tuple(history), metadata=dict(metadata or {}))


# -- dataset -------------------------------------------------------------------

FEATURE_NAMES = ("sat_molm2", "sat_conv_ugm3", "station_code")
CAT_FEATURES = (2,)


@dataclass(frozen=True)
class AlignedDataset:
    """Pooled samples: features ``[sat_molm2, sat_conv_ugm3, station_code]``,
    target the smoothed daily ground mean, and (station, date) metadata."""

    features: np.ndarray
    target: np.ndarray
    stations: tuple[int, ...]
    dates: tuple[date, ...]

    def __post_init__(self):
        n = len(self.target)
        if self.features.shape != (n, len(FEATURE_NAMES)):
            raise ValueError("feature matrix does not match the target length")
        if len(self.stations) != n or len(self.dates) != n:
            raise ValueError("metadata length mismatch")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.target))):
            raise ValueError("dataset values must be finite")

    def __len__(self):
        return len(self.target)

    def subset(self, indices: Sequence[int]) -> "AlignedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return AlignedDataset(self.features[idx], self.target[idx],
                              tuple(self.stations[i] for i in idx),
                              tuple(self.dates[i] for i in idx))


def fit_dataset(dataset: AlignedDataset, params: GbdtParams, metadata: dict | None = None) -> GbdtModel:
    if len(dataset) == 0:
        raise EmptyDataset("training needs at least one sample")
    return fit(dataset.features, dataset.target, params, CAT_FEATURES, metadata)


# -- serialization -------------------------------------------------------------

def _to_document(model: GbdtModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": asdict(model.params),
        "n_features": model.n_features,
        "cat_features": list(model.cat_features),
        "base_prediction": model.base_prediction,
        "feature_norm": [list(n) if n is not None else None for n in model.feature_norm],
        "target_norm": list(model.target_norm) if model.target_norm is not None else None,
        "cat_statistics": [
            {"feature": s.feature, "prior": s.prior, "prior_weight": s.prior_weight,
             "categories": [[c, total, count] for c, (total, count) in s.table.items()]}
            for s in model.cat_statistics
        ],
        "trees": [{"splits": [list(sp) for sp in t.splits], "leaf_values": list(t.leaf_values)}
                  for t in model.trees],
        "train_rmse": list(model.train_rmse),
        "metadata": model.metadata,
    }


def dumps_model(model: GbdtModel) -> str:
    return json.dumps(_to_document(model), sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads_model(text: str) -> GbdtModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatVersionMismatch(f"model file is not a complete document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatVersionMismatch("not a t2g model file")
    if doc.get("version") != MODEL_VERSION:
        raise FormatVersionMismatch(f"model format version {doc.get('version')!r}, "
                                    f"expected {MODEL_VERSION}")
    try:
        stats = tuple(
            CatStatistics(int(s["feature"]), float(s["prior"]), float(s["prior_weight"]),
                          {float(c): (float(t), int(k)) for c, t, k in s["categories"]})
            for s in doc["cat_statistics"])
        trees = tuple(ObliviousTree(tuple((int(f), float(t)) for f, t in tr["splits"]),
                                    tuple(float(v) for v in tr["leaf_values"]))
                      for tr in doc["trees"])
        return GbdtModel(
            params=GbdtParams(**doc["params"]),
            n_features=int(doc["n_features"]),
            cat_features=tuple(doc["cat_features"]),
            base_prediction=float(doc["base_prediction"]),
            trees=trees,
            cat_statistics=stats,
            feature_norm=tuple(tuple(n) if n is not None else None for n in doc["feature_norm"]),
            target_norm=tuple(doc["target_norm"]) if doc["target_norm"] is not None else None,
            train_rmse=tuple(doc["train_rmse"]),
            metadata=doc["metadata"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatVersionMismatch(f"model file is missing or has invalid fields: {exc}") from None


def save_model(model: GbdtModel, path) -> None:
    try:
        Path(path).write_text(dumps_model(model), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_model(path) -> GbdtModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads_model(text)
