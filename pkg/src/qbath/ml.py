"""PCA compression and gradient-boosted-tree regression, from scratch.

The regression stack is deliberately dependency-free beyond numpy: PCA by
eigendecomposition of the population covariance (via SVD of the centered
data), and per-target squared-error gradient boosting with exact greedy
variance-reduction splits.  Everything is deterministic under fixed seeds,
and models round-trip through a plain-JSON serialization.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

MODEL_SCHEMA = "qbath-model/1"

TARGET_NAMES = (
    "J_L12",
    "gamma_L1",
    "gamma_L2",
    "J_sb",
    "backflow_rate",
    "log_deps",
    "dominant_freq",
)


@dataclass
class Dataset:
    """Aligned feature and target matrices with column labels."""

    features: np.ndarray
    targets: np.ndarray
    target_names: tuple[str, ...] = TARGET_NAMES
    run_ids: list[int] | None = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError("feature and target row counts differ")
        if not (np.isfinite(self.features).all() and np.isfinite(self.targets).all()):
            raise ValueError("dataset contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (n_components, n_features), orthonormal rows
    explained_variance: np.ndarray


@dataclass(frozen=True)
class GbtHyperparams:
    n_estimators: int = 300
    max_depth: int = 6
    learning_rate: float = 0.02
    subsample: float = 0.9


@dataclass
class GbtModel:
    hyper: GbtHyperparams
    bases: np.ndarray  # per-target training means
    ensembles: list[list[dict]]  # per target, list of flat trees
    target_names: tuple[str, ...] = TARGET_NAMES


# ---------------------------------------------------------------------------
# PCA


def pca_fit(X, n_components: int) -> PcaModel:
    """Top principal components of the population covariance X'X/m.

    Components carry a deterministic sign: the largest-magnitude entry of
    each is positive.  Requests beyond the data rank are truncated with a
    warning.
    """
    X = np.asarray(X, dtype=float)
    m, p = X.shape
    if m < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not 1 <= n_components <= min(m, p):
        raise ValueError(f"n_components must be in [1, {min(m, p)}]")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = s**2 / m
    rank = int((s > s[0] * 1e-12).sum()) if s.size and s[0] > 0 else 0
    if n_components > rank:
        warnings.warn(
            f"requested {n_components} components but data rank is {rank}; truncating",
            stacklevel=2,
        )
        n_components = max(rank, 1)
    comps = vt[:n_components]
    for k in range(n_components):
        pivot = np.argmax(np.abs(comps[k]))
        if comps[k, pivot] < 0:
            comps[k] = -comps[k]
    return PcaModel(mean=mean, components=comps, explained_variance=variances[:n_components])


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"expected {model.mean.shape[0]} features, got {X.shape[1]}")
    return (X - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.shape[1] != model.components.shape[0]:
        raise ValueError("component count mismatch")
    return Z @ model.components + model.mean


# ---------------------------------------------------------------------------
# Regression trees


def _fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int) -> dict:
    """Greedy variance-reduction regression tree as flat node arrays."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        ys = y[idx]
        value[node] = float(ys.mean())
        if depth >= max_depth or len(idx) < 2 or np.ptp(ys) == 0.0:
            return node
        best_gain = 0.0
        best: tuple[int, float, np.ndarray, np.ndarray] | None = None
        total_ss = float((ys**2).sum() - ys.sum() ** 2 / len(ys))
        for j in range(X.shape[1]):
            xs = X[idx, j]
            order = np.argsort(xs, kind="stable")
            xs_s, ys_s = xs[order], ys[order]
            csum = np.cumsum(ys_s)
            csq = np.cumsum(ys_s**2)
            n = len(idx)
            counts = np.arange(1, n)
            # split after position i: left = [0..i], right = [i+1..]
            valid = xs_s[:-1] < xs_s[1:]
            if not valid.any():
                continue
            ss_left = csq[:-1] - csum[:-1] ** 2 / counts
            ss_right = (csq[-1] - csq[:-1]) - (csum[-1] - csum[:-1]) ** 2 / (n - counts)
            gain = np.where(valid, total_ss - ss_left - ss_right, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best_gain + 1e-15:
                best_gain = float(gain[i])
                thr = 0.5 * (xs_s[i] + xs_s[i + 1])
                mask = xs <= thr
                best = (j, thr, idx[mask], idx[~mask])
        if best is None:
            return node
        j, thr, idx_l, idx_r = best
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(idx_l, depth + 1)
        right[node] = grow(idx_r, depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return {
        "feature": np.array(feature),
        "threshold": np.array(threshold),
        "left": np.array(left),
        "right": np.array(right),
        "value": np.array(value),
    }


def _predict_tree(tree: dict, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=int)
    while True:
        feat = tree["feature"][node]
        active = feat >= 0
        if not active.any():
            break
        rows = np.flatnonzero(active)
        go_left = X[rows, feat[rows]] <= tree["threshold"][node[rows]]
        node[rows] = np.where(go_left, tree["left"][node[rows]], tree["right"][node[rows]])
    return tree["value"][node]


# ---------------------------------------------------------------------------
# Gradient boosting


def gbt_fit(X, Y, hyper: GbtHyperparams = GbtHyperparams(), seed: int = 0,
            target_names: tuple[str, ...] | None = None) -> GbtModel:
    """Independent squared-error boosting ensemble per target column.

    Each round fits a depth-limited tree to the current residuals on a
    seeded subsample, then adds learning_rate times its prediction.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m = X.shape[0]
    if m < 2:
        raise ValueError("need at least 2 rows to fit")
    if Y.shape[0] != m:
        raise ValueError("feature and target row counts differ")
    q = Y.shape[1]
    names = target_names or tuple(f"target_{t}" for t in range(q))
    if len(names) != q:
        raise ValueError("target_names length mismatch")
    bases = Y.mean(axis=0)
    ensembles: list[list[dict]] = []
    n_sub = max(1, int(round(hyper.subsample * m)))
    for t in range(q):
        rng = np.random.default_rng((seed, t))
        pred = np.full(m, bases[t])
        trees: list[dict] = []
        for _ in range(hyper.n_estimators):
            residual = Y[:, t] - pred
            if hyper.subsample < 1.0:
                idx = np.sort(rng.choice(m, size=n_sub, replace=False))
            else:
                idx = np.arange(m)
            tree = _fit_tree(X[idx], residual[idx], hyper.max_depth)
            trees.append(tree)
            pred += hyper.learning_rate * _predict_tree(tree, X)
        ensembles.append(trees)
    return GbtModel(hyper=hyper, bases=bases, ensembles=ensembles, target_names=tuple(names))


def gbt_predict(model: GbtModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.tile(model.bases, (X.shape[0], 1))
    for t, trees in enumerate(model.ensembles):
        for tree in trees:
            out[:, t] += model.hyper.learning_rate * _predict_tree(tree, X)
    return out


# ---------------------------------------------------------------------------
# Splitting and metrics


def train_test_split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded permutation split; first floor(fraction*m) rows train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    perm = np.random.default_rng(seed).permutation(ds.n_rows)
    n_train = int(train_fraction * ds.n_rows)
    tr, te = perm[:n_train], perm[n_train:]
    ids = ds.run_ids

    def take(idx):
        return Dataset(
            ds.features[idx],
            ds.targets[idx],
            ds.target_names,
            [ids[i] for i in idx] if ids is not None else None,
        )

    return take(tr), take(te)


def evaluate(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    """Per-target (MSE, R^2); R^2 is NaN for zero-variance truth columns."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError("shape mismatch")
    if pred.ndim == 1:
        pred, truth = pred[:, None], truth[:, None]
    mse = ((pred - truth) ** 2).mean(axis=0)
    ss_tot = ((truth - truth.mean(axis=0)) ** 2).sum(axis=0)
    ss_res = ((truth - pred) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, np.nan)
    return mse, r2


# ---------------------------------------------------------------------------
# Persistence


def save_model(path, pca: PcaModel | None, gbt: GbtModel) -> None:
    """Plain-JSON serialization, versioned with a schema tag."""
    doc = {
        "schema": MODEL_SCHEMA,
        "pca": None
        if pca is None
        else {
            "mean": pca.mean.tolist(),
            "components": pca.components.tolist(),
            "explained_variance": pca.explained_variance.tolist(),
        },
        "gbt": {
            "hyper": {
                "n_estimators": gbt.hyper.n_estimators,
                "max_depth": gbt.hyper.max_depth,
                "learning_rate": gbt.hyper.learning_rate,
                "subsample": gbt.hyper.subsample,
            },
            "bases": gbt.bases.tolist(),
            "target_names": list(gbt.target_names),
            "ensembles": [
                [
                    {
                        "feature": tree["feature"].tolist(),
                        "threshold": tree["threshold"].tolist(),
                        "left": tree["left"].tolist(),
                        "right": tree["right"].tolist(),
                        "value": tree["value"].tolist(),
                    }
                    for tree in trees
                ]
                for trees in gbt.ensembles
            ],
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> tuple[PcaModel | None, GbtModel]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema: {doc.get('schema')!r}")
    pca = None
    if doc["pca"] is not None:
        pca = PcaModel(
            mean=np.array(doc["pca"]["mean"]),
            components=np.array(doc["pca"]["components"]),
            explained_variance=np.array(doc["pca"]["explained_variance"]),
        )
    g = doc["gbt"]
    gbt = GbtModel(
        hyper=GbtHyperparams(**g["hyper"]),
        bases=np.array(g["bases"]),
        ensembles=[
            [
                {key: np.array(tree[key]) for key in ("feature", "threshold", "left", "right", "value")}
                for tree in trees
            ]
            for trees in g["ensembles"]
        ],
        target_names=tuple(g["target_names"]),
    )
    return pca, gbt
