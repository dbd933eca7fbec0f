"""Random-forest regression: bootstrapped CART trees with variance splits.

Each tree is grown on ``n`` rows drawn with replacement. At every node ``mtry``
columns are sampled without replacement and the split minimizing the summed
within-child squared error is chosen by exact search over midpoints of
consecutive distinct values. A split is admissible only when both children
keep at least ``min_node_size`` rows. Ties go to the lowest column index,
then the smallest threshold.

Tree ``i`` draws from ``Generator(PCG64(SeedSequence(seed).spawn(n_trees)[i]))``,
so trees can be built in any order and still agree bit for bit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateResponseWarning, EmptyDesign, NoOobRows, ValidationError, WidthMismatch


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    mtry: int | None = None
    min_node_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValidationError("mtry must be >= 1")
        if self.min_node_size < 1:
            raise ValidationError("min_node_size must be >= 1")

    def resolved_mtry(self, n_features: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(n_features / 3)
        if m > n_features:
            raise ValidationError(f"mtry={m} exceeds the {n_features} available predictors")
        return m


def tree_generators(seed: int, n_trees: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n_trees)]


def _stable_mean(v: np.ndarray) -> float:
    # exact for constant input
    return float(v[0] + np.mean(v - v[0]))


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_rows: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            active = np.flatnonzero(f >= 0)
            if active.size == 0:
                return self.value[node]
            nd = node[active]
            go_left = X[active, f[active]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def to_lines(self) -> list[str]:
        out = []

        def walk(i):
            if self.feature[i] < 0:
                out.append(f"L {self.value[i]:.17g} {self.n_rows[i]}")
            else:
                out.append(f"S {self.feature[i]} {self.threshold[i]:.17g} {self.n_rows[i]}")
                walk(self.left[i])
                walk(self.right[i])

        walk(0)
        return out

    @classmethod
    def from_lines(cls, lines: list[str]) -> "Tree":
        feature, threshold, left, right, value, n_rows = [], [], [], [], [], []
        pos = 0

        def build():
            nonlocal pos
            parts = lines[pos].split()
            pos += 1
            i = len(feature)
            feature.append(-1)
            threshold.append(np.nan)
            left.append(-1)
            right.append(-1)
            value.append(np.nan)
            if parts[0] == "L":
                value[i] = float(parts[1])
                n_rows.append(int(parts[2]))
            elif parts[0] == "S":
                feature[i] = int(parts[1])
                threshold[i] = float(parts[2])
                n_rows.append(int(parts[3]))
                left[i] = build()
                right[i] = build()
            else:
                raise ValidationError(f"malformed tree line {lines[pos - 1]!r}")
            return i

        build()
        if pos != len(lines):
            raise ValidationError("trailing lines after tree")
        return cls(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                   np.array(value), np.array(n_rows))


def _best_split(Xn: np.ndarray, yn: np.ndarray, cols: np.ndarray, min_node: int):
    """Best (column, threshold, child SSE) among ``cols`` or ``None``."""
    n = len(yn)
    yc = yn - yn.mean()
    parent = float(yc @ yc)
    sub = Xn[:, cols]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = yc[order]
    csum = np.cumsum(ys, axis=0)[:-1]
    csq = np.cumsum(ys * ys, axis=0)[:-1]
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    total = float(yc.sum())
    sse = (csq - csum ** 2 / nl) + ((parent - csq) - (total - csum) ** 2 / nr)
    valid = (xs[1:] > xs[:-1]) & (nl >= min_node) & (nr >= min_node)
    sse = np.where(valid, sse, np.inf).T  # columns first so argmin prefers low column, then low threshold
    flat = int(np.argmin(sse))
    j, i = divmod(flat, n - 1)
    best = sse[j, i]
    if not np.isfinite(best) or best >= parent * (1 - 1e-12):
        return None
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return int(cols[j]), float(thr), float(best), parent


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, min_node: int, rng: np.random.Generator) -> Tree:
    p = X.shape[1]
    feature, threshold, left, right, value, n_rows = [], [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(_stable_mean(y[idx]))
        n_rows.append(len(idx))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        yn = y[idx]
        if len(idx) < 2 * min_node or np.all(yn == yn[0]):
            continue
        cols = np.sort(rng.choice(p, mtry, replace=False))
        found = _best_split(X[idx], yn, cols, min_node)
        if found is None:
            continue
        f, thr, child_sse, parent_sse = found
        assert child_sse <= parent_sse * (1 + 1e-9) + 1e-12, "split increased variance"
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                np.array(value), np.array(n_rows))


@dataclass
class ForestModel:
    trees: list[Tree]
    oob_indices: list[np.ndarray]
    config: ForestConfig
    n_features: int
    columns: tuple[str, ...] = field(default=())

    def to_text(self) -> str:
        c = self.config
        lines = ["# forest v1",
                 f"n_features {self.n_features}",
                 f"config {c.n_trees} {c.mtry if c.mtry is not None else 'auto'} {c.min_node_size} {c.seed}"]
        if self.columns:
            lines.append("columns " + " ".join(self.columns))
        for t, (tree, oob) in enumerate(zip(self.trees, self.oob_indices)):
            body = tree.to_lines()
            lines.append(f"tree {t} {len(body)}")
            lines.append("oob " + " ".join(map(str, oob.tolist())))
            lines.extend(body)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ForestModel":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        n_features = int(lines[0].split()[1])
        _, n_trees, mtry, min_node, seed = lines[1].split()
        config = ForestConfig(int(n_trees), None if mtry == "auto" else int(mtry), int(min_node), int(seed))
        pos = 2
        columns = ()
        if lines[pos].startswith("columns"):
            columns = tuple(lines[pos].split()[1:])
            pos += 1
        trees, oobs = [], []
        while pos < len(lines):
            _, _, size = lines[pos].split()
            oobs.append(np.array([int(v) for v in lines[pos + 1].split()[1:]], dtype=np.int64))
            trees.append(Tree.from_lines(lines[pos + 2: pos + 2 + int(size)]))
            pos += 2 + int(size)
        return cls(trees, oobs, config, n_features, columns)


def _matrix(design):
    values = getattr(design, "values", design)
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X, tuple(getattr(design, "columns", ()))


def fit_forest(design, y, config: ForestConfig = ForestConfig()) -> ForestModel:
    X, columns = _matrix(design)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 2 or p < 1:
        raise EmptyDesign(f"need at least 2 rows and 1 column, got {X.shape}")
    if y.shape != (n,):
        raise ValidationError(f"response has shape {y.shape}, expected ({n},)")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("design and response must be finite")
    if np.all(y == y[0]):
        warnings.warn("constant response: every tree is a single leaf", DegenerateResponseWarning,
                      stacklevel=2)
    mtry = config.resolved_mtry(p)
    trees, oobs = [], []
    for rng in tree_generators(config.seed, config.n_trees):
        sample = rng.integers(0, n, n)
        trees.append(grow_tree(X[sample], y[sample], mtry, config.min_node_size, rng))
        in_bag = np.zeros(n, dtype=bool)
        in_bag[sample] = True
        oobs.append(np.flatnonzero(~in_bag))
    return ForestModel(trees, oobs, config, p, columns)


def _per_tree(model: ForestModel, X: np.ndarray) -> np.ndarray:
    if X.shape[1] != model.n_features:
        raise WidthMismatch(f"rows have {X.shape[1]} columns, model expects {model.n_features}")
    return np.stack([t.predict(X) for t in model.trees])


def predict_forest(model: ForestModel, rows) -> np.ndarray:
    X, _ = _matrix(rows)
    preds = _per_tree(model, X)
    return preds[0] + np.mean(preds - preds[0], axis=0)


def oob_rmse(model: ForestModel, design, y) -> float:
    X, _ = _matrix(design)
    y = np.asarray(y, dtype=float)
    preds = _per_tree(model, X)
    mask = np.zeros_like(preds, dtype=bool)
    for t, oob in enumerate(model.oob_indices):
        mask[t, oob] = True
    counts = mask.sum(axis=0)
    rows = counts > 0
    if not rows.any():
        raise NoOobRows("no row is out-of-bag for any tree")
    # averaged around the first tree's prediction so a constant ensemble is exact
    pivot = preds[0]
    oob_pred = pivot[rows] + np.where(mask, preds - pivot, 0.0).sum(axis=0)[rows] / counts[rows]
    return float(np.sqrt(np.mean((y[rows] - oob_pred) ** 2)))
