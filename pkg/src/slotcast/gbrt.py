"""Histogram-based gradient-boosted regression trees (squared-error loss).

Trees are grown best-first over quantile-binned features with a
variance-reduction split criterion. Everything is deterministic under a
fixed seed; a fitted Forest is immutable.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DimensionMismatch, NonFiniteTarget, TooFewSamples

_BINS = 256  # histogram width per feature (value bins + reserved missing bin)


@dataclass
class GBRTConfig:
    learning_rate: float = 0.07
    iterations: int = 300
    max_leaves: int = 31
    min_samples_leaf: int = 20
    l2: float = 0.0
    max_bins: int = 255
    seed: int = 0
    binning_sample: int = 100_000

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "GBRTConfig":
        return cls(**d)


class BinMapper:
    """Quantile binning with a reserved per-feature missing-value bin."""

    def __init__(self, bin_edges: List[np.ndarray]):
        self.bin_edges = bin_edges

    @property
    def n_features(self) -> int:
        return len(self.bin_edges)

    def missing_bin(self, feature: int) -> int:
        return len(self.bin_edges[feature]) + 1

    @classmethod
    def fit(cls, x: np.ndarray, max_bins: int = 255,
            sample: int = 100_000, seed: int = 0) -> "BinMapper":
        n = x.shape[0]
        if n > sample:
            rng = np.random.default_rng(seed)
            rows = np.sort(rng.choice(n, size=sample, replace=False))
            x = x[rows]
        max_value_bins = max_bins - 1  # keep uint8 room for the missing bin
        edges: List[np.ndarray] = []
        for f in range(x.shape[1]):
            col = x[:, f]
            col = col[np.isfinite(col)]
            if col.size == 0:
                edges.append(np.empty(0))
                continue
            distinct = np.unique(col)
            if distinct.size <= max_value_bins:
                e = (distinct[:-1] + distinct[1:]) / 2.0
            else:
                qs = np.percentile(
                    col, np.linspace(0, 100, max_value_bins + 1)[1:-1])
                e = np.unique(qs)
            edges.append(np.ascontiguousarray(e, dtype=np.float64))
        return cls(edges)

    def transform(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"expected {self.n_features} features, got {x.shape[1]}")
        out = np.empty(x.shape, dtype=np.uint8)
        for f, e in enumerate(self.bin_edges):
            col = x[:, f]
            binned = np.searchsorted(e, col, side="right")
            binned[~np.isfinite(col)] = self.missing_bin(f)
            out[:, f] = binned.astype(np.uint8)
        return out


@dataclass
class Tree:
    feature: np.ndarray    # int32, -1 at leaves
    threshold: np.ndarray  # int32 bin index, go left when bin <= threshold
    left: np.ndarray       # int32 child ids
    right: np.ndarray
    value: np.ndarray      # float64 leaf contributions (log-space)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict_binned(self, xb: np.ndarray) -> np.ndarray:
        out = np.empty(xb.shape[0])
        stack: List[Tuple[int, np.ndarray]] = [(0, np.arange(xb.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            if idx.size == 0:
                continue
            f = self.feature[nid]
            if f < 0:
                out[idx] = self.value[nid]
                continue
            go_left = xb[idx, f] <= self.threshold[nid]
            stack.append((self.left[nid], idx[go_left]))
            stack.append((self.right[nid], idx[~go_left]))
        return out


def histograms(xb: np.ndarray, idx: np.ndarray,
               g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-feature (gradient-sum, count) histograms for the given rows."""
    n_feat = xb.shape[1]
    flat = xb[idx].astype(np.int64) + np.arange(n_feat, dtype=np.int64) * _BINS
    flat = flat.ravel()
    w = np.broadcast_to(g[idx][:, None], (idx.size, n_feat)).ravel()
    g_hist = np.bincount(flat, weights=w, minlength=n_feat * _BINS)
    c_hist = np.bincount(flat, minlength=n_feat * _BINS)
    return (g_hist.reshape(n_feat, _BINS),
            c_hist.reshape(n_feat, _BINS).astype(np.float64))


def _best_split(g_hist: np.ndarray, c_hist: np.ndarray, sum_g: float,
                cnt: float, min_leaf: int, l2: float
                ) -> Optional[Tuple[float, int, int]]:
    """Maximize variance-reduction gain; ties break on lowest feature then
    lowest bin (row-major argmax)."""
    left_g = np.cumsum(g_hist, axis=1)[:, :-1]
    left_c = np.cumsum(c_hist, axis=1)[:, :-1]
    right_g = sum_g - left_g
    right_c = cnt - left_c
    valid = (left_c >= min_leaf) & (right_c >= min_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (left_g ** 2 / (left_c + l2)
                + right_g ** 2 / (right_c + l2)
                - sum_g ** 2 / (cnt + l2))
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    f, b = divmod(best, gain.shape[1])
    if not np.isfinite(gain[f, b]) or gain[f, b] <= 1e-12:
        return None
    return float(gain[f, b]), f, b


def _grow_tree(xb: np.ndarray, g: np.ndarray, config: GBRTConfig
               ) -> Tuple[Tree, np.ndarray]:
    """Grow one tree on residuals g; returns the tree and its per-row output."""
    n = xb.shape[0]
    feature: List[int] = [-1]
    threshold: List[int] = [0]
    left: List[int] = [-1]
    right: List[int] = [-1]
    value: List[float] = [0.0]
    out = np.empty(n)

    root_idx = np.arange(n)
    g_hist, c_hist = histograms(xb, root_idx, g)
    sum_g, cnt = float(g[root_idx].sum()), float(n)

    def leaf_value(s: float, c: float) -> float:
        return s / (c + config.l2) if c + config.l2 > 0 else 0.0

    counter = 0
    heap: List[tuple] = []
    split = _best_split(g_hist, c_hist, sum_g, cnt,
                        config.min_samples_leaf, config.l2)
    # heap entries: (-gain, tiebreak counter, node_id, idx, hists, sums, split)
    state: Dict[int, tuple] = {0: (root_idx, g_hist, c_hist, sum_g, cnt)}
    if split is not None:
        heapq.heappush(heap, (-split[0], counter, 0, split))
        counter += 1
    n_leaves = 1
    while heap and n_leaves < config.max_leaves:
        _, _, nid, (gain, f, b) = heapq.heappop(heap)
        idx, gh, ch, sg, c = state.pop(nid)
        go_left = xb[idx, f] <= b
        li, ri = idx[go_left], idx[~go_left]
        # compute the smaller child's histogram; sibling by subtraction
        if li.size <= ri.size:
            lgh, lch = histograms(xb, li, g)
            rgh, rch = gh - lgh, ch - lch
        else:
            rgh, rch = histograms(xb, ri, g)
            lgh, lch = gh - rgh, ch - rch
        lsg, rsg = float(g[li].sum()), float(sg - g[li].sum())
        for child_idx, cgh, cch, csg in ((li, lgh, lch, lsg),
                                         (ri, rgh, rch, rsg)):
            cid = len(feature)
            feature.append(-1)
            threshold.append(0)
            left.append(-1)
            right.append(-1)
            value.append(leaf_value(csg, float(child_idx.size)))
            state[cid] = (child_idx, cgh, cch, csg, float(child_idx.size))
            csplit = _best_split(cgh, cch, csg, float(child_idx.size),
                                 config.min_samples_leaf, config.l2)
            if csplit is not None:
                heapq.heappush(heap, (-csplit[0], counter, cid, csplit))
                counter += 1
            if child_idx is li:
                lid = cid
            else:
                rid = cid
        feature[nid] = f
        threshold[nid] = b
        left[nid] = lid
        right[nid] = rid
        n_leaves += 1

    if len(feature) == 1:  # root stayed a leaf
        value[0] = leaf_value(sum_g, cnt)

    tree = Tree(feature=np.array(feature, dtype=np.int32),
                threshold=np.array(threshold, dtype=np.int32),
                left=np.array(left, dtype=np.int32),
                right=np.array(right, dtype=np.int32),
                value=np.array(value, dtype=np.float64))
    # every leaf (including an unsplit root) remains in `state`
    for nid, (idx, _, _, _, _) in state.items():
        out[idx] = value[nid]
    return tree, out


@dataclass
class Forest:
    config: GBRTConfig
    b0: float
    bin_mapper: BinMapper
    trees: List[Tree] = field(default_factory=list)
    train_losses: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_features(self) -> int:
        return self.bin_mapper.n_features

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"expected (n, {self.n_features}) features")
        xb = self.bin_mapper.transform(x)
        pred = np.full(x.shape[0], self.b0)
        for tree in self.trees:
            pred += self.config.learning_rate * tree.predict_binned(xb)
        return pred

    # -- serialization ------------------------------------------------------

    def get_state(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        edges = self.bin_mapper.bin_edges
        edge_offsets = np.cumsum([0] + [e.size for e in edges]).astype(np.int64)
        tree_offsets = np.cumsum(
            [0] + [t.feature.size for t in self.trees]).astype(np.int64)
        def cat(attr, dtype):
            if not self.trees:
                return np.empty(0, dtype=dtype)
            return np.concatenate([getattr(t, attr) for t in self.trees]).astype(dtype)
        meta = {"config": self.config.to_dict(), "b0": self.b0,
                "n_trees": len(self.trees)}
        arrays = {
            "edge_values": (np.concatenate(edges) if edges else np.empty(0)),
            "edge_offsets": edge_offsets,
            "tree_offsets": tree_offsets,
            "node_feature": cat("feature", np.int32),
            "node_threshold": cat("threshold", np.int32),
            "node_left": cat("left", np.int32),
            "node_right": cat("right", np.int32),
            "node_value": cat("value", np.float64),
            "train_losses": self.train_losses,
        }
        return meta, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: Dict[str, np.ndarray]) -> "Forest":
        eo = arrays["edge_offsets"]
        edges = [np.ascontiguousarray(arrays["edge_values"][eo[i]:eo[i + 1]])
                 for i in range(eo.size - 1)]
        to = arrays["tree_offsets"]
        trees = []
        for i in range(int(meta["n_trees"])):
            s, e = to[i], to[i + 1]
            trees.append(Tree(
                feature=np.ascontiguousarray(arrays["node_feature"][s:e]),
                threshold=np.ascontiguousarray(arrays["node_threshold"][s:e]),
                left=np.ascontiguousarray(arrays["node_left"][s:e]),
                right=np.ascontiguousarray(arrays["node_right"][s:e]),
                value=np.ascontiguousarray(arrays["node_value"][s:e])))
        return cls(config=GBRTConfig.from_dict(meta["config"]),
                   b0=float(meta["b0"]),
                   bin_mapper=BinMapper(edges),
                   trees=trees,
                   train_losses=arrays["train_losses"])


def fit(features: np.ndarray, targets: np.ndarray,
        config: Optional[GBRTConfig] = None) -> Forest:
    """Train a forest on log-space targets with squared-error loss."""
    config = config or GBRTConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DimensionMismatch("features must be (n, d) with matching targets")
    if not np.all(np.isfinite(y)):
        raise NonFiniteTarget("targets contain NaN or Inf")
    if x.shape[0] < 2 * config.min_samples_leaf:
        raise TooFewSamples(
            f"need >= {2 * config.min_samples_leaf} rows, got {x.shape[0]}")

    mapper = BinMapper.fit(x, max_bins=config.max_bins,
                           sample=config.binning_sample, seed=config.seed)
    xb = mapper.transform(x)
    b0 = float(y.mean())
    pred = np.full(y.shape, b0)
    trees: List[Tree] = []
    losses = np.empty(config.iterations)
    for m in range(config.iterations):
        residual = y - pred
        tree, out = _grow_tree(xb, residual, config)
        pred = pred + config.learning_rate * out
        trees.append(tree)
        losses[m] = float(np.mean((y - pred) ** 2))
    return Forest(config=config, b0=b0, bin_mapper=mapper, trees=trees,
                  train_losses=losses)


def predict(forest: Forest, features: np.ndarray) -> np.ndarray:
    return forest.predict(features)
