"""Random forest regressor built from scratch.

CART regression trees (best variance-reduction split, midpoint thresholds)
fitted on bootstrap samples with per-split feature subsampling. Per-tree
randomness is derived from (seed, tree index) so a forest is reproducible
regardless of fitting order.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class RegressionTree:
    """Arrays of nodes; children indices -1 mark leaves."""

    def __init__(self, max_depth=None, min_leaf=1, max_features=None):
        self.max_depth = max_depth
        self.min_leaf = max(1, int(min_leaf))
        self.max_features = max_features
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) < 1:
            raise TrainingError("empty training set")
        rng = rng or np.random.default_rng(0)
        m = X.shape[1]
        k = self.max_features or m
        k = max(1, min(k, m))
        self._build(X, y, np.arange(len(y)), 0, rng, k)
        self.feature = np.array(self.feature)
        self.threshold = np.array(self.threshold)
        self.left = np.array(self.left)
        self.right = np.array(self.right)
        self.value = np.array(self.value)
        return self

    def _build(self, X, y, idx, depth, rng, k):
        node = self._add_node()
        ys = y[idx]
        self.value[node] = float(ys.mean())
        if (len(idx) < 2 * self.min_leaf
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.ptp(ys) == 0.0):
            return node
        feats = rng.choice(X.shape[1], size=k, replace=False)
        best = self._best_split(X, ys, idx, feats)
        if best is None:
            return node
        fi, thr = best
        mask = X[idx, fi] <= thr
        left = self._build(X, y, idx[mask], depth + 1, rng, k)
        right = self._build(X, y, idx[~mask], depth + 1, rng, k)
        self.feature[node] = fi
        self.threshold[node] = thr
        self.left[node] = left
        self.right[node] = right
        return node

    def _best_split(self, X, ys, idx, feats):
        """Minimum-SSE split over the candidate features, vectorized across
        features. Returns (feature, threshold) or None."""
        sub = X[np.ix_(idx, feats)]
        n = len(idx)
        order = np.argsort(sub, axis=0, kind="stable")
        vals = np.take_along_axis(sub, order, axis=0)
        ysort = ys[order]
        cum = np.cumsum(ysort, axis=0)
        cum2 = np.cumsum(ysort * ysort, axis=0)
        tot = cum[-1]
        tot2 = cum2[-1]
        counts = np.arange(1, n, dtype=float)[:, None]   # left sizes 1..n-1
        left_sse = cum2[:-1] - cum[:-1] ** 2 / counts
        right_sse = (tot2 - cum2[:-1]) - (tot - cum[:-1]) ** 2 / (n - counts)
        sse = left_sse + right_sse
        valid = vals[:-1] < vals[1:]
        if self.min_leaf > 1:
            lo = self.min_leaf - 1
            hi = n - self.min_leaf
            valid[:lo] = False
            valid[hi:] = False
        if not valid.any():
            return None
        sse = np.where(valid, sse, np.inf)
        flat = int(np.argmin(sse))
        pos, col = divmod(flat, sse.shape[1])
        thr = (vals[pos, col] + vals[pos + 1, col]) / 2.0
        return int(feats[col]), float(thr)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if self.left[node] < 0:
                out[idx] = self.value[node]
                continue
            mask = X[idx, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], idx[mask]))
            stack.append((self.right[node], idx[~mask]))
        return out


class RandomForest:
    def __init__(self, n_trees=1000, max_depth=None, min_leaf=1,
                 feature_subsample="third", bootstrap=True, seed=0):
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees: list[RegressionTree] = []

    def _n_features(self, m):
        if self.feature_subsample in (None, "all"):
            return m
        if self.feature_subsample == "third":
            return max(1, round(m / 3))
        return max(1, min(int(self.feature_subsample), m))

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) < 2:
            raise TrainingError("random forest needs at least 2 samples")
        k = self._n_features(X.shape[1])
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self.trees = []
        for t in range(self.n_trees):
            rng = np.random.default_rng(seeds[t])
            if self.bootstrap:
                rows = rng.integers(0, len(y), len(y))
            else:
                rows = np.arange(len(y))
            tree = RegressionTree(self.max_depth, self.min_leaf, k)
            tree.fit(X[rows], y[rows], rng)
            self.trees.append(tree)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)
