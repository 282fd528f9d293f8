"""Ward minimum-variance hierarchical clustering of feature vectors.

Agglomerative Lance-Williams recursion on squared Euclidean
dissimilarities, so each merge height equals the (doubled) increase in
total within-cluster variance. Merged clusters get ids n, n+1, ... in
creation order, after the leaf ids 0..n-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureTable:
    """Rows of feature vectors with ids; no missing values allowed."""

    ids: tuple[str, ...]
    features: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        x = x.reshape(len(self.ids), -1)
        if x.shape[0] < 2:
            raise ValueError("clustering needs at least 2 rows")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain NaN or infinite entries")
        names = tuple(self.feature_names) or tuple(
            f"f{j}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValueError("one name per feature column required")
        x.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "ids", tuple(self.ids))

    def zscored(self) -> "FeatureTable":
        x = self.features
        sd = x.std(axis=0, ddof=0)
        sd = np.where(sd > 0, sd, 1.0)
        return FeatureTable(self.ids, (x - x.mean(axis=0)) / sd, self.feature_names)


@dataclass(frozen=True)
class Dendrogram:
    """Merge history: (cluster_a, cluster_b, height) per step, heights
    non-decreasing; new clusters are numbered from n_leaves upward."""

    n_leaves: int
    merges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError("a dendrogram has exactly n-1 merges")

    @property
    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "merges": [
                {"a": a, "b": b, "height": h} for a, b, h in self.merges
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_newick(self, labels=None) -> str:
        if labels is None:
            labels = [str(i) for i in range(self.n_leaves)]
        node = {i: lab for i, lab in enumerate(labels)}
        for step, (a, b, h) in enumerate(self.merges):
            node[self.n_leaves + step] = f"({node.pop(a)},{node.pop(b)}):{h:.6g}"
        (root,) = node.values()
        return root + ";"


def ward_cluster(table: FeatureTable) -> Dendrogram:
    """Agglomerative Ward clustering.

    At every step the active pair with the smallest Lance-Williams
    dissimilarity merges; exact ties break on the lowest (a, b) pair of
    cluster ids.
    """
    x = table.features
    n = x.shape[0]
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2)

    size = n + n - 1
    d = np.full((size, size), np.inf)
    d[:n, :n] = sq
    np.fill_diagonal(d, np.inf)
    active = np.zeros(size, dtype=bool)
    active[:n] = True
    counts = np.zeros(size)
    counts[:n] = 1.0

    merges = []
    for step in range(n - 1):
        live = np.where(active)[0]
        sub = d[np.ix_(live, live)]
        iu = np.triu_indices(len(live), k=1)
        flat = np.argmin(sub[iu])  # row-major over the triangle: lowest pair wins ties
        a, b = int(live[iu[0][flat]]), int(live[iu[1][flat]])
        height = float(d[a, b])
        merges.append((a, b, height))

        new = n + step
        sa, sb = counts[a], counts[b]
        others = live[(live != a) & (live != b)]
        if others.size:
            sc = counts[others]
            upd = ((sa + sc) * d[a, others] + (sb + sc) * d[b, others]
                   - sc * height) / (sa + sb + sc)
            d[new, others] = upd
            d[others, new] = upd
        counts[new] = sa + sb
        active[a] = active[b] = False
        active[new] = True

    return Dendrogram(n_leaves=n, merges=tuple(merges))


def cut_tree(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Labels from the first n-k merges; label numbering follows the
    smallest member index of each cluster."""
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for step in range(n - k):
        a, b, _ = dendrogram.merges[step]
        new = n + step
        parent[find(a)] = new
        parent[find(b)] = new

    roots = [find(i) for i in range(n)]
    first_member: dict[int, int] = {}
    for i, r in enumerate(roots):
        first_member.setdefault(r, i)
    order = sorted(first_member, key=first_member.get)
    relabel = {r: lab for lab, r in enumerate(order)}
    return np.array([relabel[r] for r in roots], dtype=np.int64)
