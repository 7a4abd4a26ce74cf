"""Domain types and counting utilities shared across the package.

Conventions: community labels are 1-based (in ``[k] = {1, ..., k}``) in every
public interface; layers are 1-based as well.  All probability-like quantities
elsewhere in the package are carried as natural-log values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "TemporalNetwork",
    "CommunityAssignment",
    "WeakComposition",
    "BlockCounts",
    "SizeHistogram",
    "community_sizes",
    "transition_counts",
    "log_factorials",
    "substream",
]


def substream(seed, *key):
    """Return an independent ``numpy`` Generator for ``(seed, key)``.

    Streams with distinct keys are statistically independent, and the mapping
    is stable: it does not depend on how many other streams exist or on the
    order in which they are created, so parallel runs reproduce regardless of
    worker count.
    """
    spawn_key = tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


@lru_cache(maxsize=64)
def log_factorials(n_max):
    """Read-only array ``lf`` with ``lf[i] = log(i!)`` for ``0 <= i <= n_max``."""
    lf = gammaln(np.arange(int(n_max) + 1, dtype=np.float64) + 1.0)
    lf.flags.writeable = False
    return lf


def _frozen_array(values, dtype):
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TemporalNetwork:
    """A sequence of L simple undirected graphs on a fixed set of n nodes.

    ``layers`` is an (L, n, n) 0/1 array; each slice must be symmetric with a
    zero diagonal.
    """

    layers: np.ndarray

    def __post_init__(self):
        layers = np.asarray(self.layers)
        if layers.ndim == 2:
            layers = layers[None, :, :]
        if layers.ndim != 3 or layers.shape[1] != layers.shape[2]:
            raise ValueError(f"layers must be (L, n, n), got shape {layers.shape}")
        if layers.shape[0] < 1 or layers.shape[1] < 1:
            raise ValueError("need at least one layer and one node")
        if not np.isin(layers, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        for ell, a in enumerate(layers):
            if not np.array_equal(a, a.T):
                raise ValueError(f"layer {ell + 1} is not symmetric")
            if np.any(np.diagonal(a)):
                raise ValueError(f"layer {ell + 1} has self-edges")
        object.__setattr__(self, "layers", _frozen_array(layers, np.uint8))

    @property
    def n(self):
        return self.layers.shape[1]

    @property
    def L(self):
        return self.layers.shape[0]

    def edge_count(self, layer):
        """Number of edges in the given 1-based layer."""
        if not 1 <= layer <= self.L:
            raise ValueError(f"layer {layer} out of range [1, {self.L}]")
        return int(self.layers[layer - 1].sum()) // 2

    def to_json(self):
        """Serialize as ``{"n", "L", "layers"}`` with 1-based edge lists."""
        edge_lists = []
        for a in self.layers:
            i, j = np.nonzero(np.triu(a, k=1))
            edge_lists.append([[int(u) + 1, int(v) + 1] for u, v in zip(i, j)])
        return json.dumps({"n": self.n, "L": self.L, "layers": edge_lists})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        n, L = int(doc["n"]), int(doc["L"])
        if len(doc["layers"]) != L:
            raise ValueError(f"expected {L} edge lists, got {len(doc['layers'])}")
        layers = np.zeros((L, n, n), dtype=np.uint8)
        for ell, edges in enumerate(doc["layers"]):
            for u, v in edges:
                if not (1 <= u <= n and 1 <= v <= n) or u == v:
                    raise ValueError(f"bad edge ({u}, {v}) in layer {ell + 1}")
                layers[ell, u - 1, v - 1] = 1
                layers[ell, v - 1, u - 1] = 1
        return cls(layers)


@dataclass(frozen=True)
class CommunityAssignment:
    """Community labels for every node-layer: an (n, L) matrix over [k]."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2:
            raise ValueError(f"labels must be (n, L), got shape {labels.shape}")
        k = int(self.k)
        if k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 1 or labels.max() > k):
            raise ValueError(f"labels must lie in [1, {k}]")
        object.__setattr__(self, "labels", _frozen_array(labels, np.int64))
        object.__setattr__(self, "k", k)

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def L(self):
        return self.labels.shape[1]

    def layer(self, ell):
        """Label vector of the given 1-based layer."""
        if not 1 <= ell <= self.L:
            raise ValueError(f"layer {ell} out of range [1, {self.L}]")
        return self.labels[:, ell - 1]

    def to_json(self):
        return json.dumps(
            {"n": self.n, "L": self.L, "k": self.k, "labels": self.labels.tolist()}
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        labels = np.asarray(doc["labels"], dtype=np.int64)
        if labels.shape != (int(doc["n"]), int(doc["L"])):
            raise ValueError(
                f"labels shape {labels.shape} does not match n={doc['n']}, L={doc['L']}"
            )
        return cls(labels=labels, k=int(doc["k"]))


@dataclass(frozen=True)
class WeakComposition:
    """An ordered tuple of non-negative integers with a fixed sum."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p < 0 for p in parts):
            raise ValueError("composition parts must be non-negative")
        object.__setattr__(self, "parts", parts)

    @property
    def total(self):
        return sum(self.parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, i):
        return self.parts[i]


@dataclass(frozen=True)
class BlockCounts:
    """Per-layer pair and edge counts between community blocks.

    ``t[l, r-1, s-1]`` is the number of node pairs available to block pair
    (r, s) in layer l+1 and ``m`` the number of those pairs joined by an edge;
    diagonal entries count unordered within-block pairs once.  ``sizes`` holds
    the per-layer community sizes the ``t`` entries derive from.
    """

    t: np.ndarray
    m: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        m = np.asarray(self.m, dtype=np.int64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        if t.shape != m.shape or t.ndim != 3 or t.shape[1] != t.shape[2]:
            raise ValueError("t and m must both be (L, k, k)")
        if sizes.shape != t.shape[:2]:
            raise ValueError("sizes must be (L, k)")
        if (m < 0).any() or (m > t).any():
            raise ValueError("need 0 <= m <= t for every block pair")
        object.__setattr__(self, "t", _frozen_array(t, np.int64))
        object.__setattr__(self, "m", _frozen_array(m, np.int64))
        object.__setattr__(self, "sizes", _frozen_array(sizes, np.int64))

    @property
    def L(self):
        return self.t.shape[0]

    @property
    def k(self):
        return self.t.shape[1]


@dataclass(frozen=True)
class SizeHistogram:
    """Observed frequencies of a community-size statistic over M samples."""

    counts: np.ndarray
    M: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d array")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        total = counts.sum()
        if total <= 0:
            raise ValueError("histogram is empty")
        M = int(self.M) if self.M else int(round(total))
        object.__setattr__(self, "counts", _frozen_array(counts, np.float64))
        object.__setattr__(self, "M", M)

    @property
    def support_size(self):
        return self.counts.size

    @property
    def frequencies(self):
        return self.counts / self.counts.sum()

    @property
    def ipr(self):
        """Squared L2 norm of the normalized frequencies."""
        f = self.frequencies
        return float(f @ f)


def community_sizes(g: CommunityAssignment, layer: int) -> WeakComposition:
    """Sizes (n_1, ..., n_k) of the communities in the given 1-based layer."""
    vec = g.layer(layer)
    counts = np.bincount(vec, minlength=g.k + 1)[1:]
    return WeakComposition(tuple(int(c) for c in counts))


def transition_counts(g_prev, g_cur, k: int) -> np.ndarray:
    """(k, k) matrix whose (r, s) entry counts nodes moving from r to s.

    Row r sums to the size of community r in the earlier layer; column s sums
    to the size of community s in the later layer.
    """
    g_prev = np.asarray(g_prev, dtype=np.int64)
    g_cur = np.asarray(g_cur, dtype=np.int64)
    if g_prev.shape != g_cur.shape or g_prev.ndim != 1:
        raise ValueError(
            f"assignment vectors must share one length, got {g_prev.shape} and {g_cur.shape}"
        )
    k = int(k)
    for name, vec in (("g_prev", g_prev), ("g_cur", g_cur)):
        if vec.size and (vec.min() < 1 or vec.max() > k):
            raise ValueError(f"{name} labels must lie in [1, {k}]")
    flat = (g_prev - 1) * k + (g_cur - 1)
    return np.bincount(flat, minlength=k * k).reshape(k, k)
