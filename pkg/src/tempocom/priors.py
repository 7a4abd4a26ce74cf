"""Forward sampling of community assignments under every generative model.

All samplers take an explicit ``numpy`` Generator; use ``core.substream`` to
derive reproducible per-task streams.  Flat Dirichlet vectors are sampled as
normalized unit-rate exponentials, uniform weak compositions via the
stars-and-bars bijection, and microcanonical labelings as uniform random
permutations of a label multiset, so every stage is exactly uniform on its
target set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CommunityAssignment, WeakComposition

__all__ = [
    "RetentionMode",
    "PriorModel",
    "sample_uniform_assignment",
    "sample_uniform_composition",
    "sample_nodewise_monolayer",
    "sample_truncated_geometric",
    "sample_yang",
    "sample_bazzi",
    "sample_lecs",
    "sample_lecs_fixed_layer_sizes",
    "sample_prior",
]


@dataclass(frozen=True)
class RetentionMode:
    """Retention probability scheme: redrawn uniformly per community per
    layer (``random``) or held at a constant value (``fixed``)."""

    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("random", "fixed"):
            raise ValueError(f"unknown retention kind: {self.kind}")
        if self.kind == "fixed":
            if self.p is None or not 0.0 <= float(self.p) <= 1.0:
                raise ValueError("fixed retention requires p in [0, 1]")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise ValueError("random retention takes no probability")

    @classmethod
    def random(cls):
        return cls(kind="random")

    @classmethod
    def fixed(cls, p):
        return cls(kind="fixed", p=p)

    def draw(self, rng):
        return self.p if self.kind == "fixed" else float(rng.random())


_MODEL_KINDS = ("uniform", "nodewise", "yang", "bazzi", "lecs")


@dataclass(frozen=True)
class PriorModel:
    """A community-assignment prior together with its shared dimensions."""

    kind: str
    n: int
    L: int
    k: int
    retention: RetentionMode | None = None

    def __post_init__(self):
        if self.kind not in _MODEL_KINDS:
            raise ValueError(f"unknown prior kind: {self.kind}; expected one of {_MODEL_KINDS}")
        for name in ("n", "L", "k"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.kind == "nodewise" and self.L != 1:
            raise ValueError("the nodewise model is monolayer (L must be 1)")
        if self.kind == "lecs":
            if self.retention is None:
                object.__setattr__(self, "retention", RetentionMode.random())
        elif self.retention is not None:
            raise ValueError("retention applies to the count-splitting model only")

    @classmethod
    def uniform(cls, n, L, k):
        return cls("uniform", n, L, k)

    @classmethod
    def nodewise(cls, n, k):
        return cls("nodewise", n, 1, k)

    @classmethod
    def yang(cls, n, L, k):
        return cls("yang", n, L, k)

    @classmethod
    def bazzi(cls, n, L, k):
        return cls("bazzi", n, L, k)

    @classmethod
    def lecs(cls, n, L, k, retention=None):
        return cls("lecs", n, L, k, retention=retention or RetentionMode.random())


def _check_dims(n, L, k):
    if n < 1 or L < 1 or k < 1:
        raise ValueError("n, L, k must all be >= 1")


def sample_uniform_assignment(n, L, k, rng) -> CommunityAssignment:
    """Every node-layer label independent uniform on [k]."""
    _check_dims(n, L, k)
    return CommunityAssignment(rng.integers(1, k + 1, size=(n, L)), k=k)


def sample_uniform_composition(total, parts, rng) -> WeakComposition:
    """Uniform draw from the weak compositions of ``total`` into ``parts``.

    Stars and bars: choose parts-1 distinct bar positions among
    total+parts-1 slots; the gaps between bars are the parts.
    """
    total, parts = int(total), int(parts)
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if total < 0:
        raise ValueError("total must be >= 0")
    if parts == 1:
        return WeakComposition((total,))
    slots = total + parts - 1
    bars = np.sort(rng.choice(slots, size=parts - 1, replace=False))
    edges = np.concatenate(([-1], bars, [slots]))
    return WeakComposition(tuple(int(d) for d in np.diff(edges) - 1))


def _dirichlet_flat(k, rng):
    e = rng.standard_exponential(k)
    return e / e.sum()


def _labels_from_probs(pi, n, rng):
    cum = np.cumsum(pi)
    idx = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
    return np.minimum(idx, pi.size - 1) + 1


def sample_nodewise_monolayer(n, k, rng) -> CommunityAssignment:
    """Labels iid from a flat-Dirichlet probability vector.

    Equivalently: sizes uniform over weak compositions of n into k parts,
    then a uniform labeling given the sizes.
    """
    _check_dims(n, 1, k)
    pi = _dirichlet_flat(k, rng)
    return CommunityAssignment(_labels_from_probs(pi, n, rng)[:, None], k=k)


def sample_truncated_geometric(n, p, rng) -> int:
    """Draw m in {0, ..., n} with mass proportional to p^(n-m).

    p = 1 gives the uniform distribution; p = 0 returns n (only m = n has
    weight under the 0^0 = 1 convention).
    """
    return int(_geomb_batch(np.asarray([n]), p, rng)[0])


def _geomb_batch(n_arr, p, rng):
    """Vectorized truncated-geometric draws, one per entry of ``n_arr``."""
    n_arr = np.asarray(n_arr, dtype=np.int64)
    if (n_arr < 0).any():
        raise ValueError("n must be >= 0")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return n_arr.copy()
    if p == 1.0:
        return rng.integers(0, n_arr + 1)
    # m = n - V with V ~ geometric on {0..n}: invert the CDF of V.
    u = rng.random(n_arr.shape)
    scale = -np.expm1((n_arr + 1) * math.log(p))
    v = np.floor(np.log1p(-u * scale) / math.log(p)).astype(np.int64)
    return n_arr - np.clip(v, 0, n_arr)


def sample_yang(n, L, k, rng) -> CommunityAssignment:
    """Markov model with a single kernel shared by all layers.

    Layer 1 is nodewise; one row-wise flat-Dirichlet kernel is drawn per
    assignment and every node's next label comes from the row indexed by its
    previous label.
    """
    _check_dims(n, L, k)
    labels = np.empty((n, L), dtype=np.int64)
    pi = _dirichlet_flat(k, rng)
    labels[:, 0] = _labels_from_probs(pi, n, rng)
    if L > 1:
        expo = rng.standard_exponential((k, k))
        kernel = expo / expo.sum(axis=1, keepdims=True)
        cum = np.cumsum(kernel, axis=1)
        for ell in range(1, L):
            rows = cum[labels[:, ell - 1] - 1]
            u = rng.random(n) * rows[:, -1]
            idx = (u[:, None] >= rows).sum(axis=1)
            labels[:, ell] = np.minimum(idx, k - 1) + 1
    return CommunityAssignment(labels, k=k)


def sample_bazzi(n, L, k, rng) -> CommunityAssignment:
    """Lazy Markov model with fresh per-layer laziness and redraw vector.

    Each node keeps its previous label with probability alpha_ell, else
    redraws from a layer-wide flat-Dirichlet probability vector.
    """
    _check_dims(n, L, k)
    labels = np.empty((n, L), dtype=np.int64)
    pi = _dirichlet_flat(k, rng)
    labels[:, 0] = _labels_from_probs(pi, n, rng)
    for ell in range(1, L):
        alpha = float(rng.random())
        kappa = _dirichlet_flat(k, rng)
        keep = rng.random(n) < alpha
        redraw = _labels_from_probs(kappa, n, rng)
        labels[:, ell] = np.where(keep, labels[:, ell - 1], redraw)
    return CommunityAssignment(labels, k=k)


def sample_lecs(n, L, k, retention=None, rng=None) -> CommunityAssignment:
    """Layerwise count-splitting model.

    Layer 1 is nodewise.  For each later layer and each source community:
    draw the remainer count from a truncated geometric with the retention
    probability, split the movers by a uniform weak composition over the
    other k-1 communities, then label the block microcanonically.
    """
    _check_dims(n, L, k)
    retention = retention or RetentionMode.random()
    rng = rng if rng is not None else np.random.default_rng()
    labels = np.empty((n, L), dtype=np.int64)
    if k == 1:
        labels[:] = 1
        return CommunityAssignment(labels, k=1)
    pi = _dirichlet_flat(k, rng)
    labels[:, 0] = _labels_from_probs(pi, n, rng)
    others = [np.delete(np.arange(1, k + 1), r) for r in range(k)]
    for ell in range(1, L):
        prev = labels[:, ell - 1]
        cur = labels[:, ell]
        for r in range(1, k + 1):
            block = np.flatnonzero(prev == r)
            n_r = block.size
            if n_r == 0:
                continue
            p = retention.draw(rng)
            c_rr = sample_truncated_geometric(n_r, p, rng)
            movers = sample_uniform_composition(n_r - c_rr, k - 1, rng)
            multiset = np.repeat(
                np.concatenate(([r], others[r - 1])),
                np.concatenate(([c_rr], movers.parts)),
            )
            cur[block] = rng.permutation(multiset)
    return CommunityAssignment(labels, k=k)


def sample_lecs_fixed_layer_sizes(n, L, p, chains, rng) -> np.ndarray:
    """Community-1 sizes in layer L under fixed-retention count splitting, k=2.

    Simulates ``chains`` independent full assignment processes in lockstep
    (every retention draw, remainer count, and microcanonical labeling is
    realized per chain) and returns the final-layer sizes.  Agrees in
    distribution with repeated ``sample_lecs`` calls; vectorization makes the
    long-horizon regime (hundreds of layers, 1e5 chains) affordable.
    """
    _check_dims(n, L, 2)
    chains = int(chains)
    if chains < 1:
        raise ValueError("chains must be >= 1")
    # Nodewise first layer for k = 2: membership probability uniform on [0,1].
    pi1 = rng.random((chains, 1))
    mask = rng.random((chains, n)) < pi1  # True = community 1
    cols = np.arange(n)
    for _ in range(L - 1):
        n1 = mask.sum(axis=1)
        c11 = _geomb_batch(n1, p, rng)
        c22 = _geomb_batch(n - n1, p, rng)
        movers2 = (n - n1) - c22
        # Rank nodes by (community, key): a uniform key order inside each
        # block picks the remainers uniformly, which is the microcanonical
        # labeling for k = 2.
        keys = rng.random((chains, n)) + np.where(mask, 0.0, 2.0)
        order = np.argsort(keys, axis=1)
        in_first_block = cols < n1[:, None]
        new_sorted = np.where(
            in_first_block, cols < c11[:, None], (cols - n1[:, None]) < movers2[:, None]
        )
        np.put_along_axis(mask, order, new_sorted, axis=1)
    return mask.sum(axis=1)


def sample_prior(model: PriorModel, rng) -> CommunityAssignment:
    """Draw one assignment from the given prior model."""
    if model.kind == "uniform":
        return sample_uniform_assignment(model.n, model.L, model.k, rng)
    if model.kind == "nodewise":
        return sample_nodewise_monolayer(model.n, model.k, rng)
    if model.kind == "yang":
        return sample_yang(model.n, model.L, model.k, rng)
    if model.kind == "bazzi":
        return sample_bazzi(model.n, model.L, model.k, rng)
    return sample_lecs(model.n, model.L, model.k, model.retention, rng)
