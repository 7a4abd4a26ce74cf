"""Seeded network generation and the marginalized block-model likelihood.

Edge probabilities are integrated out under independent uniform priors, so
P(A|g) factorizes over layers and block pairs as m!(t-m)!/(t+1)! where t is
the number of node pairs available to the block pair and m the number of
those pairs joined by an edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BlockCounts, CommunityAssignment, TemporalNetwork, log_factorials

__all__ = [
    "SbmParameters",
    "generate_sbm",
    "block_counts",
    "marginal_log_likelihood",
    "marginal_log_likelihood_delta",
]


@dataclass(frozen=True)
class SbmParameters:
    """Per-layer symmetric k x k edge-probability matrices."""

    omega: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=np.float64)
        if omega.ndim == 2:
            omega = omega[None, :, :]
        if omega.ndim != 3 or omega.shape[1] != omega.shape[2]:
            raise ValueError("omega must be (L, k, k)")
        if (omega < 0).any() or (omega > 1).any():
            raise ValueError("edge probabilities must lie in [0, 1]")
        for ell, w in enumerate(omega):
            if not np.allclose(w, w.T):
                raise ValueError(f"omega layer {ell + 1} is not symmetric")
        omega.flags.writeable = False
        object.__setattr__(self, "omega", omega)

    @property
    def L(self):
        return self.omega.shape[0]

    @property
    def k(self):
        return self.omega.shape[1]

    @classmethod
    def two_block(cls, L, diagonal, off_diagonal):
        """Constant (L, 2, 2) parameters from a diagonal/off-diagonal pair."""
        w = np.array([[diagonal, off_diagonal], [off_diagonal, diagonal]])
        return cls(np.broadcast_to(w, (L, 2, 2)).copy())


def generate_sbm(g: CommunityAssignment, params: SbmParameters, rng) -> TemporalNetwork:
    """Independent per-layer block models: pair (i, j) in layer ell is an edge
    with probability omega[ell, g(i, ell), g(j, ell)]."""
    if params.L != g.L or params.k < g.k:
        raise ValueError(
            f"parameters (L={params.L}, k={params.k}) do not cover assignment "
            f"(L={g.L}, k={g.k})"
        )
    n = g.n
    iu = np.triu_indices(n, k=1)
    layers = np.zeros((g.L, n, n), dtype=np.uint8)
    for ell in range(g.L):
        lab = g.labels[:, ell] - 1
        probs = params.omega[ell][lab[iu[0]], lab[iu[1]]]
        edges = rng.random(probs.size) < probs
        a = layers[ell]
        a[iu[0][edges], iu[1][edges]] = 1
        layers[ell] = a | a.T
    return TemporalNetwork(layers)


def block_counts(A: TemporalNetwork, g: CommunityAssignment) -> BlockCounts:
    """Pair and edge counts per layer and block pair.

    Off-diagonal t is n_r * n_s; diagonal t is C(n_r, 2), counting unordered
    within-block pairs once.  m counts edges the same way.
    """
    if (A.n, A.L) != (g.n, g.L):
        raise ValueError(
            f"network ({A.n}, {A.L}) and assignment ({g.n}, {g.L}) dimensions differ"
        )
    k = g.k
    sizes = np.zeros((A.L, k), dtype=np.int64)
    t = np.zeros((A.L, k, k), dtype=np.int64)
    m = np.zeros((A.L, k, k), dtype=np.int64)
    for ell in range(A.L):
        lab = g.labels[:, ell] - 1
        sz = np.bincount(lab, minlength=k)
        sizes[ell] = sz
        t[ell] = np.outer(sz, sz)
        np.fill_diagonal(t[ell], sz * (sz - 1) // 2)
        onehot = np.equal.outer(np.arange(k), lab).astype(np.int64)
        pair_edges = onehot @ A.layers[ell].astype(np.int64) @ onehot.T
        m[ell] = pair_edges
        np.fill_diagonal(m[ell], np.diagonal(pair_edges) // 2)
    return BlockCounts(t=t, m=m, sizes=sizes)


def marginal_log_likelihood(counts: BlockCounts) -> float:
    """Sum over layers and block pairs r <= s of log[m!(t-m)!/(t+1)!]."""
    if (counts.m > counts.t).any():
        raise ValueError("edge count exceeds pair count")
    k = counts.k
    iu = np.triu_indices(k)
    t = counts.t[:, iu[0], iu[1]].ravel()
    m = counts.m[:, iu[0], iu[1]].ravel()
    lf = log_factorials(int(t.max()) + 1 if t.size else 1)
    return float((lf[m] + lf[t - m] - lf[t + 1]).sum())


@dataclass(frozen=True)
class Relabel:
    """A single node-layer relabeling, 1-based like all public labels."""

    node: int
    layer: int
    old: int
    new: int


def marginal_log_likelihood_delta(
    counts: BlockCounts, move: Relabel, A: TemporalNetwork, g: CommunityAssignment
) -> float:
    """Exact change in the marginal log likelihood under one relabeling.

    ``counts`` must describe (A, g); the move's old label must match g.  Only
    the affected layer's block pairs touching the two labels are recomputed.
    """
    i, ell = move.node - 1, move.layer - 1
    a_lab, b_lab = move.old - 1, move.new - 1
    if not (0 <= i < g.n and 0 <= ell < g.L):
        raise ValueError("move is out of range")
    if g.labels[i, ell] != move.old:
        raise ValueError(
            f"stale counts: node {move.node} in layer {move.layer} has label "
            f"{g.labels[i, ell]}, not {move.old}"
        )
    if a_lab == b_lab:
        return 0.0
    k = g.k
    lab = g.labels[:, ell] - 1
    nbr_mask = A.layers[ell][i].astype(bool)
    d = np.bincount(lab[nbr_mask], minlength=k).astype(np.int64)

    sizes = counts.sizes[ell].copy()
    m = counts.m[ell].copy()
    lf = log_factorials(g.n * (g.n - 1) // 2 + 1)

    # Only unordered block pairs touching the two labels change.
    pairs = set()
    for s in range(k):
        pairs.add((min(a_lab, s), max(a_lab, s)))
        pairs.add((min(b_lab, s), max(b_lab, s)))

    def term(sz, mm, lo, hi):
        tt = sz[lo] * sz[hi] if lo != hi else sz[lo] * (sz[lo] - 1) // 2
        return lf[mm[lo, hi]] + lf[tt - mm[lo, hi]] - lf[tt + 1]

    before = sum(term(sizes, m, lo, hi) for lo, hi in pairs)
    for s in range(k):
        if d[s] == 0:
            continue
        m[a_lab, s] -= d[s]
        if s != a_lab:
            m[s, a_lab] -= d[s]
        m[b_lab, s] += d[s]
        if s != b_lab:
            m[s, b_lab] += d[s]
    sizes[a_lab] -= 1
    sizes[b_lab] += 1
    after = sum(term(sizes, m, lo, hi) for lo, hi in pairs)
    return float(after - before)
