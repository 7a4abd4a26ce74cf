"""Measurement machinery: size histograms, IPR, NMI, rank tests, and the
long-horizon reference distributions for the fixed-retention model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import CommunityAssignment, SizeHistogram

__all__ = [
    "HistogramMode",
    "community_size_histogram",
    "accumulate_size_counts",
    "ipr",
    "nmi",
    "correct_assignment_fraction",
    "mann_whitney_one_sided",
    "lecs_stationary_distribution",
    "lecs_size_transition_kernel",
    "asymptotic_ipr",
]


@dataclass(frozen=True)
class HistogramMode:
    """Which size statistic to histogram: one monolayer count, one layer of a
    temporal assignment, or the total node-layer count across the network."""

    kind: str
    layer: int | None = None

    def __post_init__(self):
        if self.kind not in ("monolayer", "per_layer", "overall"):
            raise ValueError(f"unknown histogram mode: {self.kind}")
        if self.kind == "per_layer" and (self.layer is None or int(self.layer) < 1):
            raise ValueError("per_layer mode needs a 1-based layer index")

    @classmethod
    def monolayer(cls):
        return cls("monolayer")

    @classmethod
    def per_layer(cls, layer):
        return cls("per_layer", layer=int(layer))

    @classmethod
    def overall(cls):
        return cls("overall")


def _size_statistic(g: CommunityAssignment, mode: HistogramMode, community: int) -> int:
    if mode.kind == "monolayer":
        if g.L != 1:
            raise ValueError("monolayer mode requires L = 1")
        return int((g.labels[:, 0] == community).sum())
    if mode.kind == "per_layer":
        return int((g.layer(mode.layer) == community).sum())
    return int((g.labels == community).sum())


def accumulate_size_counts(samples, mode: HistogramMode, community: int, support_size: int):
    """Histogram counts of the mode's size statistic over an iterable of
    assignments, without materializing the samples."""
    counts = np.zeros(support_size, dtype=np.float64)
    total = 0
    for g in samples:
        counts[_size_statistic(g, mode, community)] += 1
        total += 1
    return counts, total


def community_size_histogram(samples, mode: HistogramMode, community: int = 1) -> SizeHistogram:
    """Observed frequencies of the community's size statistic.

    Support is {0, ..., n} for monolayer and per-layer modes and
    {0, ..., n*L} for the overall mode.
    """
    samples = list(samples) if not isinstance(samples, (list, tuple)) else samples
    if not samples:
        raise ValueError("need at least one sample")
    first = samples[0]
    if not 1 <= community <= first.k:
        raise ValueError(f"community {community} out of range [1, {first.k}]")
    support = first.n * first.L + 1 if mode.kind == "overall" else first.n + 1
    for g in samples:
        if (g.n, g.L, g.k) != (first.n, first.L, first.k):
            raise ValueError("samples must share (n, L, k)")
    counts, total = accumulate_size_counts(samples, mode, community, support)
    return SizeHistogram(counts=counts, M=total)


def ipr(h: SizeHistogram) -> float:
    """Inverse participation ratio: the squared L2 norm of the frequencies.

    Ranges from 1/(support size) for a flat histogram to 1 for a point mass;
    larger values mean a more localized size distribution.
    """
    return h.ipr


def _entropy_terms(p):
    p = p[p > 0]
    return -(p * np.log(p)).sum()


def nmi(g_a: CommunityAssignment, g_b: CommunityAssignment) -> float:
    """Normalized mutual information between two assignments.

    Mutual information over the joint label distribution of all node-layers,
    normalized by the arithmetic mean of the two label entropies; natural
    logs; 0 log 0 = 0.  Both assignments constant yields 1 by convention.
    """
    if (g_a.n, g_a.L) != (g_b.n, g_b.L):
        raise ValueError(
            f"assignments have different shapes: {(g_a.n, g_a.L)} vs {(g_b.n, g_b.L)}"
        )
    k = max(g_a.k, g_b.k)
    a = g_a.labels.ravel() - 1
    b = g_b.labels.ravel() - 1
    joint = np.bincount(a * k + b, minlength=k * k).reshape(k, k) / a.size
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    h_a = _entropy_terms(pa)
    h_b = _entropy_terms(pb)
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    mask = joint > 0
    info = (joint[mask] * np.log(joint[mask] / np.outer(pa, pb)[mask])).sum()
    value = info / (0.5 * (h_a + h_b))
    value = min(max(value, 0.0), 1.0)
    if 1.0 - value < 1e-12:  # agreement up to relabeling; shed rounding dust
        value = 1.0
    return float(value)


def correct_assignment_fraction(g_est: CommunityAssignment, g_true: CommunityAssignment) -> float:
    """Fraction of node-layers labeled correctly, maximized over global label
    permutations (k <= 6 keeps the k! scan cheap)."""
    if (g_est.n, g_est.L) != (g_true.n, g_true.L):
        raise ValueError("assignments have different shapes")
    k = max(g_est.k, g_true.k)
    if k > 6:
        raise ValueError("permutation scan supports k <= 6")
    from itertools import permutations

    est = g_est.labels.ravel()
    true = g_true.labels.ravel()
    best = 0
    for perm in permutations(range(1, k + 1)):
        table = np.asarray((0,) + perm)
        best = max(best, int((table[est] == true).sum()))
    return best / est.size


def _midranks(values):
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _rank_sum_counts(doubled_ranks, size):
    """Subset-sum table row: number of size-``size`` subsets of the doubled
    midrank multiset attaining each possible rank sum."""
    total = int(doubled_ranks.sum())
    table = np.zeros((size + 1, total + 1))
    table[0, 0] = 1.0
    for w in doubled_ranks:
        w = int(w)
        table[1:, w:] += table[:-1, : total + 1 - w]
    return table[size]


def _mann_whitney_exact(doubled_ranks, n1, n2, u_doubled):
    """P(U_x >= u) under the permutation null, exact with ties.

    Enumerates the C(n1+n2, n1) equally likely assignments of the combined
    rank multiset to the two groups by dynamic programming over the smaller
    group (counts stay within float64's exact-integer range for the sizes
    this path serves).
    """
    s_values = np.arange(int(doubled_ranks.sum()) + 1)
    if n1 <= n2:
        counts = _rank_sum_counts(doubled_ranks, n1)
        u_of_s = s_values - n1 * (n1 + 1)
        selected = counts[u_of_s >= u_doubled].sum()
    else:
        # Work with y's rank sums: U_x >= u  iff  U_y <= 2*n1*n2 - u (doubled).
        counts = _rank_sum_counts(doubled_ranks, n2)
        u_of_s = s_values - n2 * (n2 + 1)
        selected = counts[u_of_s <= 2 * n1 * n2 - u_doubled].sum()
    return float(selected / counts.sum())


def mann_whitney_one_sided(x, y, method: str = "auto") -> float:
    """One-sided Mann-Whitney U test of "x stochastically greater than y".

    Midranks handle ties.  Small samples (min size < 20, combined size at
    most 500) use the exact permutation distribution; otherwise a normal
    approximation with tie-corrected variance and continuity correction.
    ``method`` forces a path ("exact" or "approx") for cross-checking.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method: {method!r}")
    n1, n2 = x.size, y.size
    combined = np.concatenate([x, y])
    ranks = _midranks(combined)
    r_x = ranks[:n1].sum()
    u = r_x - n1 * (n1 + 1) / 2.0

    if method == "exact" or (method == "auto" and min(n1, n2) < 20 and n1 + n2 <= 500):
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        u_doubled = int(round(2.0 * u))
        return _mann_whitney_exact(doubled, n1, n2, u_doubled)

    mean_u = n1 * n2 / 2.0
    _, tie_counts = np.unique(combined, return_counts=True)
    n = n1 + n2
    tie_term = ((tie_counts**3 - tie_counts).sum()) / (n * (n - 1))
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var_u <= 0:
        return 1.0  # every value tied; no evidence of a shift
    z = (u - mean_u - 0.5) / math.sqrt(var_u)
    return float(ndtr(-z))


def lecs_stationary_distribution(n, p) -> np.ndarray:
    """Limiting single-layer size distribution of the fixed-retention model
    with two communities: pi(i) proportional to (1-p^(i+1))(1-p^(n-i+1))."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n + 1, dtype=np.float64)
    weights = -np.expm1((i + 1) * math.log(p))
    weights = weights * weights[::-1]
    return weights / weights.sum()


def lecs_size_transition_kernel(n, p) -> np.ndarray:
    """One-step kernel of the community-1 size under fixed retention, k = 2.

    From state i, the new size is i - V1 + V2 with V1, V2 independent
    truncated geometrics on {0..i} and {0..n-i}.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    kernel = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        w1 = p ** np.arange(i + 1)
        w1 /= w1.sum()
        w2 = p ** np.arange(n - i + 1)
        w2 /= w2.sum()
        for v1, p1 in enumerate(w1):
            for v2, p2 in enumerate(w2):
                kernel[i, i - v1 + v2] += p1 * p2
    return kernel


def asymptotic_ipr(n, k, model) -> float:
    """Large-n IPR plug-in for the two monolayer reference models.

    "uniform-assignments": sqrt(n) * IPR -> k / (2 sqrt(pi (k-1))).
    "uniform-compositions": n * IPR -> (k-1)^2 / (2k-3).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if model == "uniform-assignments":
        return k / (2.0 * math.sqrt(math.pi * (k - 1))) / math.sqrt(n)
    if model == "uniform-compositions":
        return (k - 1) ** 2 / (2 * k - 3) / n
    raise ValueError(f"unknown model: {model!r}")
