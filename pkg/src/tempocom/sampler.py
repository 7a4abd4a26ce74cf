"""Posterior sampling of community assignments given an observed network.

The main chain interleaves exact single-site Gibbs updates with occasional
multilayer label swaps (a Metropolis proposal exchanging two labels in every
layer at or after a random boundary).  Swaps are what let chains escape
label-misaligned modes: the block-model likelihood is invariant to within-
layer relabelings while the temporal priors couple consecutive layers, so
only the prior term straddling the boundary enters the acceptance ratio.

A separate simulated-annealing sampler implements the shared-kernel Markov
baseline, whose likelihood ties the edge-probability matrix across layers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import CommunityAssignment, TemporalNetwork, log_factorials, substream
from .prior_density import (
    JTable,
    MonteCarloBudget,
    _bazzi_mc_from_counts,
    build_J_table,
)
from .priors import PriorModel, sample_prior, sample_uniform_assignment, sample_yang

__all__ = [
    "SamplerConfig",
    "AnnealingSchedule",
    "ChainState",
    "ChainResult",
    "gibbs_update",
    "multilayer_swap",
    "run_chain",
    "run_yang_annealing",
]

DEFAULT_SWAP_PROBABILITY = 3e-3


@dataclass(frozen=True)
class SamplerConfig:
    prior: PriorModel
    sweeps: int = 200
    burn_in: int | None = None  # default: 20% of sweeps
    thinning: int = 10
    swap_probability: float = DEFAULT_SWAP_PROBABILITY
    mc_budget: MonteCarloBudget = field(default_factory=MonteCarloBudget)
    seed: int = 0
    init: str = "uniform"  # "uniform" labels, or a "prior" draw
    debug_checks: bool = False

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not 0.0 <= self.swap_probability <= 1.0:
            raise ValueError("swap_probability must lie in [0, 1]")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.init not in ("uniform", "prior"):
            raise ValueError('init must be "uniform" or "prior"')

    @property
    def effective_burn_in(self):
        return self.sweeps // 5 if self.burn_in is None else self.burn_in


_DEFAULT_ANNEALING = ((1.0, 20), (0.9, 10), (0.8, 10), (0.7, 10), (0.6, 10),
                      (0.5, 10), (0.4, 10), (0.3, 5), (0.2, 5), (0.1, 5))


@dataclass(frozen=True)
class AnnealingSchedule:
    """(temperature, sweep count) stages; temperatures positive, non-increasing."""

    stages: tuple = _DEFAULT_ANNEALING

    def __post_init__(self):
        stages = tuple((float(t), int(i)) for t, i in self.stages)
        if not stages:
            raise ValueError("schedule must be non-empty")
        temps = [t for t, _ in stages]
        if any(t <= 0 for t in temps) or any(i < 1 for _, i in stages):
            raise ValueError("temperatures must be positive and counts >= 1")
        if any(a < b for a, b in zip(temps, temps[1:])):
            raise ValueError("temperatures must be non-increasing")
        object.__setattr__(self, "stages", stages)


class ChainState:
    """Mutable sampler state: current labels plus incremental caches.

    Caches per-layer community sizes and block edge counts (likelihood),
    per-boundary transition-count matrices (temporal priors), and a running
    unnormalized log posterior.  Labels are 0-based internally; plain Python
    lists keep the single-site loop cheap.
    """

    def __init__(self, A: TemporalNetwork, g0: CommunityAssignment, prior: PriorModel,
                 table: JTable | None = None,
                 budget: MonteCarloBudget | None = None, mc_rng=None):
        if (A.n, A.L) != (prior.n, prior.L):
            raise ValueError(
                f"network ({A.n}, {A.L}) does not match prior ({prior.n}, {prior.L})"
            )
        if (g0.n, g0.L) != (A.n, A.L) or g0.k != prior.k:
            raise ValueError("initial assignment does not match the model dimensions")
        if prior.kind == "yang":
            raise ValueError("use run_yang_annealing for the shared-kernel baseline")
        self.prior = prior
        self.n, self.L, self.k = prior.n, prior.L, prior.k
        self.kind = prior.kind
        self.budget = budget or MonteCarloBudget()
        self.mc_rng = mc_rng if mc_rng is not None else np.random.default_rng()
        n, L, k = self.n, self.L, self.k

        self.adj = [
            [np.flatnonzero(A.layers[ell][i]).tolist() for i in range(n)]
            for ell in range(L)
        ]
        self.labels = (np.asarray(g0.labels).T - 1).tolist()

        max_t = n * (n - 1) // 2
        self.lf = log_factorials(max(max_t + 1, n + k)).tolist()

        self.sizes = []
        self.m = []
        for ell in range(L):
            lab = self.labels[ell]
            sz = [0] * k
            for v in lab:
                sz[v] += 1
            self.sizes.append(sz)
            mm = [[0] * k for _ in range(k)]
            for i in range(n):
                li = lab[i]
                for j in self.adj[ell][i]:
                    if j > i:
                        lj = lab[j]
                        mm[li][lj] += 1
                        if li != lj:
                            mm[lj][li] += 1
            self.m.append(mm)

        self.trans = []
        for ell in range(L - 1):
            c = [[0] * k for _ in range(k)]
            prev, cur = self.labels[ell], self.labels[ell + 1]
            for i in range(n):
                c[prev[i]][cur[i]] += 1
            self.trans.append(c)

        if self.kind == "lecs" and k >= 2:
            if table is None:
                table = build_J_table(n)
            if table.n_max < n:
                raise ValueError(f"J table n_max={table.n_max} is too small for n={n}")
            self.logJ = table.log_values.tolist()
            lf = self.lf
            self.lp_comp = [lf[mv + k - 2] - lf[mv] - lf[k - 2] for mv in range(n + 1)]
        self.log_post = self._full_log_posterior()

    # ----- from-scratch evaluations (initialization and consistency checks)

    def _layer_loglik(self, ell):
        lf, k = self.lf, self.k
        sz, mm = self.sizes[ell], self.m[ell]
        total = 0.0
        for x in range(k):
            t = sz[x] * (sz[x] - 1) // 2
            total += lf[mm[x][x]] + lf[t - mm[x][x]] - lf[t + 1]
            for y in range(x + 1, k):
                t = sz[x] * sz[y]
                total += lf[mm[x][y]] + lf[t - mm[x][y]] - lf[t + 1]
        return total

    def _first_layer_logprior(self):
        lf, n, k = self.lf, self.n, self.k
        total = -(lf[n + k - 1] - lf[n] - lf[k - 1]) - lf[n]
        for v in self.sizes[0]:
            total += lf[v]
        return total

    def _lecs_boundary_term(self, counts, src_sizes):
        lf, k = self.lf, self.k
        total = 0.0
        for q in range(k):
            n_q = src_sizes[q]
            if n_q == 0:
                continue
            row = counts[q]
            movers = n_q - row[q]
            slf = 0.0
            for s in range(k):
                slf += lf[row[s]]
            total += self.logJ[movers][n_q] - self.lp_comp[movers] - lf[n_q] + slf
        return total

    def _draw_bazzi_logs(self):
        """One fresh Monte Carlo draw set: per-draw log factors for staying
        at / moving to each label.  Shared by every term inside a single
        conditional or acceptance evaluation (common random numbers); never
        reused across visits."""
        draws, k = self.budget.draws, self.k
        alpha = self.mc_rng.random(draws)
        expo = self.mc_rng.standard_exponential((draws, k))
        kappa = expo / expo.sum(axis=1, keepdims=True)
        log_stay = np.log(alpha[:, None] + (1.0 - alpha)[:, None] * kappa)
        log_move = np.log1p(-alpha)[:, None] + np.log(kappa)
        return log_stay, log_move

    @staticmethod
    def _lse_mean(values):
        top = values.max()
        return float(top + math.log(np.exp(values - top).mean()))

    def _bazzi_term_from_logs(self, counts, log_stay, log_move):
        k = self.k
        stay = np.array([counts[s][s] for s in range(k)], dtype=np.float64)
        col = np.array([sum(counts[q][s] for q in range(k)) for s in range(k)],
                       dtype=np.float64)
        per_draw = log_stay @ stay + log_move @ (col - stay)
        return self._lse_mean(per_draw)

    def _bazzi_boundary_term(self, counts):
        log_stay, log_move = self._draw_bazzi_logs()
        return self._bazzi_term_from_logs(counts, log_stay, log_move)

    def _full_log_prior(self):
        if self.kind == "uniform":
            return -self.n * self.L * math.log(self.k)
        if self.k == 1:
            return 0.0
        total = self._first_layer_logprior()
        if self.kind == "nodewise":
            return total
        for ell in range(self.L - 1):
            if self.kind == "lecs":
                total += self._lecs_boundary_term(self.trans[ell], self.sizes[ell])
            else:
                total += self._bazzi_boundary_term(self.trans[ell])
        return total

    def _full_log_posterior(self):
        return sum(self._layer_loglik(ell) for ell in range(self.L)) + self._full_log_prior()

    def check_consistency(self):
        """Rebuild every cache from the labels and compare; raises on drift."""
        n, L, k = self.n, self.L, self.k
        for ell in range(L):
            lab = self.labels[ell]
            sz = [0] * k
            for v in lab:
                sz[v] += 1
            if sz != self.sizes[ell]:
                raise RuntimeError(f"size cache stale in layer {ell + 1}")
            mm = [[0] * k for _ in range(k)]
            for i in range(n):
                li = lab[i]
                for j in self.adj[ell][i]:
                    if j > i:
                        lj = lab[j]
                        mm[li][lj] += 1
                        if li != lj:
                            mm[lj][li] += 1
            if mm != self.m[ell]:
                raise RuntimeError(f"edge-count cache stale in layer {ell + 1}")
        for ell in range(L - 1):
            c = [[0] * k for _ in range(k)]
            for i in range(n):
                c[self.labels[ell][i]][self.labels[ell + 1][i]] += 1
            if c != self.trans[ell]:
                raise RuntimeError(f"transition cache stale at boundary {ell + 1}")
        if self.kind != "bazzi":  # Monte Carlo prior terms carry fresh noise
            expected = self._full_log_posterior()
            if abs(expected - self.log_post) > 1e-6 * max(1.0, abs(expected)):
                raise RuntimeError(
                    f"running log posterior drifted: {self.log_post} vs {expected}"
                )

    # ----- single-site machinery

    def _edge_counts_to_blocks(self, i, ell):
        d = [0] * self.k
        lab = self.labels[ell]
        for j in self.adj[ell][i]:
            d[lab[j]] += 1
        return d

    def _loglik_delta(self, ell, a, r, d):
        """Change in the layer's likelihood term when one node moves a -> r."""
        lf = self.lf
        sz, mm = self.sizes[ell], self.m[ell]
        na, nr = sz[a], sz[r]
        # within-a pair
        t_old = na * (na - 1) // 2
        t_new = (na - 1) * (na - 2) // 2
        mv = mm[a][a]
        delta = (lf[mv - d[a]] + lf[t_new - mv + d[a]] - lf[t_new + 1]) - (
            lf[mv] + lf[t_old - mv] - lf[t_old + 1]
        )
        # within-r pair
        t_old = nr * (nr - 1) // 2
        t_new = (nr + 1) * nr // 2
        mv = mm[r][r]
        delta += (lf[mv + d[r]] + lf[t_new - mv - d[r]] - lf[t_new + 1]) - (
            lf[mv] + lf[t_old - mv] - lf[t_old + 1]
        )
        # the (a, r) cross pair
        t_old = na * nr
        t_new = (na - 1) * (nr + 1)
        mv = mm[a][r]
        mv_new = mv - d[r] + d[a]
        delta += (lf[mv_new] + lf[t_new - mv_new] - lf[t_new + 1]) - (
            lf[mv] + lf[t_old - mv] - lf[t_old + 1]
        )
        for s in range(self.k):
            if s == a or s == r:
                continue
            ns = sz[s]
            t_old = na * ns
            t_new = (na - 1) * ns
            mv = mm[a][s]
            delta += (lf[mv - d[s]] + lf[t_new - mv + d[s]] - lf[t_new + 1]) - (
                lf[mv] + lf[t_old - mv] - lf[t_old + 1]
            )
            t_old = nr * ns
            t_new = (nr + 1) * ns
            mv = mm[r][s]
            delta += (lf[mv + d[s]] + lf[t_new - mv - d[s]] - lf[t_new + 1]) - (
                lf[mv] + lf[t_old - mv] - lf[t_old + 1]
            )
        return delta

    def _first_layer_delta(self, a, r):
        lf, sz = self.lf, self.sizes[0]
        return lf[sz[r] + 1] - lf[sz[r]] + lf[sz[a] - 1] - lf[sz[a]]

    def _lecs_prior_delta(self, i, ell, a, r):
        """Change in the prior terms affected by relabeling (i, ell) a -> r."""
        lf = self.lf
        delta = 0.0
        if ell == 0:
            delta += self._first_layer_delta(a, r)
        else:
            q = self.labels[ell - 1][i]
            row = self.trans[ell - 1][q]
            n_q = self.sizes[ell - 1][q]
            movers_old = n_q - row[q]
            movers_new = movers_old + (1 if q == a else 0) - (1 if q == r else 0)
            delta += (
                self.logJ[movers_new][n_q]
                - self.logJ[movers_old][n_q]
                - self.lp_comp[movers_new]
                + self.lp_comp[movers_old]
                + lf[row[a] - 1]
                - lf[row[a]]
                + lf[row[r] + 1]
                - lf[row[r]]
            )
        if ell < self.L - 1:
            nxt = self.labels[ell + 1][i]
            counts = self.trans[ell]
            sz = self.sizes[ell]
            for (q, n_new, shift) in ((a, sz[a] - 1, -1), (r, sz[r] + 1, +1)):
                row = counts[q]
                n_old = sz[q]
                if n_old > 0:
                    movers = n_old - row[q]
                    slf = 0.0
                    for s in range(self.k):
                        slf += lf[row[s]]
                    delta -= self.logJ[movers][n_old] - self.lp_comp[movers] - lf[n_old] + slf
                if n_new > 0:
                    c_qq = row[q] + (shift if q == nxt else 0)
                    movers = n_new - c_qq
                    slf = 0.0
                    for s in range(self.k):
                        slf += lf[row[s] + (shift if s == nxt else 0)]
                    delta += self.logJ[movers][n_new] - self.lp_comp[movers] - lf[n_new] + slf
        return delta

    def _bazzi_candidate_terms(self, i, ell, a):
        """Monte Carlo boundary terms for every candidate label.

        One fresh draw set serves the whole conditional evaluation; each
        candidate only shifts the per-draw log product by the difference of
        the affected node's own factor, so candidates whose counts coincide
        with the current state's cancel exactly.
        """
        k = self.k
        log_stay, log_move = self._draw_bazzi_logs()
        terms = [0.0] * k
        if ell > 0:
            q = self.labels[ell - 1][i]
            base = np.zeros(self.budget.draws)
            counts = self.trans[ell - 1]
            stay = np.array([counts[s][s] for s in range(k)], dtype=np.float64)
            col = np.array([sum(counts[x][s] for x in range(k)) for s in range(k)],
                           dtype=np.float64)
            base = log_stay @ stay + log_move @ (col - stay)
            base_term = self._lse_mean(base)
            old_col = log_stay[:, a] if q == a else log_move[:, a]
            for r in range(k):
                if r == a:
                    terms[r] += base_term
                else:
                    new_col = log_stay[:, r] if q == r else log_move[:, r]
                    terms[r] += self._lse_mean(base - old_col + new_col)
        if ell < self.L - 1:
            nxt = self.labels[ell + 1][i]
            counts = self.trans[ell]
            stay = np.array([counts[s][s] for s in range(k)], dtype=np.float64)
            col = np.array([sum(counts[x][s] for x in range(k)) for s in range(k)],
                           dtype=np.float64)
            base = log_stay @ stay + log_move @ (col - stay)
            base_term = self._lse_mean(base)
            flipped_term = None
            was_staying = a == nxt
            for r in range(k):
                if (r == nxt) == was_staying:
                    terms[r] += base_term  # the node's stay flag is unchanged
                else:
                    if flipped_term is None:
                        old_col = log_stay[:, nxt] if was_staying else log_move[:, nxt]
                        new_col = log_move[:, nxt] if was_staying else log_stay[:, nxt]
                        flipped_term = self._lse_mean(base - old_col + new_col)
                    terms[r] += flipped_term
        return terms

    def _candidate_log_weights(self, i, ell):
        """Unnormalized log weights of the full conditional, plus the per-
        candidate (likelihood, prior) deltas needed to apply a move."""
        k = self.k
        a = self.labels[ell][i]
        d = self._edge_counts_to_blocks(i, ell)
        lik = [0.0] * k
        pri = [0.0] * k
        for r in range(k):
            if r != a:
                lik[r] = self._loglik_delta(ell, a, r, d)
        if self.kind == "lecs":
            for r in range(k):
                if r != a:
                    pri[r] = self._lecs_prior_delta(i, ell, a, r)
        elif self.kind == "nodewise":
            for r in range(k):
                if r != a:
                    pri[r] = self._first_layer_delta(a, r)
        elif self.kind == "bazzi":
            terms = self._bazzi_candidate_terms(i, ell, a)
            for r in range(k):
                pri[r] = terms[r] - terms[a]
                if r != a and ell == 0:
                    pri[r] += self._first_layer_delta(a, r)
        logw = [lik[r] + pri[r] for r in range(k)]
        return a, d, logw, lik, pri

    def full_conditional(self, i, ell):
        """Exact single-site conditional P(g(i, ell) = . | rest, A), 0-based."""
        if self.k == 1:
            return [1.0]
        _, _, logw, _, _ = self._candidate_log_weights(i, ell)
        top = max(logw)
        weights = [math.exp(w - top) for w in logw]
        total = sum(weights)
        return [w / total for w in weights]

    def _gibbs_visit(self, i, ell, rng):
        if self.k == 1:
            return
        a, d, logw, lik, pri = self._candidate_log_weights(i, ell)
        top = max(logw)
        weights = [math.exp(w - top) for w in logw]
        u = rng.random() * sum(weights)
        acc = 0.0
        r = self.k - 1
        for idx, w in enumerate(weights):
            acc += w
            if u < acc:
                r = idx
                break
        if r != a:
            self._apply_move(i, ell, a, r, d, lik[r] + pri[r])

    def _apply_move(self, i, ell, a, r, d, log_post_delta):
        mm = self.m[ell]
        for s in range(self.k):
            if d[s]:
                mm[a][s] -= d[s]
                if s != a:
                    mm[s][a] -= d[s]
                mm[r][s] += d[s]
                if s != r:
                    mm[s][r] += d[s]
        self.sizes[ell][a] -= 1
        self.sizes[ell][r] += 1
        self.labels[ell][i] = r
        if ell > 0:
            q = self.labels[ell - 1][i]
            self.trans[ell - 1][q][a] -= 1
            self.trans[ell - 1][q][r] += 1
        if ell < self.L - 1:
            nxt = self.labels[ell + 1][i]
            self.trans[ell][a][nxt] -= 1
            self.trans[ell][r][nxt] += 1
        self.log_post += log_post_delta

    def apply_move(self, i, ell, r):
        """Relabel node i in layer ell (0-based) to r and update all caches."""
        a = self.labels[ell][i]
        if r == a:
            return
        d = self._edge_counts_to_blocks(i, ell)
        lik = self._loglik_delta(ell, a, r, d)
        if self.kind == "lecs":
            pri = self._lecs_prior_delta(i, ell, a, r)
        elif self.kind == "nodewise" or (self.kind == "bazzi" and ell == 0):
            pri = self._first_layer_delta(a, r)
        else:
            pri = 0.0
        self._apply_move(i, ell, a, r, d, lik + pri)

    def _apply_label_swap(self, r, s, ell0):
        """Exchange labels r and s (0-based) in every layer >= ell0 (0-based)."""
        for ell in range(ell0, self.L):
            lab = self.labels[ell]
            for i in range(self.n):
                if lab[i] == r:
                    lab[i] = s
                elif lab[i] == s:
                    lab[i] = r
            sz = self.sizes[ell]
            sz[r], sz[s] = sz[s], sz[r]
            mm = self.m[ell]
            for row in mm:
                row[r], row[s] = row[s], row[r]
            mm[r], mm[s] = mm[s], mm[r]
        for b in range(max(ell0 - 1, 0), self.L - 1):
            c = self.trans[b]
            for row in c:
                row[r], row[s] = row[s], row[r]  # destination layer swapped
            if b >= ell0:
                c[r], c[s] = c[s], c[r]  # source layer swapped too

    def to_assignment(self) -> CommunityAssignment:
        return CommunityAssignment(
            np.asarray(self.labels, dtype=np.int64).T + 1, k=self.k
        )

    def labels_matrix(self):
        """Current labels as a compact (n, L) 1-based array."""
        dtype = np.int8 if self.k < 127 else np.int64
        return (np.asarray(self.labels).T + 1).astype(dtype)


def gibbs_update(state: ChainState, i: int, ell: int, rng) -> ChainState:
    """Resample the label of node-layer (i, ell), 1-based, from its exact
    full conditional; caches update in place."""
    if not (1 <= i <= state.n and 1 <= ell <= state.L):
        raise ValueError(f"node-layer ({i}, {ell}) out of range")
    state._gibbs_visit(i - 1, ell - 1, rng)
    return state


def _swap_prior_delta(state, r, s, ell0):
    """Prior log-probability change of swapping labels r, s from layer ell0 on.

    The likelihood and every prior term wholly inside or outside the swapped
    region are invariant.  At ell0 = 0 the whole assignment is relabeled and
    the first-layer term depends only on the size multiset, so the change is
    exactly zero; otherwise only the straddling transition term matters.
    """
    if state.kind in ("uniform", "nodewise") or ell0 == 0:
        return 0.0
    counts = state.trans[ell0 - 1]
    swapped = [row[:] for row in counts]
    for row in swapped:
        row[r], row[s] = row[s], row[r]
    src_sizes = state.sizes[ell0 - 1]
    if state.kind == "lecs":
        return state._lecs_boundary_term(swapped, src_sizes) - state._lecs_boundary_term(
            counts, src_sizes
        )
    log_stay, log_move = state._draw_bazzi_logs()
    return state._bazzi_term_from_logs(swapped, log_stay, log_move) - state._bazzi_term_from_logs(
        counts, log_stay, log_move
    )


def multilayer_swap(state: ChainState, rng):
    """Propose exchanging two distinct labels in all layers at or after a
    uniform boundary; accept by the Metropolis ratio.  Returns (state, flag)."""
    k, L = state.k, state.L
    if k < 2:
        return state, False
    r = int(rng.integers(k))
    s = int(rng.integers(k - 1))
    if s >= r:
        s += 1
    ell0 = int(rng.integers(L))
    delta = _swap_prior_delta(state, r, s, ell0)
    accept = delta >= 0.0 or rng.random() < math.exp(delta)
    if accept:
        state._apply_label_swap(r, s, ell0)
        state.log_post += delta
    return state, accept


@dataclass
class ChainResult:
    """Recorded posterior samples and chain diagnostics."""

    samples: list
    sample_sweeps: list
    log_posterior: list
    swap_attempts: int
    swap_accepts: int
    final: CommunityAssignment
    config: SamplerConfig

    @property
    def swap_acceptance_rate(self):
        return self.swap_accepts / self.swap_attempts if self.swap_attempts else float("nan")

    def assignments(self):
        k = self.config.prior.k
        return [CommunityAssignment(s.astype(np.int64), k=k) for s in self.samples]


def run_chain(A: TemporalNetwork, cfg: SamplerConfig, table: JTable | None = None,
              collector=None, trace_file=None) -> ChainResult:
    """Run the Gibbs-plus-swaps sampler on the network.

    Node-layers are visited in node-major order; each visit performs a Gibbs
    update with probability 1 - swap_probability and a multilayer swap
    otherwise.  States are recorded after burn-in every ``thinning`` sweeps;
    ``collector(sweep, labels)`` overrides the default in-memory recording.
    The seed is split into independent substreams (initialization, move
    branching, Gibbs draws, swap draws, Monte Carlo), so a zero swap
    probability reproduces the plain Gibbs trajectory bitwise.

    Chains start from independent uniform labels by default: draws from the
    temporal priors themselves regularly contain near-empty communities,
    which are absorbing traps for single-site updates under the
    count-splitting prior (extreme transition-count vectors carry large
    per-assignment mass, so re-nucleating a community is punished at every
    step).  ``init="prior"`` restores prior-draw initialization.
    """
    prior = cfg.prior
    if prior.kind == "yang":
        raise ValueError("use run_yang_annealing for the shared-kernel baseline")
    init_rng = substream(cfg.seed, 0)
    branch_rng = substream(cfg.seed, 1)
    gibbs_rng = substream(cfg.seed, 2)
    swap_rng = substream(cfg.seed, 3)
    mc_rng = substream(cfg.seed, 4)
    if cfg.init == "uniform":
        g0 = sample_uniform_assignment(prior.n, prior.L, prior.k, init_rng)
    else:
        g0 = sample_prior(prior, init_rng)
    state = ChainState(A, g0, prior, table=table, budget=cfg.mc_budget, mc_rng=mc_rng)

    n, L, k = state.n, state.L, state.k
    p_swap = cfg.swap_probability if k >= 2 else 0.0
    burn_in = cfg.effective_burn_in
    samples, sample_sweeps, log_post = [], [], []
    swap_attempts = swap_accepts = 0
    trace_fh = open(trace_file, "w") if trace_file else None
    visits = 0
    try:
        for sweep in range(cfg.sweeps):
            for i in range(n):
                for ell in range(L):
                    if p_swap > 0.0 and branch_rng.random() < p_swap:
                        _, accepted = multilayer_swap(state, swap_rng)
                        swap_attempts += 1
                        swap_accepts += int(accepted)
                    else:
                        state._gibbs_visit(i, ell, gibbs_rng)
                    visits += 1
                    if cfg.debug_checks and visits % 1000 == 0:
                        state.check_consistency()
            if sweep >= burn_in and (sweep - burn_in) % cfg.thinning == 0:
                labels = state.labels_matrix()
                log_post.append(state.log_post)
                sample_sweeps.append(sweep)
                if collector is not None:
                    collector(sweep, labels)
                else:
                    samples.append(labels)
                if trace_fh is not None:
                    trace_fh.write(
                        json.dumps(
                            {"sweep": sweep, "log_posterior": state.log_post,
                             "g": labels.tolist()}
                        )
                        + "\n"
                    )
    finally:
        if trace_fh is not None:
            trace_fh.close()
    return ChainResult(
        samples=samples,
        sample_sweeps=sample_sweeps,
        log_posterior=log_post,
        swap_attempts=swap_attempts,
        swap_accepts=swap_accepts,
        final=state.to_assignment(),
        config=cfg,
    )


class _YangState:
    """State for the shared-kernel annealing baseline.

    The likelihood shares one edge-probability matrix across layers, so pair
    and edge counts are pooled over layers before marginalization.  The
    prior's shared kernel is collapsed: with flat Dirichlet rows, the
    transition counts pooled across all layer boundaries give each source
    row a Dirichlet-multinomial term.
    """

    def __init__(self, A, g0, k):
        self.n, self.L, self.k = A.n, A.L, int(k)
        n, L, k = self.n, self.L, self.k
        self.adj = [
            [np.flatnonzero(A.layers[ell][i]).tolist() for i in range(n)]
            for ell in range(L)
        ]
        self.labels = (np.asarray(g0.labels).T - 1).tolist()
        self.lf = log_factorials(
            max(L * n * (n - 1) // 2 + 1, n * (L - 1) + k, n + k)
        ).tolist()
        self.sizes = []
        for ell in range(L):
            sz = [0] * k
            for v in self.labels[ell]:
                sz[v] += 1
            self.sizes.append(sz)
        # Pooled pair counts T and edge counts M over all layers.
        self.T = [[0] * k for _ in range(k)]
        for sz in self.sizes:
            for x in range(k):
                self.T[x][x] += sz[x] * (sz[x] - 1) // 2
                for y in range(x + 1, k):
                    self.T[x][y] += sz[x] * sz[y]
                    self.T[y][x] += sz[x] * sz[y]
        self.M = [[0] * k for _ in range(k)]
        for ell in range(L):
            lab = self.labels[ell]
            for i in range(n):
                li = lab[i]
                for j in self.adj[ell][i]:
                    if j > i:
                        lj = lab[j]
                        self.M[li][lj] += 1
                        if li != lj:
                            self.M[lj][li] += 1
        # Pooled transition counts over all boundaries, plus row sums.
        self.N = [[0] * k for _ in range(k)]
        for ell in range(L - 1):
            for i in range(n):
                self.N[self.labels[ell][i]][self.labels[ell + 1][i]] += 1
        self.rowN = [sum(row) for row in self.N]

    def log_likelihood(self):
        lf, k = self.lf, self.k
        total = 0.0
        for x in range(k):
            for y in range(x, k):
                t = self.T[x][y]
                mv = self.M[x][y]
                total += lf[mv] + lf[t - mv] - lf[t + 1]
        return total

    def log_prior(self):
        lf, k, n = self.lf, self.k, self.n
        total = -(lf[n + k - 1] - lf[n] - lf[k - 1]) - lf[n]
        for v in self.sizes[0]:
            total += lf[v]
        for q in range(k):
            total += lf[k - 1] - lf[self.rowN[q] + k - 1]
            for v in self.N[q]:
                total += lf[v]
        return total

    def _visit(self, i, ell, temperature, rng):
        k = self.k
        if k == 1:
            return
        lf = self.lf
        a = self.labels[ell][i]
        d = [0] * k
        lab = self.labels[ell]
        for j in self.adj[ell][i]:
            d[lab[j]] += 1
        sz = self.sizes[ell]
        logw = [0.0] * k
        for r in range(k):
            if r == a:
                continue
            na, nr = sz[a], sz[r]
            delta = 0.0
            for x, y, dm, dt in (
                (a, a, -d[a], -(na - 1)),
                (r, r, d[r], nr),
                (a, r, d[a] - d[r], na - nr - 1),
            ):
                t_old = self.T[x][y]
                t_new = t_old + dt
                mv = self.M[x][y]
                delta += (lf[mv + dm] + lf[t_new - mv - dm] - lf[t_new + 1]) - (
                    lf[mv] + lf[t_old - mv] - lf[t_old + 1]
                )
            for s in range(k):
                if s == a or s == r:
                    continue
                ns = sz[s]
                t_old = self.T[a][s]
                mv = self.M[a][s]
                delta += (lf[mv - d[s]] + lf[t_old - ns - mv + d[s]] - lf[t_old - ns + 1]) - (
                    lf[mv] + lf[t_old - mv] - lf[t_old + 1]
                )
                t_old = self.T[r][s]
                mv = self.M[r][s]
                delta += (lf[mv + d[s]] + lf[t_old + ns - mv - d[s]] - lf[t_old + ns + 1]) - (
                    lf[mv] + lf[t_old - mv] - lf[t_old + 1]
                )
            if ell == 0:
                delta += lf[sz[r] + 1] - lf[sz[r]] + lf[sz[a] - 1] - lf[sz[a]]
            # Pooled transition-count terms; aggregate per cell because the
            # two affected boundaries can hit the same cell.
            cells = {}
            if ell > 0:
                q = self.labels[ell - 1][i]
                cells[(q, a)] = cells.get((q, a), 0) - 1
                cells[(q, r)] = cells.get((q, r), 0) + 1
            if ell < self.L - 1:
                nxt = self.labels[ell + 1][i]
                cells[(a, nxt)] = cells.get((a, nxt), 0) - 1
                cells[(r, nxt)] = cells.get((r, nxt), 0) + 1
                delta += lf[self.rowN[a] + k - 1] - lf[self.rowN[a] + k - 2]
                delta += lf[self.rowN[r] + k - 1] - lf[self.rowN[r] + k]
            for (x, y), c in cells.items():
                if c:
                    delta += lf[self.N[x][y] + c] - lf[self.N[x][y]]
            logw[r] = delta / temperature
        top = max(logw)
        weights = [math.exp(w - top) for w in logw]
        u = rng.random() * sum(weights)
        acc = 0.0
        r = k - 1
        for idx, w in enumerate(weights):
            acc += w
            if u < acc:
                r = idx
                break
        if r != a:
            self._move(i, ell, a, r, d)

    def _move(self, i, ell, a, r, d):
        k = self.k
        sz = self.sizes[ell]
        na, nr = sz[a], sz[r]
        self.T[a][a] -= na - 1
        self.T[r][r] += nr
        self.T[a][r] += na - nr - 1
        self.T[r][a] += na - nr - 1
        for s in range(k):
            if s == a or s == r:
                continue
            ns = sz[s]
            self.T[a][s] -= ns
            self.T[s][a] -= ns
            self.T[r][s] += ns
            self.T[s][r] += ns
        for s in range(k):
            if d[s]:
                self.M[a][s] -= d[s]
                if s != a:
                    self.M[s][a] -= d[s]
                self.M[r][s] += d[s]
                if s != r:
                    self.M[s][r] += d[s]
        sz[a] -= 1
        sz[r] += 1
        self.labels[ell][i] = r
        if ell > 0:
            q = self.labels[ell - 1][i]
            self.N[q][a] -= 1
            self.N[q][r] += 1
        if ell < self.L - 1:
            nxt = self.labels[ell + 1][i]
            self.N[a][nxt] -= 1
            self.N[r][nxt] += 1
            self.rowN[a] -= 1
            self.rowN[r] += 1


def run_yang_annealing(A: TemporalNetwork, k: int, schedule: AnnealingSchedule | None = None,
                       rng=None):
    """Simulated-annealing Gibbs sampler for the shared-kernel baseline.

    Runs the scheduled number of full sweeps at each temperature over the
    tempered conditionals; returns (point estimate, per-sweep joint
    log-probability trace).
    """
    schedule = schedule or AnnealingSchedule()
    rng = rng if rng is not None else np.random.default_rng()
    g0 = sample_yang(A.n, A.L, int(k), rng)
    state = _YangState(A, g0, k)
    trace = []
    for temperature, iters in schedule.stages:
        for _ in range(iters):
            for i in range(state.n):
                for ell in range(state.L):
                    state._visit(i, ell, temperature, rng)
            trace.append(state.log_likelihood() + state.log_prior())
    final = CommunityAssignment(np.asarray(state.labels, dtype=np.int64).T + 1, k=int(k))
    return final, trace
