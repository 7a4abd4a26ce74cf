import itertools
import math
from collections import Counter

import numpy as np
import pytest

from tempocom.core import CommunityAssignment, TemporalNetwork, substream
from tempocom.likelihood import SbmParameters, block_counts, generate_sbm, marginal_log_likelihood
from tempocom.prior_density import JTable, MonteCarloBudget, build_J_table, log_prob_assignment
from tempocom.priors import PriorModel, RetentionMode
from tempocom.sampler import (
    AnnealingSchedule,
    ChainState,
    SamplerConfig,
    _YangState,
    gibbs_update,
    multilayer_swap,
    run_chain,
    run_yang_annealing,
)

from conftest import enumerate_assignments


def _uniform_prior(n, L, k=2):
    return PriorModel.uniform(n, L, k)


def _make_state(A, labels, prior, table=None, seed=0):
    g0 = CommunityAssignment(np.asarray(labels), k=prior.k)
    return ChainState(A, g0, prior, table=table, mc_rng=substream(seed, 77))


def test_full_conditional_matches_enumeration(rng):
    # uniform prior, fixed network: conditional equals the normalized joint
    n, L, k = 3, 1, 2
    g_true = CommunityAssignment(np.array([[1], [1], [2]]), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(1, 0.9, 0.05), rng)
    prior = _uniform_prior(n, L)
    base = np.array([[1], [2], [2]])
    state = _make_state(A, base, prior)
    for i in range(n):
        probs = state.full_conditional(i, 0)
        joint = []
        for r in (1, 2):
            labels = base.copy()
            labels[i, 0] = r
            g = CommunityAssignment(labels, k=2)
            joint.append(
                marginal_log_likelihood(block_counts(A, g))
                + log_prob_assignment(g, prior)
            )
        top = max(joint)
        expected = [math.exp(v - top) for v in joint]
        expected = [v / sum(expected) for v in expected]
        assert probs == pytest.approx(expected, abs=1e-10)


def test_full_conditional_matches_enumeration_lecs(rng, j_table_small):
    n, L, k = 3, 3, 2
    g_true = CommunityAssignment(np.tile([[1], [1], [2]], (1, L)), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(L, 0.8, 0.1), rng)
    prior = PriorModel.lecs(n, L, k)
    base = np.array([[1, 2, 1], [2, 1, 1], [2, 2, 2]])
    state = _make_state(A, base, prior, table=j_table_small)
    for i in range(n):
        for ell in range(L):
            probs = state.full_conditional(i, ell)
            joint = []
            for r in (1, 2):
                labels = base.copy()
                labels[i, ell] = r
                g = CommunityAssignment(labels, k=2)
                joint.append(
                    marginal_log_likelihood(block_counts(A, g))
                    + log_prob_assignment(g, prior, table=j_table_small)
                )
            top = max(joint)
            expected = [math.exp(v - top) for v in joint]
            expected = [v / sum(expected) for v in expected]
            assert probs == pytest.approx(expected, abs=1e-10), (i, ell)


def test_gibbs_update_symmetric_empty_network(rng):
    # empty 2-node network, uniform prior: the conditional is uniform
    A = TemporalNetwork(np.zeros((1, 2, 2), dtype=int))
    prior = _uniform_prior(2, 1)
    state = _make_state(A, [[1], [1]], prior)
    hits = 0
    trials = 10_000
    for _ in range(trials):
        gibbs_update(state, 1, 1, rng)
        hits += state.labels[0][0] == 0
    assert hits / trials == pytest.approx(0.5, abs=0.02)


def test_gibbs_update_k1_noop(rng):
    A = TemporalNetwork(np.zeros((2, 3, 3), dtype=int))
    prior = PriorModel.uniform(3, 2, 1)
    state = _make_state(A, np.ones((3, 2), dtype=int), prior)
    before = [row[:] for row in state.labels]
    gibbs_update(state, 2, 1, rng)
    assert state.labels == before
    with pytest.raises(ValueError):
        gibbs_update(state, 4, 1, rng)


def test_swap_involution(rng, j_table_small):
    n, L = 5, 3
    prior = PriorModel.lecs(n, L, 3)
    g0 = CommunityAssignment(rng.integers(1, 4, size=(n, L)), k=3)
    A = generate_sbm(g0, SbmParameters(np.full((L, 3, 3), 0.3)), rng)
    state = ChainState(A, g0, prior, table=j_table_small)
    snapshot = [row[:] for row in state.labels]
    state._apply_label_swap(0, 2, 1)
    assert state.labels != snapshot
    state._apply_label_swap(0, 2, 1)
    assert state.labels == snapshot
    state.check_consistency()


def test_swap_boundary_layer_one_uniform_accepts(rng):
    # a swap from the first layer relabels the whole assignment: the prior
    # and likelihood are both invariant, so it always accepts
    from tempocom.sampler import _swap_prior_delta

    prior = _uniform_prior(4, 2)
    g0 = CommunityAssignment(rng.integers(1, 3, size=(4, 2)), k=2)
    A = generate_sbm(g0, SbmParameters.two_block(2, 0.7, 0.2), rng)
    state = ChainState(A, g0, prior)
    assert _swap_prior_delta(state, 0, 1, 0) == 0.0
    accepted = 0
    for _ in range(50):
        lp_before = state.log_post
        _, flag = multilayer_swap(state, FixedBoundaryRng(rng, boundary=0))
        accepted += flag
        assert state.log_post == lp_before
    assert accepted == 50
    state.check_consistency()


class FixedBoundaryRng:
    """Wraps a Generator, forcing the swap boundary draw to a fixed layer."""

    def __init__(self, rng, boundary):
        self.rng = rng
        self.boundary = boundary
        self.calls = 0

    def integers(self, *args, **kwargs):
        self.calls += 1
        if self.calls % 3 == 0:  # the third draw per proposal picks ell0
            return self.boundary
        return self.rng.integers(*args, **kwargs)

    def random(self, *args, **kwargs):
        return self.rng.random(*args, **kwargs)


def test_swap_acceptance_matches_transition_terms(rng, j_table_small):
    # the straddling-term delta equals the directly evaluated ratio
    from tempocom.prior_density import lecs_transition_logprob
    from tempocom.sampler import _swap_prior_delta

    n, L = 3, 2
    prior = PriorModel.lecs(n, L, 2)
    labels = np.array([[1, 1], [1, 1], [2, 2]])
    g0 = CommunityAssignment(labels, k=2)
    A = generate_sbm(g0, SbmParameters.two_block(L, 0.9, 0.1), rng)
    state = ChainState(A, g0, prior, table=j_table_small)
    delta = _swap_prior_delta(state, 0, 1, 1)
    swapped = np.where(labels[:, 1] == 1, 2, 1)
    expected = lecs_transition_logprob(labels[:, 0], swapped, 2, j_table_small) - (
        lecs_transition_logprob(labels[:, 0], labels[:, 1], 2, j_table_small)
    )
    assert delta == pytest.approx(expected, abs=1e-8)


def test_run_chain_determinism_and_swapless_equivalence(rng):
    g_true = CommunityAssignment(np.tile([[1], [1], [2], [2]], (1, 2)), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(2, 0.9, 0.1), rng)
    prior = PriorModel.lecs(4, 2, 2)
    cfg = SamplerConfig(prior=prior, sweeps=40, burn_in=10, thinning=2, seed=9)
    r1 = run_chain(A, cfg)
    r2 = run_chain(A, cfg)
    assert all(np.array_equal(a, b) for a, b in zip(r1.samples, r2.samples))
    assert r1.log_posterior == r2.log_posterior

    # zero swap probability reproduces a plain Gibbs trajectory bitwise
    cfg0 = SamplerConfig(prior=prior, sweeps=40, burn_in=10, thinning=2, seed=9,
                         swap_probability=0.0)
    res = run_chain(A, cfg0)

    table = build_J_table(4)
    g0 = CommunityAssignment(
        substream(9, 0).integers(1, 3, size=(4, 2)), k=2
    )
    state = ChainState(A, g0, prior, table=table, mc_rng=substream(9, 4))
    gibbs_rng = substream(9, 2)
    reference = []
    for sweep in range(40):
        for i in range(4):
            for ell in range(2):
                state._gibbs_visit(i, ell, gibbs_rng)
        if sweep >= 10 and (sweep - 10) % 2 == 0:
            reference.append(state.labels_matrix())
    assert all(np.array_equal(a, b) for a, b in zip(res.samples, reference))


def test_run_chain_debug_checks_and_validation(rng):
    g_true = CommunityAssignment(np.tile([[1], [2], [1]], (1, 2)), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(2, 0.8, 0.2), rng)
    cfg = SamplerConfig(prior=PriorModel.lecs(3, 2, 2), sweeps=30, burn_in=5,
                        thinning=5, seed=3, debug_checks=True)
    result = run_chain(A, cfg)
    assert result.samples and result.final.n == 3
    with pytest.raises(ValueError):
        run_chain(A, SamplerConfig(prior=PriorModel.yang(3, 2, 2)))
    with pytest.raises(ValueError):
        SamplerConfig(prior=PriorModel.uniform(3, 2, 2), swap_probability=1.5)
    with pytest.raises(ValueError):
        SamplerConfig(prior=PriorModel.uniform(3, 2, 2), init="bogus")


def test_run_chain_prior_init_matches_prior_draw(rng):
    g_true = CommunityAssignment(np.tile([[1], [2], [1]], (1, 2)), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(2, 0.8, 0.2), rng)
    cfg = SamplerConfig(prior=PriorModel.bazzi(3, 2, 2), sweeps=2, burn_in=0,
                        thinning=1, seed=3, init="prior")
    result = run_chain(A, cfg)
    assert len(result.samples) == 2


def test_chain_tv_against_enumeration(rng):
    # reduced version of the posterior-correctness check
    n, L, k = 3, 2, 2
    g_true = CommunityAssignment(np.tile([[1], [1], [2]], (1, L)), k=k)
    A = generate_sbm(g_true, SbmParameters.two_block(L, 0.9, 0.1), rng)
    prior = _uniform_prior(n, L)
    logp = {}
    for g in enumerate_assignments(n, L, k):
        lp = marginal_log_likelihood(block_counts(A, g)) + log_prob_assignment(g, prior)
        logp[g.labels.tobytes()] = lp
    top = max(logp.values())
    z = sum(math.exp(v - top) for v in logp.values())
    posterior = {key: math.exp(v - top) / z for key, v in logp.items()}

    counts = Counter()

    def collect(sweep, labels):
        counts[labels.astype(np.int64).tobytes()] += 1

    cfg = SamplerConfig(prior=prior, sweeps=22_000, burn_in=2000, thinning=1, seed=5)
    run_chain(A, cfg, collector=collect)
    total = sum(counts.values())
    tv = 0.5 * sum(abs(posterior[key] - counts.get(key, 0) / total) for key in posterior)
    assert tv < 0.05


def test_annealing_schedule_defaults_and_validation():
    sched = AnnealingSchedule()
    assert sched.stages[0] == (1.0, 20)
    assert sched.stages[-1] == (0.1, 5)
    assert [t for t, _ in sched.stages] == [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]
    assert [i for _, i in sched.stages] == [20, 10, 10, 10, 10, 10, 10, 5, 5, 5]
    with pytest.raises(ValueError):
        AnnealingSchedule(stages=((0.5, 5), (0.9, 5)))
    with pytest.raises(ValueError):
        AnnealingSchedule(stages=())


def test_yang_shared_likelihood_additivity(rng):
    # pooled-across-layers counts give the same likelihood as a single
    # layer holding the concatenated pair counts
    from tempocom.core import log_factorials

    g = CommunityAssignment(rng.integers(1, 3, size=(5, 2)), k=2)
    A = generate_sbm(g, SbmParameters.two_block(2, 0.6, 0.2), rng)
    state = _YangState(A, g, 2)
    bc = block_counts(A, g)
    T = bc.t.sum(axis=0)
    M = bc.m.sum(axis=0)
    lf = log_factorials(int(T.max()) + 1)
    expected = 0.0
    for x in range(2):
        for y in range(x, 2):
            expected += lf[M[x, y]] + lf[T[x, y] - M[x, y]] - lf[T[x, y] + 1]
    assert state.log_likelihood() == pytest.approx(expected, abs=1e-9)


def test_yang_annealing_concentrates_on_argmax():
    # two-node toy: the zero-temperature limit picks the better partition
    # (merge vs split), whichever labeling realizes it
    A = TemporalNetwork(np.array([[[0, 1], [1, 0]]]))
    best = -np.inf
    for g in enumerate_assignments(2, 1, 2):
        state = _YangState(A, g, 2)
        best = max(best, state.log_likelihood() + state.log_prior())

    sched = AnnealingSchedule(stages=((1.0, 5), (0.5, 5), (0.1, 10), (0.01, 10)))
    hits = 0
    for trial in range(20):
        est, trace = run_yang_annealing(A, 2, sched, rng=substream(8, trial))
        final_state = _YangState(A, est, 2)
        final_joint = final_state.log_likelihood() + final_state.log_prior()
        hits += abs(final_joint - best) < 1e-9
        assert len(trace) == 30
    assert hits == 20


def test_yang_annealing_determinism(rng):
    g_true = CommunityAssignment(np.tile([[1], [2], [1], [2]], (1, 2)), k=2)
    A = generate_sbm(g_true, SbmParameters.two_block(2, 0.7, 0.2), rng)
    est1, trace1 = run_yang_annealing(A, 2, rng=substream(4, 0))
    est2, trace2 = run_yang_annealing(A, 2, rng=substream(4, 0))
    assert np.array_equal(est1.labels, est2.labels)
    assert trace1 == trace2
