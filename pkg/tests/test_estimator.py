import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tempocom.core import CommunityAssignment, substream
from tempocom.estimator import TemporalCommunityDetector
from tempocom.experiments import SeededStructureSpec, seeded_structure
from tempocom.likelihood import generate_sbm
from tempocom.validation import as_assignment, as_temporal_network


@pytest.fixture(scope="module")
def planted():
    spec = SeededStructureSpec(n=40, L=3, q=24, tau=(0, -4, 0), omega_diag=0.5,
                               omega_off=0.05)
    truth = seeded_structure(spec)
    A = generate_sbm(truth, spec.omega, substream(77, 0))
    return A, truth


def test_sklearn_contract(planted):
    est = TemporalCommunityDetector(k=2, sweeps=40, seed=1)
    params = est.get_params()
    assert params["k"] == 2 and params["prior"] == "lecs"
    est2 = clone(est)
    assert est2.get_params() == params
    est.set_params(sweeps=60)
    assert est.get_params()["sweeps"] == 60


def test_fit_predict_score(planted):
    A, truth = planted
    est = TemporalCommunityDetector(k=2, prior="lecs", sweeps=60, burn_in=20,
                                    thinning=5, seed=3)
    est.fit(A)
    labels = est.predict()
    assert labels.shape == (40, 3)
    assert est.score(y=truth) > 0.9
    assert len(est.samples_) == 8
    assert est.swap_acceptance_rate_ >= 0.0
    # accepts raw arrays too
    est2 = TemporalCommunityDetector(k=2, sweeps=40, seed=3).fit(np.asarray(A.layers))
    assert est2.labels_.shape == (40, 3)


def test_fit_predict_unfitted_raises():
    with pytest.raises(NotFittedError):
        TemporalCommunityDetector().predict()


def test_yang_prior_path(planted):
    A, truth = planted
    est = TemporalCommunityDetector(k=2, prior="yang", seed=0).fit(A)
    assert est.labels_.shape == (40, 3)
    assert np.isnan(est.swap_acceptance_rate_)
    assert est.score(y=truth) > 0.9


def test_deterministic_given_seed(planted):
    A, _ = planted
    a = TemporalCommunityDetector(k=2, sweeps=30, seed=9).fit(A).predict()
    b = TemporalCommunityDetector(k=2, sweeps=30, seed=9).fit(A).predict()
    assert np.array_equal(a, b)


def test_validation_helpers(planted):
    A, truth = planted
    assert as_temporal_network(A) is A
    net = as_temporal_network([np.asarray(a) for a in A.layers])
    assert np.array_equal(net.layers, A.layers)
    single = as_temporal_network(np.asarray(A.layers[0]))
    assert single.L == 1

    y = as_assignment(truth)
    assert y is truth
    vec = as_assignment([1, 2, 1, 2])
    assert (vec.n, vec.L, vec.k) == (4, 1, 2)
    tiled = as_assignment([1, 2, 2], L=3)
    assert tiled.L == 3 and np.array_equal(tiled.labels[:, 0], tiled.labels[:, 2])
