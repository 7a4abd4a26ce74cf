import numpy as np
import pytest

from tempocom.core import substream
from tempocom.prior_density import build_J_table


@pytest.fixture(scope="session")
def j_table_small():
    return build_J_table(30)


@pytest.fixture()
def rng():
    return substream(2024, 999)


def enumerate_assignments(n, L, k):
    """All k^(n*L) assignments, as CommunityAssignment objects."""
    import itertools

    from tempocom.core import CommunityAssignment

    for flat in itertools.product(range(1, k + 1), repeat=n * L):
        yield CommunityAssignment(np.asarray(flat, dtype=np.int64).reshape(n, L), k=k)
