"""Input coercion and validation helpers for the public API surfaces."""

from __future__ import annotations

import numpy as np

from .core import CommunityAssignment, TemporalNetwork

__all__ = ["as_temporal_network", "as_assignment"]


def as_temporal_network(X) -> TemporalNetwork:
    """Coerce X to a TemporalNetwork.

    Accepts a TemporalNetwork, a single (n, n) adjacency matrix, an
    (L, n, n) array, or a sequence of (n, n) matrices.
    """
    if isinstance(X, TemporalNetwork):
        return X
    if isinstance(X, (list, tuple)):
        X = np.stack([np.asarray(a) for a in X])
    return TemporalNetwork(np.asarray(X))


def as_assignment(y, k=None, L=None) -> CommunityAssignment:
    """Coerce y to a CommunityAssignment.

    Accepts a CommunityAssignment, an (n, L) label matrix, or a length-n
    label vector (treated as one layer, or tiled to L identical layers when
    L is given).  Labels must already be 1-based; k defaults to the largest
    label present.
    """
    if isinstance(y, CommunityAssignment):
        return y
    arr = np.asarray(y, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
        if L is not None and L > 1:
            arr = np.repeat(arr, L, axis=1)
    if k is None:
        k = int(arr.max()) if arr.size else 1
    return CommunityAssignment(arr, k=int(k))
