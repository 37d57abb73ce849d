"""Shared builders for the test suite."""

import numpy as np
from hypothesis import strategies as st

from streamshare import Instance


def make(rows, alpha=1.0):
    return Instance(np.asarray(rows, dtype=float), alpha)


@st.composite
def instances(draw, max_users=6, max_artists=5, positive=False, alpha=None):
    """Random valid instance. With positive=True every weight is > 0 so the
    min/geo aggregates cannot degenerate. Draws below 1e-6 are snapped to an
    honest zero: weights model stream counts or listening minutes, and
    subnormal floats only exercise reciprocal overflow, not rule logic."""
    n = draw(st.integers(1, max_users))
    m = draw(st.integers(2, max_artists))
    lo = 0.05 if positive else 0.0
    flat = draw(
        st.lists(
            st.floats(lo, 40.0, allow_nan=False, allow_infinity=False),
            min_size=n * m,
            max_size=n * m,
        )
    )
    w = np.asarray(flat, dtype=float).reshape(n, m)
    w[w < 1e-6] = 0.0
    for i in range(n):
        if w[i].sum() <= 0:
            w[i, draw(st.integers(0, m - 1))] = draw(st.floats(0.5, 10.0))
    a = draw(st.floats(0.05, 1.0)) if alpha is None else alpha
    return Instance(w, a)


def random_dense(rng, max_users=20, max_artists=8, alpha=1.0):
    """Strictly positive random instance, every rule defined."""
    n = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(2, max_artists + 1))
    w = rng.exponential(1.0, size=(n, m)) + 1e-3
    return Instance(w, alpha)
