"""Payment rules that divide subscription revenue among artists.

Four main rules:

* ``globalprop``: every stream is worth the same; artist j receives
  ``alpha * n * colsum_j / total``.
* ``userprop``: each user's ``alpha`` is divided in proportion to their own
  streaming weights.
* ``usereq``: each user's ``alpha`` is divided equally among the artists they
  stream at all.
* ``scaledup``: user-proportional with per-user influence ``min(gamma * S_i, 1)``
  where ``S_i`` is the user's total weight and ``gamma`` solves
  ``sum_i min(gamma * S_i, 1) = alpha * n``. Caps the sway of heavy streamers
  while keeping light users fully counted.

The eight portioning rules (see :mod:`streamshare.portioning`) are also
addressable through :func:`evaluate` so callers can treat all twelve uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    BadAlphaError,
    DimensionError,
    Instance,
    ZeroRowError,
    finalize_payments,
)


class RuleId(str, Enum):
    GLOBAL_PROP = "globalprop"
    USER_PROP = "userprop"
    USER_EQ = "usereq"
    SCALED_USER_PROP = "scaledup"


class PortioningId(str, Enum):
    AVG = "avg"
    MAX = "max"
    MIN = "min"
    MED = "med"
    GEO = "geo"
    UTIL = "util"
    EGAL = "egal"
    INDEPENDENT_MARKETS = "indmkt"


MAIN_RULES = tuple(RuleId)
PORTIONING_RULES = tuple(PortioningId)
ALL_RULES = MAIN_RULES + PORTIONING_RULES


def coerce_rule(name) -> RuleId | PortioningId:
    """Map a rule name (string or id) to its enum member."""
    if isinstance(name, (RuleId, PortioningId)):
        return name
    text = str(name).lower()
    for member in ALL_RULES:
        if member.value == text:
            return member
    raise KeyError(f"unknown rule {name!r}; choose from {[m.value for m in ALL_RULES]}")


def global_prop(instance: Instance) -> np.ndarray:
    w = instance.weights
    col = w.sum(axis=0)
    total = col.sum()
    return finalize_payments(col * (instance.budget / total))


def user_prop(instance: Instance) -> np.ndarray:
    w = instance.weights
    shares = w / w.sum(axis=1, keepdims=True)
    return finalize_payments(instance.alpha * shares.sum(axis=0))


def user_eq(instance: Instance) -> np.ndarray:
    engaged = instance.weights > 0
    counts = engaged.sum(axis=1, keepdims=True)
    return finalize_payments(instance.alpha * (engaged / counts).sum(axis=0))


@dataclass(frozen=True)
class GammaSolution:
    """Solution of ``sum_i min(gamma * S_i, 1) = alpha * n``.

    ``capped_users`` holds the 0-based indices with ``gamma * S_i >= 1 - 1e-12``
    (an exact tie counts as capped). ``residual`` is the absolute defect of the
    defining equation at the returned gamma.
    """

    gamma: float
    capped_users: frozenset[int]
    residual: float


def solve_gamma(user_totals, alpha: float) -> GammaSolution:
    """Find the influence cap parameter by a breakpoint sweep.

    ``sum_i min(gamma * S_i, 1)`` is piecewise linear and nondecreasing in
    gamma with breakpoints at ``1 / S_i``; the target ``alpha * n`` is solved
    in closed form on the segment that reaches it. At ``alpha == 1`` every
    feasible gamma with all users capped works; the canonical representative
    ``1 / min(S)`` is returned.
    """
    s = np.asarray(user_totals, dtype=float).reshape(-1)
    if s.size == 0:
        raise DimensionError("need at least one user total")
    if np.any(s <= 0):
        raise ZeroRowError(int(np.flatnonzero(s <= 0)[0]))
    if not 0.0 < alpha <= 1.0:
        raise BadAlphaError(f"alpha must be in (0, 1], got {alpha}")
    n = s.size
    target = alpha * n
    if target >= n:
        gamma = 1.0 / float(s.min())
    else:
        order = np.sort(s)[::-1]
        # suffix[k] = total weight of the users still uncapped once the k
        # heaviest are capped
        suffix = np.zeros(n + 1)
        suffix[:n] = np.cumsum(order[::-1])[::-1]
        # value of the sum at each breakpoint gamma = 1/order[k]
        at_break = np.arange(n) + suffix[1:] / order + 1.0
        # at gamma = 1/order[k], users 0..k are capped: value = (k+1) + suffix[k+1]/order[k]
        k = int(np.searchsorted(at_break, target))
        gamma = (target - k) / suffix[k]
    capped = frozenset(int(i) for i in np.flatnonzero(gamma * s >= 1.0 - 1e-12))
    residual = float(abs(np.minimum(gamma * s, 1.0).sum() - target))
    return GammaSolution(float(gamma), capped, residual)


def scaled_user_prop(instance: Instance) -> np.ndarray:
    w = instance.weights
    totals = w.sum(axis=1)
    sol = solve_gamma(totals, instance.alpha)
    influence = np.minimum(sol.gamma * totals, 1.0)
    return finalize_payments((w * (influence / totals)[:, None]).sum(axis=0))


def evaluate(rule, instance: Instance) -> np.ndarray:
    """Dispatch any of the twelve rules by id or name."""
    rule = coerce_rule(rule)
    if isinstance(rule, PortioningId):
        from . import portioning

        return portioning.portioning_payment(rule, instance)
    return _MAIN_IMPL[rule](instance)


_MAIN_IMPL = {
    RuleId.GLOBAL_PROP: global_prop,
    RuleId.USER_PROP: user_prop,
    RuleId.USER_EQ: user_eq,
    RuleId.SCALED_USER_PROP: scaled_user_prop,
}
