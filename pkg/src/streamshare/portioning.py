"""Portioning rules: divide revenue by aggregating normalized user profiles.

Every rule here first row-normalizes the instance (each user's weights become
a distribution over artists), produces a point on the artist simplex, and
scales it by the budget ``alpha * n``.

* ``avg`` / ``max`` / ``min`` / ``med`` / ``geo``: coordinatewise aggregate of
  the normalized columns, then renormalize.
* ``util``: the share vector minimizing total L1 disagreement with the user
  profiles, tie-broken toward maximum entropy.
* ``egal``: minimizes the largest per-user L1 disagreement, then refines by
  repeatedly freezing the users pinned at the optimum and re-minimizing over
  the rest.
* ``indmkt``: per-artist medians after padding each artist's value list with
  the phantom bids ``min(k*t, 1)``, where t solves "medians sum to 1".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance, finalize_payments
from .rules import PortioningId


class DegenerateAggregateError(ValueError):
    """Coordinatewise aggregate is zero everywhere; shares undefined."""


class SolverFailure(RuntimeError):
    """An optimization stage did not converge."""


def normalize(instance: Instance) -> Instance:
    """Row-normalized copy: every user's weights sum to 1."""
    w = instance.weights
    return Instance(w / w.sum(axis=1, keepdims=True), instance.alpha)


def simplex_share(rule, instance: Instance) -> np.ndarray:
    """The rule's point on the artist simplex (sums to 1)."""
    rule = PortioningId(rule)
    norm = normalize(instance).weights
    if instance.n_artists == 1:
        return np.ones(1)
    if rule in _COORDINATEWISE:
        agg = _COORDINATEWISE[rule](norm)
        total = agg.sum()
        if total <= 0.0:
            raise DegenerateAggregateError(
                f"{rule.value} aggregate is zero on every artist"
            )
        return agg / total
    if rule is PortioningId.UTIL:
        share = _util_share(norm)
    elif rule is PortioningId.EGAL:
        share = _egal_share(norm)
    elif rule is PortioningId.INDEPENDENT_MARKETS:
        share = market_solution(norm).shares
    else:  # pragma: no cover - exhaustive over PortioningId
        raise KeyError(rule)
    return share / share.sum()


def portioning_payment(rule, instance: Instance) -> np.ndarray:
    return finalize_payments(simplex_share(rule, instance) * instance.budget)


def _geo(norm: np.ndarray) -> np.ndarray:
    # geometric mean per column; any zero in a column zeroes it out
    with np.errstate(divide="ignore"):
        logs = np.log(norm)
    means = logs.mean(axis=0)
    out = np.zeros(norm.shape[1])
    finite = np.isfinite(means)
    out[finite] = np.exp(means[finite])
    return out


_COORDINATEWISE = {
    PortioningId.AVG: lambda norm: norm.mean(axis=0),
    PortioningId.MAX: lambda norm: norm.max(axis=0),
    PortioningId.MIN: lambda norm: norm.min(axis=0),
    PortioningId.MED: lambda norm: np.median(norm, axis=0),
    PortioningId.GEO: _geo,
}


# --------------------------------------------------------------------------
# util: exact minimizer of total L1 disutility, max-entropy tie-break


def _util_share(norm: np.ndarray) -> np.ndarray:
    """Total disutility sum_i ||p - w_i||_1 on the simplex is, up to a
    constant, a separable convex function of p; for each artist the minimizer
    set at integer dual level is the interval between consecutive order
    statistics of that artist's column. The optimal face is the box for the
    level whose interval sums bracket 1, and the max-entropy point on it clips
    a single constant into each interval."""
    n, m = norm.shape
    # stats[r] = (r+1)-th largest value of each column; one zero sentinel row
    stats = np.vstack([-np.sort(-norm, axis=0), np.zeros((1, m))])
    bounds = stats.sum(axis=1)
    feasible = np.flatnonzero(bounds[:n] >= 1.0 - 1e-9)
    level = int(feasible[-1]) if feasible.size else 0
    lo, hi = stats[level + 1], stats[level]
    p = _clip_to_sum(lo, hi, 1.0)
    total = p.sum()
    if not 0.9 < total < 1.1:  # the face always brackets 1; this is a bug trap
        raise SolverFailure(f"util face sum {total} out of range")
    return p / total


def _clip_to_sum(lo: np.ndarray, hi: np.ndarray, target: float) -> np.ndarray:
    """Solve sum_j clip(theta, lo_j, hi_j) = target exactly by a knot sweep."""
    knots = np.unique(np.concatenate([lo, hi]))
    vals = np.clip(knots[:, None], lo[None, :], hi[None, :]).sum(axis=1)
    i = int(np.searchsorted(vals, target))
    if i == 0:
        theta = knots[0]
    elif i == len(knots):
        theta = knots[-1]
    else:
        span = vals[i] - vals[i - 1]
        if span <= 0:
            theta = knots[i]
        else:
            theta = knots[i - 1] + (knots[i] - knots[i - 1]) * (target - vals[i - 1]) / span
    return np.clip(theta, lo, hi)


# --------------------------------------------------------------------------
# egal: minimax L1 disutility with iterative freezing
#
# When p and every user row live on the simplex, the disutility splits as
# ||p - w_i||_1 = 2 - 2 * sum_j min(p_j, w_ij), so minimizing the largest
# disutility is the same as maximizing the smallest "overlap"
# O_i(p) = sum_j min(p_j, w_ij), a concave piecewise-linear maximin. Each
# stage solves that maximin by cutting planes: at a candidate p the pattern
# g_j = [p_j < w_ij] gives the supporting piece O_i(p') <= g.p' + const, and
# a small dense tableau solves the master over these cuts. Eliminating
# p_m = 1 - sum(q) keeps the origin basis feasible, so no phase-1 is needed;
# re-solves after new cuts start from the previous basis via dual pivots.


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _primal_steps(tab, basis, max_pivots=5000):
    """Drive the objective row to optimality; Bland's rule on entry, smallest
    basis index on ratio ties, so cycling cannot occur."""
    tol = 1e-11
    n_rows = tab.shape[0] - 1
    for _ in range(max_pivots):
        profit = tab[-1, :-1]
        eligible = np.flatnonzero(profit > tol)
        if eligible.size == 0:
            return
        enter = int(eligible[0])
        col = tab[:n_rows, enter]
        pos = col > tol
        if not pos.any():
            raise SolverFailure("stage master unbounded")
        ratios = np.full(n_rows, np.inf)
        ratios[pos] = tab[:n_rows, -1][pos] / col[pos]
        best = float(ratios.min())
        ties = np.flatnonzero(ratios <= best + 1e-15)
        leave = int(min(ties, key=lambda i: basis[i]))
        _pivot(tab, basis, leave, enter)
    raise SolverFailure("stage master hit the primal pivot limit")


def _dual_steps(tab, basis, max_pivots=5000):
    """Restore a nonnegative right-hand side after cuts arrive, keeping the
    objective row dual-feasible."""
    tol = 1e-11
    n_rows = tab.shape[0] - 1
    for _ in range(max_pivots):
        rhs = tab[:n_rows, -1]
        leave = int(rhs.argmin())
        if rhs[leave] >= -tol:
            return
        row = tab[leave, :-1]
        neg = np.flatnonzero(row < -tol)
        if neg.size == 0:
            raise SolverFailure("stage master infeasible")
        ratios = -tab[-1, neg] / -row[neg]
        enter = int(neg[ratios.argmin()])
        _pivot(tab, basis, leave, enter)
    raise SolverFailure("stage master hit the dual pivot limit")


class _StageMaster:
    """Dense tableau for one maximin stage: variables q (the first m-1 simplex
    coordinates) and t (the overlap level being raised), one slack per row."""

    def __init__(self, m: int, cap: int = 128):
        self.m = m
        self.nv = m  # q takes m-1 columns, t takes one
        self.cap = cap
        self.n_rows = 1
        self.tab = np.zeros((cap, self.nv + cap + 1))
        self.tab[0, : m - 1] = 1.0  # sum(q) <= 1 keeps p_m nonnegative
        self.tab[0, self.nv] = 1.0
        self.tab[0, -1] = 1.0
        self.basis = [self.nv]
        self.obj = np.zeros(self.nv + cap + 1)
        self.obj[m - 1] = 1.0
        self.owner = [-1]  # user index per cut row; -1 for structural rows

    def _grow(self):
        old_cap, nv = self.cap, self.nv
        self.cap = old_cap * 2
        tab = np.zeros((self.cap, nv + self.cap + 1))
        tab[:old_cap, : nv + old_cap] = self.tab[:, :-1]
        tab[:old_cap, -1] = self.tab[:, -1]
        obj = np.zeros(nv + self.cap + 1)
        obj[: nv + old_cap] = self.obj[:-1]
        obj[-1] = self.obj[-1]
        self.tab, self.obj = tab, obj

    def add_cut(self, a, const, has_t, owner):
        if self.n_rows >= self.cap:
            self._grow()
        i = self.n_rows
        row = np.zeros(self.tab.shape[1])
        row[: self.m - 1] = -a
        if has_t:
            row[self.m - 1] = 1.0
        row[self.nv + i] = 1.0
        row[-1] = const
        for r in range(i):  # express the new row in the current basis
            coef = row[self.basis[r]]
            if coef != 0.0:
                row -= coef * self.tab[r]
        self.tab[i] = row
        self.basis.append(self.nv + i)
        self.owner.append(owner)
        self.n_rows += 1

    def solve(self):
        tab = np.vstack([self.tab[: self.n_rows], self.obj])
        _dual_steps(tab, self.basis)
        _primal_steps(tab, self.basis)
        self.tab[: self.n_rows] = tab[:-1]
        self.obj = tab[-1].copy()
        x = np.zeros(self.nv)
        for r, b in enumerate(self.basis):
            if b < self.nv:
                x[b] = tab[r, -1]
        q = x[: self.m - 1]
        return np.append(q, 1.0 - q.sum()), float(x[self.m - 1])

    def user_duals(self, n: int) -> np.ndarray:
        """Dual price carried by each user's cuts at the final basis. A user
        with positive total price is pinned at the optimum in every optimal
        solution, which is exactly when freezing them is safe."""
        duals = np.zeros(n)
        for r in range(1, self.n_rows):
            who = self.owner[r]
            if who >= 0:
                duals[who] += max(0.0, -self.obj[self.nv + r])
        return duals


def _minimax_stage(norm, caps, active, p_seed):
    """Maximize the smallest overlap of active users, subject to frozen users
    keeping theirs above the floor implied by their recorded cap. Returns the
    share vector, the stage disutility level, and the per-user dual prices."""
    n, m = norm.shape
    master = _StageMaster(m)
    floors = 1.0 - caps / 2.0
    seen = set()

    def cut_for(i, p):
        grad = (p < norm[i]).astype(float)
        key = (i, grad.tobytes())
        if key in seen:
            return False
        seen.add(key)
        val = float(np.minimum(p, norm[i]).sum())
        const = val - float(grad @ p) + grad[m - 1]
        a = grad[: m - 1] - grad[m - 1]
        if active[i]:
            master.add_cut(a, const, True, int(i))
        else:
            master.add_cut(a, const - floors[i], False, -1)
        return True

    for i in range(n):
        cut_for(i, p_seed)
    for _ in range(500):
        p, t_hat = master.solve()
        p = np.clip(p, 0.0, None)
        overlaps = np.minimum(p[None, :], norm).sum(axis=1)
        worst = float(overlaps[active].min())
        bad_floor = (~active) & (overlaps < floors - 1e-10)
        if t_hat - worst <= 1e-10 and not bad_floor.any():
            return p, 2.0 * (1.0 - worst), master.user_duals(n)
        added = False
        for i in np.flatnonzero((active & (overlaps < t_hat - 1e-10)) | bad_floor):
            added |= cut_for(i, p)
        if not added:
            raise SolverFailure("stage made no progress")
    raise SolverFailure("stage hit the cut iteration limit")


def _egal_share(norm: np.ndarray) -> np.ndarray:
    n, m = norm.shape
    if n == 1 or np.all(norm == norm[0]):
        return norm[0].copy()
    caps = np.full(n, -1.0)  # -1 marks users whose disutility is still free
    p = np.full(m, 1.0 / m)
    for _ in range(2 * n):
        active = caps < 0
        if not active.any():
            break
        p, z, duals = _minimax_stage(norm, caps, active, p)
        hit = active & (duals > 1e-9)
        if not hit.any():
            # degenerate basis with no priced cuts: freeze everyone at the
            # level rather than stall
            dis = np.abs(norm - p[None, :]).sum(axis=1)
            hit = active & (dis >= z - 1e-9)
        if not hit.any():
            hit = active
        # tiny slack keeps the stage optimum feasible for the next rung
        caps[hit] = z + 1e-12
        if z <= 1e-12:
            break
    p = np.clip(p, 0.0, None)
    return p / p.sum()


# --------------------------------------------------------------------------
# independent markets: phantom-padded per-artist medians


@dataclass(frozen=True)
class MarketSolution:
    """Solved phantom scale, per-artist medians there, and |sum - 1|."""

    t_star: float
    medians: np.ndarray
    residual: float

    @property
    def shares(self) -> np.ndarray:
        return self.medians / self.medians.sum()


def market_solution(norm: np.ndarray) -> MarketSolution:
    """Bisect for the phantom scale t where the 2n+1 per-artist medians
    (n user values plus phantoms min(k*t, 1), k = 0..n) sum to 1. The sum is
    0 at t=0, at least 1 at t=1, and nondecreasing in t."""
    n, m = norm.shape
    ks = np.arange(n + 1, dtype=float)

    def medians(t: float) -> np.ndarray:
        phantoms = np.minimum(ks * t, 1.0)
        stacked = np.vstack([norm, np.broadcast_to(phantoms[:, None], (n + 1, m))])
        return np.median(stacked, axis=0)

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if medians(mid).sum() >= 1.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15:
            break
    med = medians(hi)
    return MarketSolution(hi, med, float(abs(med.sum() - 1.0)))
