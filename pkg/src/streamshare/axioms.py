"""Manipulation-resistance checkers for division rules.

Three layers:

* pair verifiers take explicit before/after instances and report the
  manipulation gain against the axiom's allowed bound,
* randomized searchers build single-user manipulations out of point
  masses and random rows,
* trial suites drive the searchers over thousands of seeded random
  instances and keep the worst margin seen, so "no witness in 10,000
  trials" becomes an assertable statement.

Checkers refute or fail to refute; they never prove an axiom.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from . import core
from .core import Instance
from .rules import coerce_rule, evaluate

logger = logging.getLogger(__name__)

#: A manipulation must beat the axiom's bound by this much to count as a
#: violation; anything smaller is treated as float noise.
MARGIN_TOL = 1e-7

#: Tolerance for the structural premises a before/after pair must satisfy.
PREMISE_TOL = 1e-12

#: One-sided slack for monotonicity-style pass/fail checks.
MONOTONE_TOL = 1e-9


class AxiomId(str, Enum):
    FRAUD_PROOF = "FraudProof"
    BRIBERY_PROOF = "BriberyProof"
    SYBIL_PROOF = "SybilProof"
    STRONG_SYBIL_PROOF = "StrongSybilProof"
    NO_FREE_RIDERSHIP = "NoFreeRidership"
    ANONYMITY = "Anonymity"
    NEUTRALITY = "Neutrality"
    ENGAGEMENT_MONOTONE = "EngagementMonotone"
    PIGOU_DALTON = "PigouDalton"
    USER_ADDITION_MONOTONE = "UserAdditionMonotone"
    CLICK_FRAUD_PROOF = "ClickFraudProof"


class AxiomCheckError(ValueError):
    """A verifier was handed inputs that do not form a valid check."""


class NotAnExtensionError(AxiomCheckError):
    """Fraud pairs must keep every original row bit-identical."""


class NoRowsChangedError(AxiomCheckError):
    """Bribery pairs must differ in at least one row."""


class BadSplitError(AxiomCheckError):
    """A sybil decomposition does not reassemble the original column."""


class PremiseError(AxiomCheckError):
    """The structural premises of the axiom do not hold for this pair."""


def rule_name(rule) -> str:
    """Printable name for a rule id or a callable evaluator."""
    if isinstance(rule, str):
        return str(getattr(rule, "value", rule))
    if callable(rule):
        return getattr(rule, "__name__", repr(rule))
    return str(rule)


def _payments(rule, instance: Instance) -> np.ndarray:
    if callable(rule) and not isinstance(rule, str):
        return np.asarray(rule(instance), dtype=float)
    return evaluate(rule, instance)


@dataclass(frozen=True)
class GainReport:
    """Outcome of one pair check: how much the manipulation gained."""

    axiom: AxiomId
    rule: str
    gain: float
    bound: float

    @property
    def margin(self) -> float:
        return self.gain - self.bound

    @property
    def violation(self) -> bool:
        return self.margin > MARGIN_TOL


@dataclass(frozen=True)
class ViolationWitness:
    """A concrete manipulation whose gain clears the axiom bound.

    Construction rejects margins at or below the noise floor so a witness
    object always denotes a genuine violation.
    """

    axiom: AxiomId
    rule: str
    base: Instance
    manipulated: Instance
    target_set: tuple
    gain: float
    bound: float
    margin: float
    source: str = ""

    def __post_init__(self):
        if abs(self.margin - (self.gain - self.bound)) > 1e-9:
            raise ValueError("margin must equal gain - bound")
        if self.margin <= MARGIN_TOL:
            raise ValueError(
                f"margin {self.margin:.3g} does not clear the noise floor {MARGIN_TOL}"
            )


def witness_line(witness: ViolationWitness) -> str:
    """Serialize a witness to the one-line report format."""
    target = ",".join(str(int(j)) for j in witness.target_set)
    return (
        f"axiom={witness.axiom.value} rule={witness.rule} "
        f"gain={witness.gain:.12g} bound={witness.bound:.12g} "
        f"margin={witness.margin:.12g} target={{{target}}} "
        f"source={witness.source or 'adhoc'}"
    )


@dataclass(frozen=True)
class SybilSplitSpec:
    """Split one artist's column into several sybil columns.

    ``parts`` has one row per user and one column per sybil identity; each
    row must sum to the user's original weight on ``split_artist``.
    """

    split_artist: int
    parts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parts", np.asarray(self.parts, dtype=float))


def split_instance(instance: Instance, spec: SybilSplitSpec) -> Instance:
    """Materialize the post-split instance described by ``spec``."""
    j = int(spec.split_artist)
    if not 0 <= j < instance.n_artists:
        raise BadSplitError(f"split artist {j} out of range")
    parts = spec.parts
    if parts.ndim != 2 or parts.shape[0] != instance.n_users or parts.shape[1] < 2:
        raise BadSplitError("parts must have shape (n_users, r) with r >= 2")
    if np.any(parts < 0):
        raise BadSplitError("sybil parts must be nonnegative")
    resid = np.abs(parts.sum(axis=1) - instance.weights[:, j])
    if np.any(resid > PREMISE_TOL):
        bad = int(np.argmax(resid))
        raise BadSplitError(
            f"user {bad} parts sum off by {resid[bad]:.3g} (tolerance {PREMISE_TOL})"
        )
    w = instance.weights
    return Instance(np.hstack([w[:, :j], parts, w[:, j + 1 :]]), instance.alpha)


# ---------------------------------------------------------------------------
# pair verifiers


def verify_fraud_pair(rule, base: Instance, manipulated: Instance, target_set) -> GainReport:
    """Gain of ``target_set`` when ``manipulated`` appends fake users to ``base``.

    ``manipulated`` must extend ``base``: same artists, same alpha, original
    rows bit-identical, at least one appended row. The allowed bound is the
    number of added users.
    """
    if manipulated.n_artists != base.n_artists:
        raise NotAnExtensionError("artist sets differ")
    if manipulated.alpha != base.alpha:
        raise NotAnExtensionError("alpha differs between the instances")
    added = manipulated.n_users - base.n_users
    if added < 1:
        raise NotAnExtensionError("manipulated instance adds no users")
    if not np.array_equal(manipulated.weights[: base.n_users], base.weights):
        raise NotAnExtensionError("an original row was edited")
    before = core.subset_payment(_payments(rule, base), target_set)
    after = core.subset_payment(_payments(rule, manipulated), target_set)
    return GainReport(AxiomId.FRAUD_PROOF, rule_name(rule), after - before, float(added))


def _changed_rows(base: Instance, manipulated: Instance) -> np.ndarray:
    if manipulated.n_users != base.n_users or manipulated.n_artists != base.n_artists:
        raise PremiseError("instances must share both dimensions")
    if manipulated.alpha != base.alpha:
        raise PremiseError("alpha differs between the instances")
    return np.flatnonzero(np.any(manipulated.weights != base.weights, axis=1))


def verify_bribery_pair(rule, base: Instance, manipulated: Instance, target_set) -> GainReport:
    """Gain of ``target_set`` when k existing rows are rewritten (bound k)."""
    changed = _changed_rows(base, manipulated)
    if changed.size == 0:
        raise NoRowsChangedError("instances are identical")
    before = core.subset_payment(_payments(rule, base), target_set)
    after = core.subset_payment(_payments(rule, manipulated), target_set)
    return GainReport(
        AxiomId.BRIBERY_PROOF, rule_name(rule), after - before, float(changed.size)
    )


def verify_click_fraud(rule, base: Instance, manipulated: Instance) -> GainReport:
    """Largest per-artist payment swing caused by a single rewritten row."""
    changed = _changed_rows(base, manipulated)
    if changed.size == 0:
        raise NoRowsChangedError("instances are identical")
    if changed.size > 1:
        raise PremiseError(f"{changed.size} rows changed; this is a single-user check")
    swing = np.abs(_payments(rule, manipulated) - _payments(rule, base))
    return GainReport(AxiomId.CLICK_FRAUD_PROOF, rule_name(rule), float(swing.max()), 1.0)


def verify_sybil(rule, instance: Instance, spec: SybilSplitSpec) -> GainReport:
    """Absolute change of the split artist's group payment (bound: none, equality)."""
    manipulated = split_instance(instance, spec)
    j, r = int(spec.split_artist), spec.parts.shape[1]
    before = float(_payments(rule, instance)[j])
    after = float(_payments(rule, manipulated)[j : j + r].sum())
    return GainReport(AxiomId.SYBIL_PROOF, rule_name(rule), abs(after - before), 0.0)


def _common_masks(base: Instance, manipulated: Instance, cstar):
    cstar = tuple(sorted({int(c) for c in cstar}))
    limit = min(base.n_artists, manipulated.n_artists)
    if any(c < 0 or c >= limit for c in cstar):
        raise PremiseError("cstar index out of range for one of the instances")
    keep_b = np.isin(np.arange(base.n_artists), cstar)
    keep_m = np.isin(np.arange(manipulated.n_artists), cstar)
    return cstar, keep_b, keep_m


def verify_sybil_pair(rule, base: Instance, manipulated: Instance, cstar) -> GainReport:
    """General sybil check for pairs sharing untouched artists at indices ``cstar``.

    Untouched artists must occupy the same column indices in both instances.
    Premises, checked per user within ``PREMISE_TOL``: weights on ``cstar``
    are unchanged and each user's mass over the remaining columns is
    preserved. Reported gain is the absolute change of the manipulated
    group's payment.
    """
    if manipulated.n_users != base.n_users:
        raise PremiseError("sybil pairs keep the user set fixed")
    if manipulated.alpha != base.alpha:
        raise PremiseError("alpha differs between the instances")
    cstar, keep_b, keep_m = _common_masks(base, manipulated, cstar)
    if np.any(
        np.abs(base.weights[:, keep_b] - manipulated.weights[:, keep_m]) > PREMISE_TOL
    ):
        raise PremiseError("weights on untouched artists changed")
    mass_b = base.weights[:, ~keep_b].sum(axis=1)
    mass_m = manipulated.weights[:, ~keep_m].sum(axis=1)
    if np.any(np.abs(mass_b - mass_m) > PREMISE_TOL):
        raise PremiseError("a user's mass on the manipulated artists changed")
    before = float(_payments(rule, base)[~keep_b].sum())
    after = float(_payments(rule, manipulated)[~keep_m].sum())
    return GainReport(AxiomId.SYBIL_PROOF, rule_name(rule), abs(after - before), 0.0)


def verify_strong_sybil(rule, base: Instance, manipulated: Instance, cstar) -> GainReport:
    """Aggregate sybil check: only column totals and overall mass must match.

    Premises within ``PREMISE_TOL``: each ``cstar`` column keeps its total
    engagement, and the combined mass on the remaining columns is preserved.
    Individual users may redistribute arbitrarily.
    """
    if manipulated.n_users != base.n_users:
        raise PremiseError("strong sybil pairs keep the user set fixed")
    if manipulated.alpha != base.alpha:
        raise PremiseError("alpha differs between the instances")
    cstar, keep_b, keep_m = _common_masks(base, manipulated, cstar)
    tot_b = base.weights.sum(axis=0)
    tot_m = manipulated.weights.sum(axis=0)
    if np.any(np.abs(tot_b[keep_b] - tot_m[keep_m]) > PREMISE_TOL):
        raise PremiseError("an untouched artist's column total changed")
    if abs(tot_b[~keep_b].sum() - tot_m[~keep_m].sum()) > PREMISE_TOL:
        raise PremiseError("total mass on the manipulated artists changed")
    before = float(_payments(rule, base)[~keep_b].sum())
    after = float(_payments(rule, manipulated)[~keep_m].sum())
    return GainReport(
        AxiomId.STRONG_SYBIL_PROOF, rule_name(rule), abs(after - before), 0.0
    )


def _em_drop(rule, base: Instance, manipulated: Instance, jstar: int) -> float:
    if manipulated.n_users != base.n_users or manipulated.n_artists != base.n_artists:
        raise PremiseError("instances must share both dimensions")
    if manipulated.alpha != base.alpha:
        raise PremiseError("alpha differs between the instances")
    if not 0 <= jstar < base.n_artists:
        raise PremiseError(f"artist {jstar} out of range")
    w, w2 = base.weights, manipulated.weights
    if np.any(w[:, jstar] > w2[:, jstar] + PREMISE_TOL):
        raise PremiseError("engagement with the boosted artist decreased somewhere")
    others = np.arange(base.n_artists) != jstar
    if np.any(w2[:, others] > w[:, others] + PREMISE_TOL):
        raise PremiseError("engagement with another artist increased")
    before = float(_payments(rule, base)[jstar])
    after = float(_payments(rule, manipulated)[jstar])
    return before - after


def verify_engagement_monotone(rule, base: Instance, manipulated: Instance, jstar: int) -> bool:
    """True when boosting ``jstar`` (and nothing else) does not lower its payment."""
    return _em_drop(rule, base, manipulated, jstar) <= MONOTONE_TOL


def _pd_apply(instance: Instance, transfer) -> tuple[Instance, int]:
    donor, recipient, artist, delta = transfer
    donor, recipient, artist = int(donor), int(recipient), int(artist)
    delta = float(delta)
    n, m = instance.n_users, instance.n_artists
    if not (0 <= donor < n and 0 <= recipient < n and 0 <= artist < m):
        raise PremiseError("transfer indices out of range")
    if donor == recipient:
        raise PremiseError("transfer needs two distinct users")
    if delta <= 0:
        raise PremiseError("transfer must move positive weight")
    w = instance.weights
    if w[donor, artist] - delta <= 0:
        raise PremiseError("donor must keep positive engagement")
    w2 = w.copy()
    w2[donor, artist] -= delta
    w2[recipient, artist] += delta
    if w2[recipient, artist] > w2[donor, artist] + PREMISE_TOL:
        raise PremiseError("transfer may not push the recipient above the donor")
    return Instance(w2, instance.alpha), artist


def _pd_drop(rule, instance: Instance, transfer) -> tuple[float, Instance]:
    manipulated, artist = _pd_apply(instance, transfer)
    before = float(_payments(rule, instance)[artist])
    after = float(_payments(rule, manipulated)[artist])
    return before - after, manipulated


def verify_pigou_dalton(rule, instance: Instance, transfer) -> bool:
    """True when an equalizing transfer ``(donor, recipient, artist, delta)``
    does not lower the artist's payment."""
    drop, _ = _pd_drop(rule, instance, transfer)
    return drop <= MONOTONE_TOL


def verify_user_addition_monotone(rule, instance: Instance, profile) -> bool:
    """True when adding one user weakly raises every artist's payment."""
    manipulated = core.add_user(instance, profile)
    before = _payments(rule, instance)
    after = _payments(rule, manipulated)
    return bool(np.all(before <= after + MONOTONE_TOL))


def verify_no_free_ridership(rule, instance: Instance) -> GainReport:
    """Largest payment granted to an artist nobody engages with (bound 0)."""
    payments = _payments(rule, instance)
    dead = instance.artist_totals() == 0
    gain = float(payments[dead].max()) if dead.any() else 0.0
    return GainReport(AxiomId.NO_FREE_RIDERSHIP, rule_name(rule), gain, 0.0)


def _check_permutation(perm, size: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (size,) or not np.array_equal(np.sort(perm), np.arange(size)):
        raise PremiseError(f"not a permutation of range({size})")
    return perm


def verify_anonymity(rule, instance: Instance, perm) -> bool:
    """True when shuffling user rows leaves every payment unchanged."""
    perm = _check_permutation(perm, instance.n_users)
    shuffled = Instance(instance.weights[perm], instance.alpha)
    return bool(
        np.allclose(_payments(rule, instance), _payments(rule, shuffled), atol=MONOTONE_TOL)
    )


def verify_neutrality(rule, instance: Instance, perm) -> bool:
    """True when relabeling artists relabels the payments the same way."""
    perm = _check_permutation(perm, instance.n_artists)
    relabeled = Instance(instance.weights[:, perm], instance.alpha)
    expected = _payments(rule, instance)[perm]
    return bool(np.allclose(_payments(rule, relabeled), expected, atol=MONOTONE_TOL))


#: Every axiom tag dispatches to exactly one verifier.
VERIFIERS: dict[AxiomId, Callable] = {
    AxiomId.FRAUD_PROOF: verify_fraud_pair,
    AxiomId.BRIBERY_PROOF: verify_bribery_pair,
    AxiomId.SYBIL_PROOF: verify_sybil,
    AxiomId.STRONG_SYBIL_PROOF: verify_strong_sybil,
    AxiomId.NO_FREE_RIDERSHIP: verify_no_free_ridership,
    AxiomId.ANONYMITY: verify_anonymity,
    AxiomId.NEUTRALITY: verify_neutrality,
    AxiomId.ENGAGEMENT_MONOTONE: verify_engagement_monotone,
    AxiomId.PIGOU_DALTON: verify_pigou_dalton,
    AxiomId.USER_ADDITION_MONOTONE: verify_user_addition_monotone,
    AxiomId.CLICK_FRAUD_PROOF: verify_click_fraud,
}


# ---------------------------------------------------------------------------
# randomized searches


def candidate_profiles(base: Instance, rng, n_random: int = 64) -> np.ndarray:
    """Fake rows worth trying: point masses at several magnitudes plus
    random sparse rows. Magnitudes scale with the instance because the
    profitable manipulations, where they exist at all, need weight
    comparable to the whole platform."""
    n, m = base.n_users, base.n_artists
    maxw = float(base.weights.max())
    mags = sorted({1.0, float(n), float(n * n), float(n * max(maxw, 1.0))})
    rows = [c * eye for c in mags for eye in np.eye(m)]
    for _ in range(n_random):
        profile = rng.dirichlet(np.ones(m)) * rng.choice(mags) * rng.uniform(0.25, 4.0)
        keep = rng.random(m) < 0.7
        if keep.any():
            profile = np.where(keep, profile, 0.0)
        rows.append(profile)
    return np.asarray(rows)


def _best_target(delta: np.ndarray) -> tuple[float, tuple]:
    """Best artist subset for a payment delta vector.

    Subset gain is additive, so the positive coordinates are the argmax over
    all subsets; with no positive coordinate the single least-bad artist
    stands in.
    """
    pos = np.flatnonzero(delta > 0)
    if pos.size:
        return float(delta[pos].sum()), tuple(int(j) for j in pos)
    j = int(np.argmax(delta))
    return float(delta[j]), (j,)


def _score_delta(delta: np.ndarray, target_sets) -> tuple[float, tuple]:
    if target_sets is None:
        return _best_target(delta)
    best_gain, best_set = -np.inf, ()
    for ts in target_sets:
        idx = sorted({int(j) for j in ts})
        gain = float(delta[idx].sum())
        if gain > best_gain:
            best_gain, best_set = gain, tuple(idx)
    return best_gain, best_set


def search_fraud(
    rule,
    base: Instance,
    target_sets=None,
    profiles=None,
    budget: int = 500,
    seed: int = 0,
) -> Optional[ViolationWitness]:
    """Search single-added-user fraud against ``base``.

    Tries each candidate profile as one fake account and scores the payment
    delta, either on explicit ``target_sets`` or on the best subset. Returns
    the maximal-margin witness, or None when nothing clears the noise floor.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    if profiles is None:
        profiles = candidate_profiles(base, rng)
    if not callable(rule):
        rule = coerce_rule(rule)
    base_pay = _payments(rule, base)
    best = None
    for row in np.asarray(profiles, dtype=float)[:budget]:
        manipulated = core.add_user(base, row)
        delta = _payments(rule, manipulated) - base_pay
        gain, tset = _score_delta(delta, target_sets)
        if best is None or gain - 1.0 > best[0]:
            best = (gain - 1.0, gain, tset, manipulated)
    if best is None:
        return None
    margin, gain, tset, manipulated = best
    if margin <= MARGIN_TOL:
        return None
    return ViolationWitness(
        AxiomId.FRAUD_PROOF, rule_name(rule), base, manipulated, tset,
        gain, 1.0, margin, source=f"seed:{seed}",
    )


def search_bribery(
    rule,
    base: Instance,
    target_sets=None,
    profiles=None,
    budget: int = 500,
    seed: int = 0,
    victims=None,
) -> Optional[ViolationWitness]:
    """Search single-rewritten-row bribery against ``base``.

    ``victims`` restricts which rows may be rewritten (default: all).
    Candidates identical to the base row are skipped since they change
    nothing. Returns the maximal-margin witness or None.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    if profiles is None:
        profiles = candidate_profiles(base, rng)
    if not callable(rule):
        rule = coerce_rule(rule)
    if victims is None:
        victims = range(base.n_users)
    base_pay = _payments(rule, base)
    best = None
    spent = 0
    for victim in victims:
        for row in np.asarray(profiles, dtype=float):
            if spent >= budget:
                break
            if np.array_equal(row, base.weights[victim]):
                continue
            spent += 1
            manipulated = core.replace_user(base, int(victim), row)
            delta = _payments(rule, manipulated) - base_pay
            gain, tset = _score_delta(delta, target_sets)
            if best is None or gain - 1.0 > best[0]:
                best = (gain - 1.0, gain, tset, manipulated)
    if best is None:
        return None
    margin, gain, tset, manipulated = best
    if margin <= MARGIN_TOL:
        return None
    return ViolationWitness(
        AxiomId.BRIBERY_PROOF, rule_name(rule), base, manipulated, tset,
        gain, 1.0, margin, source=f"seed:{seed}",
    )


def random_instance(rng, n_users=(1, 6), n_artists=(2, 5), alpha=None) -> Instance:
    """Small random instance with continuous weights and no dead users."""
    n = int(rng.integers(n_users[0], n_users[1] + 1))
    m = int(rng.integers(n_artists[0], n_artists[1] + 1))
    w = rng.exponential(1.0, size=(n, m))
    drop = rng.random((n, m)) < 0.35
    drop[np.arange(n), rng.integers(0, m, size=n)] = False
    w = np.where(drop, 0.0, w)
    a = float(rng.uniform(0.05, 1.0)) if alpha is None else float(alpha)
    return Instance(w, a)


# ---------------------------------------------------------------------------
# trial suites


@dataclass(frozen=True)
class SuiteResult:
    """Worst outcome over a batch of randomized trials for one axiom/rule."""

    axiom: AxiomId
    rule: str
    trials: int
    max_margin: float
    witness: Optional[ViolationWitness]
    clickfraud_margin: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.witness is None and self.max_margin <= MARGIN_TOL


def _fraud_trial(rule, inst, rng, n_random):
    base_pay = _payments(rule, inst)
    best = None
    for row in candidate_profiles(inst, rng, n_random):
        manipulated = core.add_user(inst, row)
        gain, tset = _best_target(_payments(rule, manipulated) - base_pay)
        if best is None or gain - 1.0 > best[0]:
            best = (gain - 1.0, gain, 1.0, inst, manipulated, tset, None)
    return best


def _bribery_trial(rule, inst, rng, n_random):
    victim = int(rng.integers(inst.n_users))
    base_pay = _payments(rule, inst)
    best = None
    swing = -np.inf
    for row in candidate_profiles(inst, rng, n_random):
        if np.array_equal(row, inst.weights[victim]):
            continue
        manipulated = core.replace_user(inst, victim, row)
        delta = _payments(rule, manipulated) - base_pay
        swing = max(swing, float(np.abs(delta).max()))
        gain, tset = _best_target(delta)
        if best is None or gain - 1.0 > best[0]:
            best = (gain - 1.0, gain, 1.0, inst, manipulated, tset, None)
    if best is None:
        return None
    return best[:6] + (swing - 1.0,)


def _sybil_trial(rule, inst, rng, n_random):
    j = int(rng.integers(inst.n_artists))
    r = int(rng.integers(2, 5))
    parts = inst.weights[:, j][:, None] * rng.dirichlet(np.ones(r), size=inst.n_users)
    spec = SybilSplitSpec(j, parts)
    report = verify_sybil(rule, inst, spec)
    return (
        report.margin, report.gain, 0.0, inst, split_instance(inst, spec), (j,), None,
    )


def _strong_sybil_trial(rule, inst, rng, n_random):
    n, m = inst.n_users, inst.n_artists
    k = int(rng.integers(1, m))
    cstar = tuple(sorted(rng.choice(m, size=k, replace=False).tolist()))
    keep = np.isin(np.arange(m), cstar)
    w = inst.weights
    new_w = np.zeros_like(w)
    for j in np.flatnonzero(keep):
        total = w[:, j].sum()
        if total > 0:
            new_w[:, j] = total * rng.dirichlet(np.ones(n))
    comp = np.flatnonzero(~keep)
    mass = w[:, comp].sum()
    new_w[:, comp] = (mass * rng.dirichlet(np.ones(n * comp.size))).reshape(n, comp.size)
    manipulated = Instance(new_w, inst.alpha)
    report = verify_strong_sybil(rule, inst, manipulated, cstar)
    return (report.margin, report.gain, 0.0, inst, manipulated, tuple(comp), None)


def _nfr_trial(rule, inst, rng, n_random):
    w = inst.weights.copy()
    n, m = w.shape
    j = int(rng.integers(m))
    alive_elsewhere = (np.delete(w, j, axis=1) > 0).any(axis=1)
    for i in np.flatnonzero(~alive_elsewhere):
        jj = int(rng.integers(m - 1))
        jj = jj if jj < j else jj + 1
        w[i, jj] = float(rng.exponential(1.0)) + 1e-3
    w[:, j] = 0.0
    planted = Instance(w, inst.alpha)
    report = verify_no_free_ridership(rule, planted)
    return (report.margin, report.gain, 0.0, planted, planted, (j,), None)


def _em_trial(rule, inst, rng, n_random):
    n, m = inst.n_users, inst.n_artists
    jstar = int(rng.integers(m))
    w = inst.weights.copy()
    w[:, jstar] += rng.exponential(1.0, size=n) * (rng.random(n) < 0.7)
    others = np.arange(m) != jstar
    w[:, others] *= rng.uniform(0.2, 1.0, size=(n, int(others.sum())))
    manipulated = Instance(w, inst.alpha)
    drop = _em_drop(rule, inst, manipulated, jstar)
    return (drop, drop, 0.0, inst, manipulated, (jstar,), None)


def _pd_trial(rule, inst, rng, n_random):
    if inst.n_users < 2:
        return None
    w = inst.weights
    for _ in range(20):
        j = int(rng.integers(inst.n_artists))
        donor, recipient = rng.choice(inst.n_users, size=2, replace=False)
        gap = w[donor, j] - w[recipient, j]
        if gap <= 0 or w[donor, j] <= 0:
            continue
        delta = 0.5 * gap * float(rng.uniform(0.2, 1.0))
        if delta <= 0:
            continue
        transfer = (int(donor), int(recipient), j, delta)
        drop, manipulated = _pd_drop(rule, inst, transfer)
        return (drop, drop, 0.0, inst, manipulated, (j,), None)
    return None


_TRIALS = {
    AxiomId.FRAUD_PROOF: _fraud_trial,
    AxiomId.BRIBERY_PROOF: _bribery_trial,
    AxiomId.SYBIL_PROOF: _sybil_trial,
    AxiomId.STRONG_SYBIL_PROOF: _strong_sybil_trial,
    AxiomId.NO_FREE_RIDERSHIP: _nfr_trial,
    AxiomId.ENGAGEMENT_MONOTONE: _em_trial,
    AxiomId.PIGOU_DALTON: _pd_trial,
}


def run_suite(
    axiom: AxiomId,
    rule,
    trials: int = 10_000,
    seed: int = 0,
    instance_gen=None,
    n_random: int = 64,
) -> SuiteResult:
    """Drive one axiom's randomized trials for one rule.

    Every trial draws its own generator seeded with ``[seed, trial]``, builds
    a random instance (or one from ``instance_gen``), applies the axiom's
    manipulation scheme, and records the margin over the axiom's bound. The
    worst margin is kept; ties keep the earliest trial. Bribery suites also
    track the largest single-artist payment swing, whose bound of one is the
    click-fraud condition.
    """
    try:
        trial_fn = _TRIALS[AxiomId(axiom)]
    except KeyError:
        raise KeyError(f"no randomized suite for axiom {axiom!r}") from None
    gen = instance_gen if instance_gen is not None else random_instance
    if not callable(rule):
        rule = coerce_rule(rule)
    max_margin = -np.inf
    witness = None
    cf_margin = None
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        out = trial_fn(rule, gen(rng), rng, n_random)
        if out is None:
            continue
        margin, gain, bound, base, manipulated, tset, swing_margin = out
        if swing_margin is not None:
            cf_margin = swing_margin if cf_margin is None else max(cf_margin, swing_margin)
        if margin > max_margin:
            max_margin = margin
            if margin > MARGIN_TOL:
                witness = ViolationWitness(
                    AxiomId(axiom), rule_name(rule), base, manipulated, tset,
                    gain, bound, margin, source=f"seed:{seed}/trial:{t}",
                )
                logger.info("violation witness: %s", witness_line(witness))
    return SuiteResult(AxiomId(axiom), rule_name(rule), trials, max_margin, witness, cf_margin)


#: The twenty axiom/rule batches the randomized evidence is expected to cover.
SUITE_GRID: tuple = (
    (AxiomId.FRAUD_PROOF, "userprop"),
    (AxiomId.FRAUD_PROOF, "usereq"),
    (AxiomId.FRAUD_PROOF, "scaledup"),
    (AxiomId.BRIBERY_PROOF, "userprop"),
    (AxiomId.BRIBERY_PROOF, "usereq"),
    (AxiomId.BRIBERY_PROOF, "scaledup"),
    (AxiomId.SYBIL_PROOF, "userprop"),
    (AxiomId.SYBIL_PROOF, "scaledup"),
    (AxiomId.SYBIL_PROOF, "globalprop"),
    (AxiomId.STRONG_SYBIL_PROOF, "globalprop"),
    (AxiomId.NO_FREE_RIDERSHIP, "globalprop"),
    (AxiomId.NO_FREE_RIDERSHIP, "userprop"),
    (AxiomId.NO_FREE_RIDERSHIP, "usereq"),
    (AxiomId.NO_FREE_RIDERSHIP, "scaledup"),
    (AxiomId.ENGAGEMENT_MONOTONE, "globalprop"),
    (AxiomId.ENGAGEMENT_MONOTONE, "userprop"),
    (AxiomId.ENGAGEMENT_MONOTONE, "usereq"),
    (AxiomId.ENGAGEMENT_MONOTONE, "scaledup"),
    (AxiomId.PIGOU_DALTON, "globalprop"),
    (AxiomId.PIGOU_DALTON, "usereq"),
)


def fixtures():
    """Named manipulation fixtures; see :mod:`streamshare.fixtures`."""
    from . import fixtures as _fixtures

    return _fixtures.fixtures()


def pathological_rules():
    """Two handcrafted two-artist rules; see :mod:`streamshare.fixtures`."""
    from . import fixtures as _fixtures

    return _fixtures.pathological_rules()
