"""The four main division rules and the influence-cap solver.

Closed-form expectations here were computed by hand from the rule
definitions; the hypothesis blocks check the structural properties every
rule must satisfy on arbitrary valid input.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from helpers import instances, make
from streamshare import (
    BUDGET_TOL,
    BadAlphaError,
    MAIN_RULES,
    RuleId,
    ZeroRowError,
    coerce_rule,
    evaluate,
    global_prop,
    scaled_user_prop,
    solve_gamma,
    user_eq,
    user_prop,
)

RNG = np.random.default_rng(11)


def test_coerce_rule_names():
    assert coerce_rule("globalprop") is RuleId.GLOBAL_PROP
    assert coerce_rule("SCALEDUP") is RuleId.SCALED_USER_PROP
    assert coerce_rule(RuleId.USER_EQ) is RuleId.USER_EQ
    with pytest.raises(KeyError):
        coerce_rule("propglobal")


def test_global_prop_worked_example():
    # columns (3, 2) of total 5, budget 2
    inst = make([[3, 1], [0, 1]])
    assert np.allclose(global_prop(inst), [1.2, 0.8], atol=1e-12)


def test_user_prop_worked_example():
    inst = make([[3, 1], [0, 1]])
    assert np.allclose(user_prop(inst), [0.75, 1.25], atol=1e-12)


def test_user_eq_splits_by_support():
    inst = make([[80, 19, 1]])
    assert np.allclose(user_eq(inst), [1 / 3, 1 / 3, 1 / 3], atol=1e-12)
    inst = make([[1, 1, 0], [0, 2, 0]])
    assert np.allclose(user_eq(inst), [0.5, 1.5, 0.0], atol=1e-12)


def test_user_eq_ignores_magnitudes():
    a = make([[5, 1], [2, 2]], alpha=0.7)
    b = make([[1, 99], [1, 1]], alpha=0.7)
    assert np.allclose(user_eq(a), user_eq(b), atol=1e-12)


def test_scaled_user_prop_uncapped_example():
    # totals (4, 2), alpha 0.5: gamma = 1/6, influences (2/3, 1/3)
    inst = make([[4, 0], [1, 1]], alpha=0.5)
    assert np.allclose(scaled_user_prop(inst), [5 / 6, 1 / 6], atol=1e-12)


def test_scaled_user_prop_capped_example():
    # totals (10, 2), alpha 0.9: heavy user capped at 1, gamma = 0.4
    inst = make([[10, 0], [1, 1]], alpha=0.9)
    sol = solve_gamma(inst.user_totals(), inst.alpha)
    assert abs(sol.gamma - 0.4) < 1e-12, f"gamma {sol.gamma}"
    assert sol.capped_users == frozenset({0})
    assert np.allclose(scaled_user_prop(inst), [1.4, 0.4], atol=1e-12)


def test_solve_gamma_alpha_one_canonical():
    sol = solve_gamma([4.0, 2.0, 7.0], alpha=1.0)
    assert abs(sol.gamma - 0.5) < 1e-12
    assert sol.capped_users == frozenset({0, 1, 2})
    assert sol.residual < 1e-12


def test_solve_gamma_input_errors():
    with pytest.raises(ZeroRowError):
        solve_gamma([1.0, 0.0], alpha=0.5)
    with pytest.raises(BadAlphaError):
        solve_gamma([1.0], alpha=0.0)
    with pytest.raises(BadAlphaError):
        solve_gamma([1.0], alpha=1.5)


@given(
    st.lists(st.floats(0.05, 50.0), min_size=1, max_size=12),
    st.floats(0.05, 0.999),
)
@settings(max_examples=200, deadline=None)
def test_solve_gamma_matches_brentq(totals, alpha):
    """For alpha < 1 the root is unique; the sweep must agree with a
    bracketing root finder on the defining equation."""
    s = np.asarray(totals)
    sol = solve_gamma(s, alpha)
    target = alpha * len(totals)

    def f(g):
        return np.minimum(g * s, 1.0).sum() - target

    hi = 1.0 / s.min()
    if f(hi) <= 0:
        root = hi
    else:
        root = brentq(f, 0.0, hi, xtol=1e-14)
    assert abs(sol.gamma - root) < 1e-9, f"sweep {sol.gamma} vs brentq {root}"
    assert sol.residual < 1e-9


@pytest.mark.parametrize("rule", MAIN_RULES)
@given(inst=instances())
@settings(max_examples=100, deadline=None)
def test_budget_balance(rule, inst):
    p = evaluate(rule, inst)
    assert abs(p.sum() - inst.budget) <= BUDGET_TOL, f"{rule} on {inst.weights}"
    assert np.all(p >= 0)


@pytest.mark.parametrize("rule", MAIN_RULES)
@given(inst=instances())
@settings(max_examples=60, deadline=None)
def test_no_free_riders(rule, inst):
    """An artist with zero streams earns exactly zero."""
    w = np.hstack([inst.weights, np.zeros((inst.n_users, 1))])
    p = evaluate(rule, make(w, inst.alpha))
    assert p[-1] == 0.0


@pytest.mark.parametrize("rule", MAIN_RULES)
@given(inst=instances(max_users=5))
@settings(max_examples=50, deadline=None)
def test_anonymity_user_permutation(rule, inst):
    perm = RNG.permutation(inst.n_users)
    p1 = evaluate(rule, inst)
    p2 = evaluate(rule, make(inst.weights[perm], inst.alpha))
    assert np.allclose(p1, p2, atol=1e-9)


@pytest.mark.parametrize("rule", MAIN_RULES)
@given(inst=instances(max_users=5))
@settings(max_examples=50, deadline=None)
def test_neutrality_artist_permutation(rule, inst):
    perm = RNG.permutation(inst.n_artists)
    p1 = evaluate(rule, inst)
    p2 = evaluate(rule, make(inst.weights[:, perm], inst.alpha))
    assert np.allclose(p1[perm], p2, atol=1e-9)


@pytest.mark.parametrize("rule", [RuleId.USER_PROP, RuleId.USER_EQ])
@given(inst=instances(max_users=5), scale=st.floats(0.1, 20.0))
@settings(max_examples=50, deadline=None)
def test_row_scale_invariance(rule, inst, scale):
    """Scaling one user's whole row cannot move user-local rules."""
    w = inst.weights.copy()
    w[0] *= scale
    assert np.allclose(
        evaluate(rule, inst), evaluate(rule, make(w, inst.alpha)), atol=1e-9
    )


@given(inst=instances(max_users=5))
@settings(max_examples=60, deadline=None)
def test_user_prop_is_additive_over_users(inst):
    """UserProp is the sum of per-user contributions."""
    total = np.zeros(inst.n_artists)
    for row in inst.weights:
        total += inst.alpha * row / row.sum()
    assert np.allclose(user_prop(inst), total, atol=1e-9)


@given(inst=instances())
@settings(max_examples=100, deadline=None)
def test_scaledup_equals_userprop_at_alpha_one(inst):
    full = make(inst.weights, 1.0)
    assert np.allclose(scaled_user_prop(full), user_prop(full), atol=1e-12)


@given(inst=instances())
@settings(max_examples=100, deadline=None)
def test_scaledup_equals_globalprop_when_uniformly_light(inst):
    """If no single user exceeds the uncapped influence bound, the cap never
    binds and scaling by totals reproduces the platform-wide rule. Conforming
    totals are produced by mixing each row total toward the mean, which
    preserves the overall sum."""
    s = inst.user_totals()
    mean, top = s.mean(), s.max()
    lam = 1.0
    if top > mean:
        lam = min(1.0, 0.95 * mean * (1.0 / inst.alpha - 1.0) / (top - mean))
    target = (1.0 - lam) * mean + lam * s
    inst = make(inst.weights * (target / s)[:, None], inst.alpha)
    s = inst.user_totals()
    assert s.max() <= s.sum() / (inst.n_users * inst.alpha) + 1e-9
    assert np.allclose(scaled_user_prop(inst), global_prop(inst), atol=1e-12)


def test_scaledup_interpolates_between_extremes():
    # heavy streamer dominates globalprop, is capped under scaledup
    inst = make([[100, 0], [1, 1], [1, 1]], alpha=0.5)
    gp = global_prop(inst)
    sc = scaled_user_prop(inst)
    up = user_prop(inst)
    assert gp[0] > sc[0] > up[0] - 1e-12, f"{gp[0]} vs {sc[0]} vs {up[0]}"
