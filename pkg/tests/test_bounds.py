import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrgrc.bounds import (
    EXACT,
    FUNCTIONAL,
    Case,
    Infeasible,
    bound,
    classify,
    exact_bound,
    functional_bound,
    local_help_profile,
    mbr_profile,
    min_beta,
    msr_check,
    tradeoff_curve,
)
from mrgrc.params import ResourceProfile, SystemParams, decompose

FIG2B = SystemParams(3, 2, 2, 3, 0, 2)
FIG2A = SystemParams(5, 4, 4, 3, 0, 2)


@st.composite
def systems(draw, max_n=9, max_m=9):
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(1, n - 1))
    d = draw(st.integers(k, n - 1))
    m = draw(st.integers(1, max_m))
    t = draw(st.integers(1, m))
    ell = draw(st.integers(0, m - t))
    return SystemParams(n, k, d, m, ell, t)


rationals = st.fractions(min_value=Fraction(1, 8), max_value=20, max_denominator=12)
profiles = st.builds(ResourceProfile, rationals, rationals)


def test_mbr_gap_point():
    pr = ResourceProfile(2, 2)
    assert functional_bound(FIG2B, pr) == 10
    assert exact_bound(FIG2B, pr) == 9


def test_fig2a_system_values():
    pr = ResourceProfile(2, 1)
    assert functional_bound(FIG2A, pr) == 17
    assert exact_bound(FIG2A, pr) == 15


def test_classical_reduction():
    p = SystemParams(6, 3, 4, 1, 0, 1)
    pr = ResourceProfile(5, 2)
    assert functional_bound(p, pr) == sum(min(5, (4 - i) * 2) for i in range(3)) == 14
    assert exact_bound(p, pr) == 14


def test_exact_bound_is_rational():
    p = SystemParams(4, 2, 3, 3, 0, 2)
    assert exact_bound(p, ResourceProfile(5, 1)) == 3 * (Fraction(3, 2) + 1)


@settings(max_examples=400)
@given(systems(), profiles)
def test_exact_never_exceeds_functional(params, profile):
    assert exact_bound(params, profile) <= functional_bound(params, profile)


@settings(max_examples=300)
@given(systems(), profiles)
def test_divisible_case_bounds_coincide(params, profile):
    if decompose(params).b == 0:
        assert exact_bound(params, profile) == functional_bound(params, profile)


@settings(max_examples=300)
@given(systems(), profiles)
def test_single_failure_formula(params, profile):
    params = params.replace(t=1)
    n, k, d, m, ell, t = params.astuple()
    a, b = profile.alpha, profile.beta
    expected = ell * k * a + (m - ell) * sum(min(a, (d - i) * b) for i in range(k))
    assert functional_bound(params, profile) == expected == exact_bound(params, profile)


@settings(max_examples=300)
@given(systems(), rationals)
def test_mbr_batch_size_irrelevant_when_divisible(params, alpha):
    # with t | (m - ell) and t*alpha = d*beta, the functional bound equals
    # the single-failure value at beta' = alpha/d
    if decompose(params).b:
        return
    batch = functional_bound(params, ResourceProfile(alpha, params.t * alpha / params.d))
    single = functional_bound(params.replace(t=1), ResourceProfile(alpha, alpha / params.d))
    assert batch == single


@settings(max_examples=300)
@given(systems(), profiles, st.sampled_from(["alpha", "beta", "d", "ell"]))
def test_functional_bound_monotone(params, profile, knob):
    before = functional_bound(params, profile)
    if knob == "alpha":
        after = functional_bound(params, ResourceProfile(profile.alpha + Fraction(1, 3), profile.beta))
    elif knob == "beta":
        after = functional_bound(params, ResourceProfile(profile.alpha, profile.beta + Fraction(1, 3)))
    elif knob == "d":
        if params.d == params.n - 1:
            return
        after = functional_bound(params.replace(d=params.d + 1), profile)
    else:
        if params.ell == params.m - params.t:
            return
        after = functional_bound(params.replace(ell=params.ell + 1), profile)
    assert after >= before


@settings(max_examples=200)
@given(systems(), profiles, rationals)
def test_scale_invariance(params, profile, c):
    scaled = profile.scaled(c)
    assert functional_bound(params, scaled) == c * functional_bound(params, profile)
    assert exact_bound(params, scaled) == c * exact_bound(params, profile)


@pytest.mark.parametrize("d, t, beta, alpha", [(2, 2, 2, 2), (5, 5, 1, 1), (4, 2, 1, 2)])
def test_mbr_profile(d, t, beta, alpha):
    p = SystemParams(d + 1, 1, d, t, 0, t)
    assert mbr_profile(p, beta).alpha == alpha


def test_mbr_profile_integrality():
    p = SystemParams(4, 2, 3, 2, 0, 2)
    assert mbr_profile(p, 1).alpha == Fraction(3, 2)
    with pytest.raises(ValueError):
        mbr_profile(p, 1, integral=True)


def test_msr_check():
    assert msr_check(FIG2B, ResourceProfile(2, 2), 12)
    assert not msr_check(FIG2B, ResourceProfile(2, 2), 9)
    classical = SystemParams(5, 3, 4, 1, 0, 1)
    assert msr_check(classical, ResourceProfile(7, 1), 21)


def _bisect_beta(params, alpha, target, mode, iters=60):
    """Independent solver: bisection on the monotone bound."""
    lo, hi = Fraction(0), Fraction(1)
    while bound(params, ResourceProfile(alpha, hi), mode) < target:
        hi *= 2
    for _ in range(iters):
        mid = (lo + hi) / 2
        if bound(params, ResourceProfile(alpha, mid), mode) >= target:
            hi = mid
        else:
            lo = mid
    return hi


@settings(max_examples=150, deadline=None)
@given(systems(max_n=6, max_m=6), st.sampled_from([FUNCTIONAL, EXACT]), st.integers(1, 40), st.fractions(0, 1, max_denominator=7))
def test_min_beta_is_minimal(params, mode, size, frac):
    p = params.replace(ell=0)
    lo = Fraction(size, p.m * p.k)
    alpha = lo * (1 + frac)
    beta = min_beta(p, alpha, size, mode)
    assert beta > 0
    assert bound(p, ResourceProfile(alpha, beta), mode) == size
    assert abs(float(beta - _bisect_beta(p, alpha, size, mode))) < 1e-12


def test_min_beta_below_msr_is_infeasible():
    with pytest.raises(Infeasible):
        min_beta(FIG2B, Fraction(5, 3) - Fraction(1, 100), 10)


def test_tradeoff_exact_left_end_is_msr():
    for params, size in [(FIG2A, 24), (FIG2B, 10), (SystemParams(7, 3, 5, 5, 1, 2), 40)]:
        curve = tradeoff_curve(params, size, EXACT, grid=9)
        assert curve[0].alpha == Fraction(size, params.m * params.k)


def test_tradeoff_functional_mbr_end_fig2b():
    curve = tradeoff_curve(FIG2B, 10, FUNCTIONAL, grid=5)
    assert (curve[-1].alpha, curve[-1].beta) == (2, 2)
    # exact repair cannot store 10 symbols at (2, 2)
    assert exact_bound(FIG2B, ResourceProfile(2, 2)) == 9 < 10
    assert min_beta(FIG2B, 2, 10, EXACT) == Fraction(8, 3)


def test_tradeoff_points_are_pareto_sorted():
    for mode in (FUNCTIONAL, EXACT):
        curve = tradeoff_curve(FIG2A, 24, mode, grid=41)
        for p, q in zip(curve, curve[1:]):
            assert p.alpha < q.alpha and p.beta > q.beta
            assert p.storage_overhead > 0 and p.ic_bandwidth_overhead > 0


def test_functional_curve_below_exact_on_shared_grid():
    size = 24
    alphas = [Fraction(2) + Fraction(s, 20) for s in range(0, 21)]
    strict_at_end = None
    for a in alphas:
        bf, be = min_beta(FIG2A, a, size, FUNCTIONAL), min_beta(FIG2A, a, size, EXACT)
        assert bf <= be
        strict_at_end = bf < be
    assert strict_at_end


def test_tradeoff_infeasible_when_all_alphas_too_small():
    with pytest.raises(Infeasible):
        tradeoff_curve(FIG2B, 10, EXACT, alphas=[1, Fraction(3, 2)])


def test_local_help_profile_fig2c():
    prof = local_help_profile(7, 4, 5, 17, 5, ResourceProfile(1, 1))
    values = dict(prof.values)
    assert [values[e] for e in range(4)] == [50, 50, 50, 53]
    assert prof.predicate_holds
    assert prof.predicted_plateau == (0, 1, 2) == prof.observed_plateau


@settings(max_examples=200)
@given(systems(), profiles)
def test_single_failure_capacity_strictly_grows_with_local_help(params, profile):
    n, k, d, m = params.n, params.k, params.d, params.m
    if m < 2 or not profile.alpha > (d - k + 1) * profile.beta:
        return
    prof = local_help_profile(n, k, d, m, 1, profile)
    vals = [v for _, v in prof.values]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_classify():
    assert classify(SystemParams(3, 2, 2, 3, 1, 2)).case is Case.DIVISIBLE
    assert classify(FIG2B).case is Case.NON_DIVISIBLE
    rep = classify(FIG2B, ResourceProfile(2, 2))
    assert rep.at_mbr and rep.claim == "B_F > B_E" and rep.claim_holds
    assert (rep.functional, rep.exact) == (10, 9)
    rep = classify(SystemParams(3, 2, 2, 3, 1, 2), ResourceProfile(3, 1))
    assert rep.claim == "B_F == B_E" and rep.claim_holds


def test_classify_off_mbr_makes_no_claim():
    rep = classify(FIG2B, ResourceProfile(3, 1))
    assert rep.claim is None and rep.claim_holds is None
