"""Closed-form file-size bounds and the storage/bandwidth trade-off.

All arithmetic is exact (:class:`fractions.Fraction`).  The exact-repair bound
contains ``(d - i) * beta / t`` which is rarely an integer, and the tests
compare bounds for equality.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .params import Decomposition, ResourceProfile, SystemParams, decompose

FUNCTIONAL = "functional"
EXACT = "exact"
MODES = (FUNCTIONAL, EXACT)


class Infeasible(ValueError):
    """No positive bandwidth reaches the requested file size."""


def functional_bound(params: SystemParams, profile: ResourceProfile) -> Fraction:
    """Maximum file size under functional repair."""
    n, k, d, m, ell, t = params.astuple()
    dec = decompose(params)
    a, b = dec.a, dec.b
    alpha, beta = profile.alpha, profile.beta
    total = ell * k * alpha
    total += a * sum(min(t * alpha, (d - i) * beta) for i in range(k))
    total += sum(min(b * alpha, (d - i) * beta) for i in range(k))
    return Fraction(total)


def exact_bound(params: SystemParams, profile: ResourceProfile) -> Fraction:
    """Maximum file size under exact repair."""
    n, k, d, m, ell, t = params.astuple()
    alpha, beta = profile.alpha, profile.beta
    total = ell * k * alpha
    total += (m - ell) * sum(min(alpha, Fraction((d - i) * beta, t)) for i in range(k))
    return Fraction(total)


def bound(params, profile, mode=FUNCTIONAL) -> Fraction:
    if mode == FUNCTIONAL:
        return functional_bound(params, profile)
    if mode == EXACT:
        return exact_bound(params, profile)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def mbr_profile(params: SystemParams, beta, integral=False) -> ResourceProfile:
    """Profile on the MBR line ``t * alpha = d * beta``."""
    beta = Fraction(beta)
    alpha = params.d * beta / params.t
    if integral and (alpha.denominator != 1 or beta.denominator != 1):
        raise ValueError(f"MBR alpha = d*beta/t = {alpha} is not an integer")
    return ResourceProfile(alpha, beta)


def msr_check(params: SystemParams, profile: ResourceProfile, file_size) -> bool:
    return Fraction(file_size) == params.m * params.k * profile.alpha


# -- trade-off curve ---------------------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    alpha: Fraction
    beta: Fraction
    storage_overhead: Fraction
    ic_bandwidth_overhead: Fraction


def _min_terms(params, mode):
    """Bound as ``ell*k*alpha + sum(mult * min(ca*alpha, cb*beta))``.

    Returns the list of ``(mult, ca, cb)`` triples; zero-weight terms dropped.
    """
    n, k, d, m, ell, t = params.astuple()
    terms = []
    if mode == FUNCTIONAL:
        dec = decompose(params)
        for i in range(k):
            terms.append((dec.a, Fraction(t), Fraction(d - i)))
            if dec.b:
                terms.append((1, Fraction(dec.b), Fraction(d - i)))
    elif mode == EXACT:
        for i in range(k):
            terms.append((m - ell, Fraction(1), Fraction(d - i, t)))
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return terms


def min_beta(params, alpha, file_size, mode=FUNCTIONAL) -> Fraction:
    """Smallest ``beta`` with ``bound(alpha, beta) >= file_size``.

    The bound is concave piecewise linear in ``beta``; each piece is solved
    exactly.  Returns ``0`` when the local term alone already suffices.
    """
    alpha, target = Fraction(alpha), Fraction(file_size)
    base = params.ell * params.k * alpha
    terms = _min_terms(params, mode)
    ceiling = base + sum(mult * ca * alpha for mult, ca, cb in terms)
    if ceiling < target:
        raise Infeasible(
            f"alpha={alpha} caps the {mode} bound at {ceiling} < B={target}"
        )
    if base >= target:
        return Fraction(0)
    breaks = sorted({ca * alpha / cb for _, ca, cb in terms})
    lo = Fraction(0)
    for hi in breaks:
        # on (lo, hi] every term with breakpoint >= hi is still in its beta-branch
        slope = sum(mult * cb for mult, ca, cb in terms if ca * alpha / cb >= hi)
        fixed = base + sum(mult * ca * alpha for mult, ca, cb in terms if ca * alpha / cb < hi)
        value_hi = fixed + slope * hi
        if value_hi >= target:
            return (target - fixed) / slope
        lo = hi
    raise AssertionError("unreachable: ceiling check guarantees a solution")


def msr_alpha(params, file_size) -> Fraction:
    return Fraction(file_size) / (params.m * params.k)


def mbr_alpha(params, file_size, mode=FUNCTIONAL) -> Fraction:
    """``alpha`` on the MBR line ``t*alpha = d*beta`` where the bound equals B."""
    unit = bound(params, mbr_profile(params, Fraction(params.t, params.d)), mode)
    # bound is homogeneous of degree 1 in (alpha, beta); unit is at alpha = 1
    return Fraction(file_size) / unit


def _point(params, alpha, beta, file_size):
    return TradeoffPoint(
        alpha=alpha,
        beta=beta,
        storage_overhead=params.m * params.n * alpha / file_size,
        ic_bandwidth_overhead=params.d * beta / (params.t * alpha),
    )


def tradeoff_curve(params, file_size, mode=FUNCTIONAL, grid=21, alphas=None):
    """Pareto points ``(alpha, minimal beta)`` for a file of ``file_size``.

    By default ``grid`` evenly spaced rational ``alpha`` values span the MSR
    endpoint ``B/(mk)`` to the mode's MBR solution.  Explicit ``alphas`` may be
    given instead; values below the MSR endpoint are skipped.
    """
    file_size = Fraction(file_size)
    if file_size <= 0:
        raise ValueError("file size must be positive")
    if alphas is None:
        if grid < 2:
            raise ValueError("grid must be >= 2")
        lo, hi = msr_alpha(params, file_size), mbr_alpha(params, file_size, mode)
        alphas = [lo + (hi - lo) * Fraction(s, grid - 1) for s in range(grid)]
    alphas = sorted(Fraction(a) for a in alphas)
    if not alphas:
        raise ValueError("no alpha samples")
    points = []
    for alpha in alphas:
        try:
            beta = min_beta(params, alpha, file_size, mode)
        except Infeasible:
            if alpha == alphas[-1]:
                raise
            continue
        if beta > 0:
            points.append(_point(params, alpha, beta, file_size))
    pareto = []
    for p in points:
        if not pareto or p.beta < pareto[-1].beta:
            pareto.append(p)
    return pareto


# -- local help and case analysis -------------------------------------------

@dataclass(frozen=True)
class LocalHelpProfile:
    values: tuple  # ((ell, B_F), ...)
    predicate_holds: bool
    predicted_plateau: tuple  # ell values predicted to equal B_F(0); empty if predicate fails
    observed_plateau: tuple  # leading ell values whose B_F equals B_F(0)


def local_help_profile(n, k, d, m, t, profile: ResourceProfile) -> LocalHelpProfile:
    """Functional bound for every ``ell`` in ``[0, m - t]``.

    Also evaluates the plateau predicate ``(m mod t) <= floor((d-k+1) t / d)``,
    which claims (at MBR) that ``ell <= m mod t`` buys nothing over ``ell = 0``.
    The predicate is reported next to the evaluation, never in place of it.
    """
    values = []
    for ell in range(m - t + 1):
        params = SystemParams(n, k, d, m, ell, t)
        values.append((ell, functional_bound(params, profile)))
    holds = (m % t) <= ((d - k + 1) * t) // d
    predicted = tuple(range(min(m % t, m - t) + 1)) if holds else ()
    observed = []
    for ell, value in values:
        if value != values[0][1]:
            break
        observed.append(ell)
    return LocalHelpProfile(tuple(values), holds, predicted, tuple(observed))


class Case(enum.Enum):
    DIVISIBLE = "divisible"
    NON_DIVISIBLE = "non-divisible"


@dataclass(frozen=True)
class Classification:
    case: Case
    decomposition: Decomposition
    functional: Fraction | None = None
    exact: Fraction | None = None
    at_mbr: bool | None = None
    claim: str | None = None
    claim_holds: bool | None = None


def classify(params: SystemParams, profile: ResourceProfile | None = None) -> Classification:
    """Tag ``t | (m - ell)`` and, given a profile, check the matching claim.

    Divisible: the two bounds coincide.  Non-divisible at MBR with ``k > 1``:
    the functional bound is strictly larger.  Other combinations carry no claim.
    """
    dec = decompose(params)
    case = Case.DIVISIBLE if dec.b == 0 else Case.NON_DIVISIBLE
    if profile is None:
        return Classification(case, dec)
    bf, be = functional_bound(params, profile), exact_bound(params, profile)
    at_mbr = params.t * profile.alpha == params.d * profile.beta
    claim = holds = None
    if case is Case.DIVISIBLE:
        claim, holds = "B_F == B_E", bf == be
    elif at_mbr and params.k > 1:
        claim, holds = "B_F > B_E", bf > be
    return Classification(case, dec, bf, be, at_mbr, claim, holds)
