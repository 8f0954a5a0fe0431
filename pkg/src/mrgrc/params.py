"""System parameters for clustered storage with batch repair.

A system is described by six integers ``(n, k, d, m, ell, t)``: ``n`` clusters
of ``m`` nodes each, data collection from any ``k`` clusters, and repair of
``t`` simultaneous failures in one cluster using ``ell`` surviving local nodes
and ``d`` helper clusters.  Storage and bandwidth live in
:class:`ResourceProfile`.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction


class ParameterError(ValueError):
    """Raised when a parameter tuple violates the system model.

    ``param`` names the offending field when one can be singled out.
    """

    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param


class NonPositive(ParameterError):
    pass


class KOutOfRange(ParameterError):
    pass


class DOutOfRange(ParameterError):
    pass


class TOutOfRange(ParameterError):
    pass


class EllTooLarge(ParameterError):
    pass


class NotIntegral(ParameterError):
    pass


def _as_int(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise NonPositive(f"{name} must be an integer, got {value!r}", name)
    return int(value)


@dataclass(frozen=True)
class SystemParams:
    n: int
    k: int
    d: int
    m: int
    ell: int
    t: int

    def __post_init__(self):
        for name in ("n", "k", "d", "m", "t"):
            if _as_int(name, getattr(self, name)) < 1:
                raise NonPositive(f"{name} >= 1 violated ({name}={getattr(self, name)})", name)
        if _as_int("ell", self.ell) < 0:
            raise NonPositive(f"ell >= 0 violated (ell={self.ell})", "ell")
        n, k, d, m, ell, t = self.astuple()
        if not k <= n - 1:
            raise KOutOfRange(f"k <= n-1 violated (k={k}, n={n})", "k")
        if not k <= d <= n - 1:
            raise DOutOfRange(f"k <= d <= n-1 violated (k={k}, d={d}, n={n})", "d")
        if not t <= m:
            raise TOutOfRange(f"t <= m violated (t={t}, m={m})", "t")
        if not ell <= m - t:
            raise EllTooLarge(f"ell <= m-t violated (ell={ell}, m-t={m - t})", "ell")

    def astuple(self):
        return (self.n, self.k, self.d, self.m, self.ell, self.t)

    def replace(self, **changes) -> SystemParams:
        fields = dict(zip(("n", "k", "d", "m", "ell", "t"), self.astuple()))
        fields.update(changes)
        return SystemParams(**fields)

    def to_dict(self):
        return dict(zip(("n", "k", "d", "m", "ell", "t"), self.astuple()))


@dataclass(frozen=True)
class Decomposition:
    """``m - ell = a*t + b`` with ``a >= 1`` and ``0 <= b < t``."""

    a: int
    b: int


def validate(n, k, d, m, ell, t) -> SystemParams:
    """Build a :class:`SystemParams`, raising a :class:`ParameterError`
    subclass that names the violated constraint."""
    return SystemParams(n, k, d, m, ell, t)


def from_mapping(raw) -> SystemParams:
    """Parse params from a mapping with keys ``n k d m ell t``."""
    missing = [key for key in ("n", "k", "d", "m", "ell", "t") if key not in raw]
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    return SystemParams(*(raw[key] for key in ("n", "k", "d", "m", "ell", "t")))


def decompose(params: SystemParams) -> Decomposition:
    a, b = divmod(params.m - params.ell, params.t)
    return Decomposition(a, b)


def _as_fraction(name, value):
    if isinstance(value, bool):
        raise NonPositive(f"{name} must be a number, got {value!r}", name)
    try:
        frac = Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise NonPositive(f"{name} must be a rational number, got {value!r}", name) from None
    if frac <= 0:
        raise NonPositive(f"{name} > 0 violated ({name}={frac})", name)
    return frac


@dataclass(frozen=True)
class ResourceProfile:
    """Per-node storage ``alpha`` and per-helper-cluster bandwidth ``beta``.

    Values are exact rationals.  Bound formulas accept any positive rational;
    graph and simulation code calls :meth:`integral` to obtain integers.
    """

    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_fraction("alpha", self.alpha))
        object.__setattr__(self, "beta", _as_fraction("beta", self.beta))

    @property
    def is_integral(self):
        return self.alpha.denominator == 1 and self.beta.denominator == 1

    def integral(self) -> tuple[int, int]:
        if not self.is_integral:
            raise NotIntegral(
                f"integer alpha, beta required (alpha={self.alpha}, beta={self.beta})"
            )
        return int(self.alpha), int(self.beta)

    def scaled(self, factor) -> ResourceProfile:
        factor = Fraction(factor)
        return ResourceProfile(self.alpha * factor, self.beta * factor)
