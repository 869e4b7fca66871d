"""Closed-form decay bounds for the density of special points."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import mpmath

from .geometry import ContractError, kissing_number, unit_ball_volume


def _check(rho: float, d: int) -> None:
    if not 0.0 <= rho <= 1.0:
        raise ContractError(f"rho must lie in [0, 1], got {rho}")
    kissing_number(d)


def theorem_value(rho: float, d: int) -> float:
    """``(1 - 2 rho) - rho**k (1 - rho)**2 ((3/2)**d - 1) / (4**d (k - 1) (1 + rho - rho**2))``
    with ``k`` the kissing number; negative means exponential decay is guaranteed."""
    _check(rho, d)
    k = kissing_number(d)
    extra = rho ** k * (1.0 - rho) ** 2 * (1.5 ** d - 1.0) / (4.0 ** d * (k - 1) * (1.0 + rho - rho * rho))
    return (1.0 - 2.0 * rho) - extra


def theorem_value_mp(rho, d: int, dps: int = 50) -> mpmath.mpf:
    """Same expression in ``dps``-digit arithmetic, written from scratch as a cross-check."""
    _check(float(rho), d)
    with mpmath.workdps(dps):
        r = mpmath.mpf(str(rho)) if isinstance(rho, float) else mpmath.mpf(rho)
        kap = {1: 2, 2: 6, 3: 12}[d]
        num = mpmath.power(r, kap) * mpmath.power(1 - r, 2) * (mpmath.power(mpmath.mpf(3) / 2, d) - 1)
        den = mpmath.power(4, d) * (kap - 1) * (1 + r - r ** 2)
        return +(1 - 2 * r - num / den)


def naive_rate(rho: float, d: int, lam: float = 1.0) -> float:
    """Upper bound ``nu1 * lam * (1 - 2 rho)`` on the log-derivative of the special density."""
    return unit_ball_volume(d) * lam * (1.0 - 2.0 * rho)


@dataclass(frozen=True)
class ConditionReport:
    rho: float
    d: int
    lam: float
    kappa: int
    nu1: float
    naive_bound: float
    theorem_value: float
    theorem_rate: float
    satisfied_naive: bool
    satisfied_theorem: bool

    def to_dict(self) -> dict:
        return asdict(self)


def theorem_condition(rho: float, d: int, lam: float = 1.0) -> ConditionReport:
    v = theorem_value(rho, d)
    nu1 = unit_ball_volume(d)
    naive = naive_rate(rho, d, lam)
    return ConditionReport(rho, d, lam, kissing_number(d), nu1, naive, v, nu1 * lam * v, naive < 0, v < 0)


def theorem_threshold(d: int, lo: float = 0.1, hi: float = 0.5, tol: float = 1e-9) -> float:
    """Smallest ``rho`` (to ``tol``) where the theorem condition holds, by bisection.

    Requires the condition to fail at ``lo`` and hold at ``hi``.
    """
    flo, fhi = theorem_value(lo, d), theorem_value(hi, d)
    if not (flo > 0 > fhi):
        raise ContractError(f"no sign change on [{lo}, {hi}] for d={d}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if theorem_value(mid, d) < 0:
            hi = mid
        else:
            lo = mid
    return hi
