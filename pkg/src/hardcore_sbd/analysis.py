"""Decay fits, Laplace functionals, packing statistics and parameter sweeps."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .bounds import ConditionReport, theorem_condition  # noqa: F401  (re-exported)
from .cftp import run_from_empty, sample_stationary
from .coupling import DensitySeries, advance_coupled, CoupledState
from .dynamics import Configuration, generate_initial, sample_times
from .geometry import ContractError, Window, ball_volume, unit_ball_volume
from .params import SimParams
from .randomness import MarkOracle
from .replicas import map_replicas

HEXAGONAL_PACKING_2D = math.pi / (2 * math.sqrt(3))  # 0.9069..., densest disc packing


@dataclass
class DecayFit:
    """Least-squares fit ``beta_S ~ alpha * exp(-c_hat * t)``."""

    c_hat: float
    alpha_hat: float
    r2: float
    window: Tuple[float, float]
    n_rows: int
    conclusive: bool = True
    extinction_time: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay_rate(series: Union[DensitySeries, Tuple[Sequence[float], Sequence[float]]], t_min: float = 1.0,
                   t_max: Optional[float] = None, min_rows: int = 10) -> DecayFit:
    """Fit the log-slope of ``beta_S`` on rows with ``t >= t_min`` and ``beta_S > 0``.

    The series is cut at its last positive row (on a finite torus specials
    can go extinct); that time is reported as ``extinction_time`` when the
    series later hits zero.
    """
    if isinstance(series, DensitySeries):
        t, b = series.t, series.beta_S
    else:
        t, b = (np.asarray(v, dtype=float) for v in series)
    extinction = None
    pos = np.nonzero(b > 0)[0]
    if len(pos) and pos[-1] < len(b) - 1:
        extinction = float(t[pos[-1] + 1])
        t, b = t[: pos[-1] + 1], b[: pos[-1] + 1]
    sel = (t >= t_min) & (b > 0)
    if t_max is not None:
        sel &= t <= t_max
    t, b = t[sel], b[sel]
    if len(t) < min_rows:
        return DecayFit(math.nan, math.nan, math.nan, (t_min, math.nan if t_max is None else t_max), len(t),
                        conclusive=False, extinction_time=extinction)
    y = np.log(b)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(math.exp(icpt)), float(min(max(r2, 0.0), 1.0)),
                    (float(t[0]), float(t[-1])), len(t), True, extinction)


# ---------------------------------------------------------------------------
# Laplace functional


@dataclass(frozen=True)
class BoxFunction:
    """Test function equal to ``height`` on the box ``[lo, hi]`` and 0 elsewhere."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    height: float = 1.0

    def __post_init__(self):
        if self.height < 0:
            raise ContractError("test function must be non-negative")

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(len(pts), -1)
        inside = np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=1)
        return np.where(inside, self.height, 0.0)

    @property
    def l1_norm(self) -> float:
        return self.height * float(np.prod(np.subtract(self.hi, self.lo)))


def _points(snap) -> np.ndarray:
    if isinstance(snap, Configuration):
        return snap.positions()
    return np.asarray(snap, dtype=float)


def laplace_terms(snapshots: Iterable, f) -> np.ndarray:
    """``exp(-sum_x f(x))`` for each snapshot."""
    out = []
    for s in snapshots:
        pts = _points(s)
        v = f.values(pts) if len(pts) else np.zeros(0)
        if np.any(v < 0):
            raise ContractError("test function took a negative value")
        out.append(math.exp(-float(v.sum())))
    return np.array(out)


def laplace_functional(snapshots: Sequence, f) -> Tuple[float, float]:
    """Empirical Laplace functional ``E exp(-sum f)`` and its standard error."""
    terms = laplace_terms(snapshots, f)
    if not len(terms):
        raise ContractError("no snapshots")
    se = float(terms.std(ddof=1) / math.sqrt(len(terms))) if len(terms) > 1 else math.nan
    return float(terms.mean()), se


@dataclass
class LaplaceRow:
    t: float
    L: float
    L_hat: float
    diff: float
    se: float
    beta_S: float
    bound: float
    violation: bool


@dataclass
class LaplaceBoundReport:
    rows: List[LaplaceRow]
    c_hat: float
    beta_S0: float
    l1: float
    n_replicas: int
    condition: ConditionReport
    fit: DecayFit

    @property
    def violations(self) -> int:
        return sum(r.violation for r in self.rows)

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "c_hat": self.c_hat, "beta_S0": self.beta_S0,
                "l1": self.l1, "n_replicas": self.n_replicas, "violations": self.violations,
                "condition": self.condition.to_dict(), "fit": self.fit.to_dict()}


def _laplace_replica(args):
    p, f, T, sample_dt, init_kind, lam_prop, T_init, T_max = args
    stationary = sample_stationary(p, T_init, T_max).sample
    start = generate_initial(init_kind, lam_prop, p, tag=7)
    s = CoupledState(p, start, stationary)
    marks = MarkOracle(p.seed, p.rho)
    vol = p.window.volume
    rows = []

    def record(t):
        l1 = laplace_terms([s.proc1], f)[0]
        l2 = laplace_terms([s.proc2], f)[0]
        rows.append((t, l1, l2, len(s.specials()) / vol))

    record(0.0)
    for ts in sample_times(0.0, T, sample_dt):
        advance_coupled(s, ts, marks)
        record(ts)
    return rows


def laplace_bound_check(p: SimParams, f, T: float, n_replicas: int = 30, sample_dt: Optional[float] = None,
                        init_kind: str = "empty", lam_prop: float = 1.0, t_min: float = 0.0,
                        T_init: float = 1.0, T_max: float = 64.0, workers: int = 1) -> LaplaceBoundReport:
    """Check ``|L_t(f) - L^_t(f)| <= ||f||_1 beta_S(0) exp(-c_hat t)``.

    Replica ``i`` (seed ``seed + i``) couples a process started from
    ``init_kind`` with one started from a CFTP stationary sample, both driven
    by the rain after time 0. ``c_hat`` is fitted to the replica-averaged
    special density. A row is a violation when the observed gap exceeds the
    bound by more than three standard errors.
    """
    sample_dt = sample_dt or T / 20
    args = [(p.with_(seed=p.seed + i), f, T, sample_dt, init_kind, lam_prop, T_init, T_max)
            for i in range(n_replicas)]
    runs = np.array(map_replicas(_laplace_replica, args, workers))  # (replica, time, 4)
    t = runs[0, :, 0]
    beta = runs[:, :, 3].mean(axis=0)
    fit = fit_decay_rate((t, beta), t_min=t_min, min_rows=3)
    c_hat = fit.c_hat if fit.conclusive else 0.0
    beta0 = float(beta[0])
    l1 = f.l1_norm
    rows = []
    for j, tj in enumerate(t):
        a, b = runs[:, j, 1], runs[:, j, 2]
        diff = abs(float(a.mean() - b.mean()))
        se = float((a - b).std(ddof=1) / math.sqrt(n_replicas)) if n_replicas > 1 else 0.0
        bound = l1 * beta0 * math.exp(-c_hat * tj)
        rows.append(LaplaceRow(float(tj), float(a.mean()), float(b.mean()), diff, se, float(beta[j]), bound,
                               diff > bound + 3 * se))
    return LaplaceBoundReport(rows, c_hat, beta0, l1, n_replicas, theorem_condition(p.rho, p.d, p.lam), fit)


# ---------------------------------------------------------------------------
# Packing


def packing_fraction(c: Configuration, w: Optional[Window] = None) -> float:
    """Fraction of the window covered by disjoint radius-1/2 balls at the points."""
    w = w or c.window
    return len(c) * ball_volume(w.d, 0.5) / w.volume


def matern1_intensity(lam: float, d: int) -> float:
    return lam * math.exp(-lam * unit_ball_volume(d))


def matern2_intensity(lam: float, d: int) -> float:
    nu = unit_ball_volume(d)
    return (1.0 - math.exp(-lam * nu)) / nu


@dataclass
class SweepRow:
    rho: float
    intensity: float
    packing_fraction: float
    matern1_ref: float
    matern2_ref: float
    coalesced: bool


def _sweep_replica(args):
    p, T = args
    if p.rho > 0:
        r = sample_stationary(p, 1.0, T)
        if r.coalesced:
            return len(r.sample), True
    return len(run_from_empty(p, -T, 0.0)), False


def rho_sweep(p: SimParams, rhos: Sequence[float], T: float, n_replicas: int = 4, workers: int = 1) -> List[SweepRow]:
    """Stationary intensity and packing fraction for each ``rho``.

    CFTP samples are used where they coalesce within horizon ``T``; otherwise
    the replica falls back to a run of length ``T`` from empty and the row is
    flagged ``coalesced=False``. No monotonicity in ``rho`` is assumed.
    """
    rows = []
    w = p.window
    half = ball_volume(w.d, 0.5)
    for rho in rhos:
        if not 0.0 < rho <= 1.0:
            raise ContractError(f"sweep values must lie in (0, 1], got {rho}")
        args = [(p.with_(rho=float(rho), seed=p.seed + i), T) for i in range(n_replicas)]
        res = map_replicas(_sweep_replica, args, workers)
        lam_hat = float(np.mean([n for n, _ in res])) / w.volume
        rows.append(SweepRow(float(rho), lam_hat, lam_hat * half, matern1_intensity(p.lam, p.d),
                             matern2_intensity(p.lam, p.d), all(ok for _, ok in res)))
    return rows
