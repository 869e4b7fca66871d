"""Coupling from the past.

Executions started empty at ``-T`` and at ``-2T`` share the same rain and
marks (both are pure functions of the seed). The longer one is run alone
up to ``-T`` and then coupled with the shorter one, its points acting as
zombies. When no special point is left at time 0 the two executions agree
and the common time-0 configuration is an exact draw from the stationary
regime of the torus dynamics.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import mannwhitneyu

from .bounds import theorem_condition
from .coupling import CoupledState, advance_coupled
from .dynamics import Configuration, advance, simulate
from .geometry import ContractError, Window
from .params import SimParams
from .randomness import MarkOracle
from .replicas import map_replicas

log = logging.getLogger(__name__)

NEVER = math.inf
RHO_ZERO_DIAGNOSTIC = "rho=0: arrivals never kill, so specials never die and the horizons cannot coalesce"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]`` used as an observation window."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    @classmethod
    def unit(cls, d: int, corner: float = 0.0) -> "Box":
        return cls((corner,) * d, (corner + 1.0,) * d)

    def distance(self, x: Sequence[float], w: Window) -> float:
        s = 0.0
        for xi, a, b in zip(x, self.lo, self.hi):
            if a <= xi <= b:
                continue
            g = min(abs(xi - a), abs(xi - b))
            if w.torus:
                g = min(g, w.side - abs(xi - a), w.side - abs(xi - b))
            s += g * g
        return math.sqrt(s)

    def contains(self, x: Sequence[float], w: Window, dilate: float = 0.0) -> bool:
        return self.distance(x, w) <= dilate

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))


def run_from_empty(p: SimParams, start: float, end: float = 0.0) -> Configuration:
    """Execution started empty at time ``start`` and stopped at ``end``."""
    c = Configuration(p.window, start)
    return advance(c, p, end)


@dataclass
class HorizonComparison:
    """Coupled comparison of the executions started at ``-horizon_a`` and ``-horizon_b``."""

    horizon_a: float
    horizon_b: float
    end: float
    agree: bool
    last_clear: float  # time at which the last discrepancy in the region vanished
    state: CoupledState
    special_trace: List[Tuple[float, int]] = field(default_factory=list)


def compare_horizons(p: SimParams, horizon_a: float, horizon_b: float, end: float = 0.0,
                     region=None, trace: bool = False) -> HorizonComparison:
    """Couple the executions from ``-horizon_a`` and ``-horizon_b`` up to ``end``.

    ``region`` is an optional predicate on coordinates restricting where
    discrepancies count. ``last_clear`` is ``-horizon_a`` when the region
    never held a discrepancy and ``inf`` when one survives at ``end``.
    """
    if horizon_b < horizon_a:
        raise ContractError("horizon_b must be at least horizon_a")
    start = -float(horizon_a)
    longer = run_from_empty(p, -float(horizon_b), start) if horizon_b > horizon_a else Configuration(p.window, start)
    s = CoupledState(p, Configuration(p.window, start), longer)
    inside = region or (lambda x: True)
    count = sum(1 for x in longer.points.values() if inside(x))
    state = {"count": count, "last": start}
    tr_log: List[Tuple[float, int]] = [(start, count)] if trace else []

    def on_event(e, tr):
        before = state["count"]
        k1, k2 = tr.first.killed, tr.second.killed
        delta = 0
        if k1 or k2:
            for q in set(k1).symmetric_difference(k2):
                if inside(positions[q]):
                    delta -= 1
        if tr.status is not None and tr.status.value != "regular" and inside(e.x):
            delta += 1
        if delta:
            state["count"] = before + delta
            if before > 0 and state["count"] == 0:
                state["last"] = e.t
            if trace:
                tr_log.append((e.t, state["count"]))

    # killed points are gone from the configurations by the time on_event runs
    positions = _PositionCache(s)
    advance_coupled(s, end, MarkOracle(p.seed, p.rho), _chain(positions.observe, on_event))
    if state["count"] > 0:
        agree, last = False, NEVER
    else:
        agree, last = True, state["last"]
    return HorizonComparison(horizon_a, horizon_b, end, agree, last, s, tr_log)


class _PositionCache(dict):
    def __init__(self, s: CoupledState):
        super().__init__(s.proc1.points)
        self.update(s.proc2.points)

    def observe(self, e, tr):
        self[e.id] = e.x


def _chain(*fns):
    def run(e, tr):
        for f in fns:
            f(e, tr)
    return run


@dataclass
class CftpResult:
    sample: Configuration
    horizon_used: float
    coalesced: bool
    coincidence_time: float
    seed: int
    diagnostic: str = ""
    horizons_tried: List[float] = field(default_factory=list)

    def sidecar(self) -> dict:
        ct = self.coincidence_time
        return {"seed": self.seed, "horizon_used": self.horizon_used, "coalesced": self.coalesced,
                "coincidence_time": ct if math.isfinite(ct) else None}


def sample_stationary(p: SimParams, T_init: float = 1.0, T_max: float = 64.0, obs: Optional[Box] = None) -> CftpResult:
    """Exact stationary sample at time 0 by horizon doubling.

    Horizons ``T = T_init, 2 T_init, ...`` up to ``T_max`` are tried; ``T`` is
    accepted once the executions from ``-T`` and ``-2T`` agree at time 0 (on
    ``obs`` if given, else on the whole torus). Never raises on failure: the
    result is flagged ``coalesced=False`` instead.
    """
    if not T_init > 0:
        raise ContractError("T_init must be positive")
    if p.rho == 0.0:
        return CftpResult(run_from_empty(p, -T_init), T_init, False, NEVER, p.seed, RHO_ZERO_DIAGNOSTIC, [])
    cond = theorem_condition(p.rho, p.d, p.lam)
    if not cond.satisfied_theorem:
        warnings.warn(f"rho={p.rho}, d={p.d}: sufficient decay condition not met; coalescence is not guaranteed",
                      RuntimeWarning, stacklevel=2)
    region = None if obs is None else (lambda x: obs.contains(x, p.window))
    T = float(T_init)
    tried = []
    last = None
    while T <= T_max:
        tried.append(T)
        cmp = compare_horizons(p, T, 2 * T, 0.0, region)
        last = cmp
        if cmp.agree:
            return CftpResult(cmp.state.proc1, T, True, cmp.last_clear, p.seed, "", tried)
        T *= 2
    log.info("seed %d: no coalescence up to T_max=%s", p.seed, T_max)
    sample = last.state.proc2 if last is not None else run_from_empty(p, -T_init)
    return CftpResult(sample, tried[-1] if tried else T_init, False, NEVER, p.seed,
                      f"no coalescence with horizons up to {T_max}", tried)


def coalescence_absorbing(p: SimParams, T: float, factor: int = 4) -> bool:
    """True iff the executions from ``-T`` and ``-factor*T`` agree at time 0."""
    return compare_horizons(p, T, factor * T).agree


def coincidence_time(p: SimParams, horizon_a: float, horizon_b: float, C: Optional[Box] = None,
                     budget: Optional[float] = None) -> float:
    """Time, counted from ``-horizon_a``, after which the two executions never
    again differ within distance 1 of ``C``.

    The coincidence time is not a stopping time, so the coupled run goes to a
    fixed budget (default ``horizon_a``) and the last discrepancy is found
    afterwards. Returns ``inf`` if a discrepancy is still present at the end.
    """
    if horizon_b < horizon_a:
        raise ContractError("horizon_a must not exceed horizon_b")
    budget = horizon_a if budget is None else budget
    w = p.window
    region = None if C is None else (lambda x: C.contains(x, w, dilate=1.0))
    cmp = compare_horizons(p, horizon_a, horizon_b, -horizon_a + budget, region)
    return cmp.last_clear + horizon_a if math.isfinite(cmp.last_clear) else NEVER


# ---------------------------------------------------------------------------
# Stationarity test


@dataclass
class StationarityReport:
    p_value: float
    passed: Optional[bool]
    alpha: float
    counts_a: List[int]
    counts_b: List[int]
    n_coalesced_a: int
    n_coalesced_b: int
    delta: float
    control: bool
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p_value", "passed", "alpha", "n_coalesced_a", "n_coalesced_b",
                                              "delta", "control", "inconclusive")} | {
            "mean_a": float(np.mean(self.counts_a)) if self.counts_a else None,
            "mean_b": float(np.mean(self.counts_b)) if self.counts_b else None}


def rank_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Mann-Whitney p-value; identical samples give 1."""
    if list(a) == list(b):
        return 1.0
    return float(mannwhitneyu(a, b, alternative="two-sided").pvalue)


def _count(c: Configuration, obs: Optional[Box]) -> int:
    if obs is None:
        return len(c)
    return sum(1 for x in c.points.values() if obs.contains(x, c.window))


def _stationary_count(args) -> Tuple[bool, int]:
    p, T_init, T_max, delta, obs = args
    r = sample_stationary(p, T_init, T_max)
    c = r.sample
    if delta > 0:
        _, c = simulate(p, c, 0.0, delta)
    return r.coalesced, _count(c, obs)


def _transient_count(args) -> Tuple[bool, int]:
    p, t_end, obs = args
    return True, _count(run_from_empty(p, 0.0, t_end), obs)


def stationarity_check(p: SimParams, n_samples: int, delta: float = 5.0, alpha: float = 0.01,
                       T_init: float = 1.0, T_max: float = 64.0, obs: Optional[Box] = None,
                       control: bool = False, control_time: float = 0.5, workers: int = 1) -> StationarityReport:
    """Compare counts of CFTP samples at time 0 with counts ``delta`` later.

    Batch A uses seeds ``seed .. seed+n-1``, batch B the next ``n`` seeds.
    With ``control=True`` batch B is replaced by runs started empty at 0 and
    stopped at ``control_time``, which the test should reject.
    """
    if n_samples < 2:
        raise ContractError("need at least two samples per batch")
    seeds_a = [p.seed + i for i in range(n_samples)]
    seeds_b = [p.seed + n_samples + i for i in range(n_samples)]
    res_a = map_replicas(_stationary_count, [(p.with_(seed=s), T_init, T_max, 0.0, obs) for s in seeds_a], workers)
    if control:
        res_b = map_replicas(_transient_count, [(p.with_(seed=s), control_time, obs) for s in seeds_b], workers)
    else:
        res_b = map_replicas(_stationary_count, [(p.with_(seed=s), T_init, T_max, delta, obs) for s in seeds_b],
                             workers)
    a = [n for ok, n in res_a if ok]
    b = [n for ok, n in res_b if ok]
    if min(len(a), len(b)) < min(30, n_samples):
        return StationarityReport(math.nan, None, alpha, a, b, len(a), len(b), delta, control, inconclusive=True)
    pv = rank_test(a, b)
    return StationarityReport(pv, pv > alpha, alpha, a, b, len(a), len(b), delta, control)
