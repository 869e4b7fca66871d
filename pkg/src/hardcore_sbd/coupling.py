"""Two hard-core processes driven by the same rain and the same pair marks.

Points are matched across processes by id. A point alive in both is
*regular*; alive only in process 1 it is an *antizombie*; alive only in
process 2 it is a *zombie*. Zombies and antizombies together are the
*special* points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from .dynamics import (Configuration, MarkFn, OutOfOrderEventError, Transition, _check_initial,
                       apply_arrival, sample_times)
from .geometry import ContractError, kissing_number, unit_ball_volume
from .params import SimParams
from .randomness import ArrivalEvent, EventId, MarkOracle, rain_between


class Status(str, Enum):
    REGULAR = "regular"
    ANTIZOMBIE = "antizombie"
    ZOMBIE = "zombie"


class CoupledState:
    def __init__(self, params: SimParams, proc1: Configuration, proc2: Configuration):
        if proc1.window != params.window or proc2.window != params.window:
            raise ContractError("both processes must live in the parameter window")
        if proc1.now != proc2.now:
            raise ContractError("processes must start at the same time")
        self.params = params
        self.proc1 = proc1
        self.proc2 = proc2
        self.now = proc1.now

    def copy(self) -> "CoupledState":
        return CoupledState(self.params, self.proc1.copy(), self.proc2.copy())

    @property
    def status(self) -> Dict[EventId, Status]:
        p1, p2 = self.proc1.points, self.proc2.points
        out = {}
        for k in p1:
            out[k] = Status.REGULAR if k in p2 else Status.ANTIZOMBIE
        for k in p2:
            if k not in p1:
                out[k] = Status.ZOMBIE
        return out

    def regulars(self) -> Set[EventId]:
        return self.proc1.points.keys() & self.proc2.points.keys()

    def antizombies(self) -> Set[EventId]:
        return self.proc1.points.keys() - self.proc2.points.keys()

    def zombies(self) -> Set[EventId]:
        return self.proc2.points.keys() - self.proc1.points.keys()

    def specials(self) -> Set[EventId]:
        return self.proc1.points.keys() ^ self.proc2.points.keys()

    def counts(self) -> Tuple[int, int, int]:
        """``(n_regular, n_antizombie, n_zombie)``."""
        r = len(self.regulars())
        return r, len(self.proc1) - r, len(self.proc2) - r

    def position(self, pid: EventId):
        x = self.proc1.points.get(pid)
        return x if x is not None else self.proc2.points[pid]

    def coalesced(self) -> bool:
        return self.proc1.points.keys() == self.proc2.points.keys()


class CoupledTransition(NamedTuple):
    first: Transition
    second: Transition
    status: Optional[Status]
    parents: Tuple[EventId, ...]


def coupled_apply_arrival(s: CoupledState, e: ArrivalEvent, marks: MarkFn) -> CoupledTransition:
    """Apply one arrival to both processes with shared marks.

    ``parents`` lists the special neighbours that survived the arrival by
    drawing mark 0; every newly created special point has at least one.
    """
    if e.t < s.now:
        raise OutOfOrderEventError(f"event at t={e.t} precedes coupled time {s.now}")
    n1 = s.proc1.index.neighbors(e.x, 1.0)
    n2 = s.proc2.index.neighbors(e.x, 1.0)
    parents: Tuple[EventId, ...] = ()
    if n1 or n2:
        special_nbrs = set(n1).symmetric_difference(n2)
        if special_nbrs:
            parents = tuple(q for q in sorted(special_nbrs) if not marks(e.id, q))
    t1 = apply_arrival(s.proc1, e, marks)
    t2 = apply_arrival(s.proc2, e, marks)
    s.now = e.t
    if t1.accepted and t2.accepted:
        st = Status.REGULAR
    elif t1.accepted:
        st = Status.ANTIZOMBIE
    elif t2.accepted:
        st = Status.ZOMBIE
    else:
        st = None
    return CoupledTransition(t1, t2, st, parents if st in (Status.ANTIZOMBIE, Status.ZOMBIE) else ())


def advance_coupled(s: CoupledState, t_end: float, marks: Optional[MarkFn] = None,
                    on_event: Optional[Callable[[ArrivalEvent, CoupledTransition], None]] = None) -> CoupledState:
    """Apply all rain in ``[s.now, t_end)`` in place."""
    p = s.params
    marks = marks or MarkOracle(p.seed, p.rho)
    for e in rain_between(p.seed, s.now, t_end, p.lam, p.slab_len, p.window):
        tr = coupled_apply_arrival(s, e, marks)
        if on_event is not None:
            on_event(e, tr)
    s.now = max(s.now, t_end)
    s.proc1.now = s.proc2.now = s.now
    return s


@dataclass
class DensitySeries:
    """Rows ``(t, beta_R, beta_A, beta_Z, beta_S)``; densities are counts / volume."""

    rows: List[Tuple[float, float, float, float, float]] = field(default_factory=list)
    ids1: Optional[List[FrozenSet[EventId]]] = None
    ids2: Optional[List[FrozenSet[EventId]]] = None

    @property
    def t(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def beta_S(self) -> np.ndarray:
        return np.array([r[4] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        i = ("t", "beta_R", "beta_A", "beta_Z", "beta_S").index(name)
        return np.array([r[i] for r in self.rows])

    @classmethod
    def mean(cls, series: Sequence["DensitySeries"]) -> "DensitySeries":
        """Row-wise average of replicas sampled at the same times."""
        arr = np.array([s.rows for s in series], dtype=float)
        m = arr.mean(axis=0)
        m[:, 4] = m[:, 2] + m[:, 3]
        return cls([tuple(float(v) for v in row) for row in m])


def _sample_row(s: CoupledState, t: float, vol: float):
    r, a, z = s.counts()
    return (t, r / vol, a / vol, z / vol, (a + z) / vol)


def simulate_coupled(p: SimParams, init1: Configuration, init2: Configuration, T: float, sample_dt: float,
                     t0: float = 0.0, keep_ids: bool = False,
                     on_event: Optional[Callable[[ArrivalEvent, CoupledTransition], None]] = None,
                     ) -> Tuple[DensitySeries, CoupledState]:
    """Coupled dynamics on ``[t0, t0 + T]`` sampled every ``sample_dt``."""
    if not T > 0:
        raise ContractError("T must be positive")
    _check_initial(init1)
    _check_initial(init2)
    a, b = init1.copy(), init2.copy()
    a.now = b.now = t0
    s = CoupledState(p, a, b)
    vol = p.window.volume
    series = DensitySeries(ids1=[] if keep_ids else None, ids2=[] if keep_ids else None)
    marks = MarkOracle(p.seed, p.rho)

    def record(t):
        series.rows.append(_sample_row(s, t, vol))
        if keep_ids:
            series.ids1.append(s.proc1.ids())
            series.ids2.append(s.proc2.ids())

    record(t0)
    for ts in sample_times(t0, t0 + T, sample_dt):
        advance_coupled(s, ts, marks, on_event)
        record(ts)
    advance_coupled(s, t0 + T, marks, on_event)
    return series, s


@dataclass
class FamilyRecord:
    root: EventId
    members_alive: List[EventId]

    @property
    def m(self) -> int:
        return len(self.members_alive)


@dataclass
class FamilyStep:
    """Outcome of following every special point's family over ``[t, t + delta]``."""

    t: float
    delta: float
    n_special_start: int
    n_special_end: int
    records: List[FamilyRecord]
    orphans: int
    state: CoupledState

    @property
    def m_values(self) -> np.ndarray:
        return np.array([r.m for r in self.records], dtype=float)


def family_step(s: CoupledState, delta: float, marks: Optional[MarkFn] = None) -> FamilyStep:
    """Advance a copy of ``s`` by ``delta`` while tracking families.

    A new special point joins the family of every special neighbour that
    blocked it (mark 0); family membership is inherited through such links.
    """
    if not delta >= 0:
        raise ContractError("delta must be non-negative")
    work = s.copy()
    roots = sorted(work.specials())
    member: Dict[EventId, FrozenSet[EventId]] = {z: frozenset((z,)) for z in roots}
    orphans = [0]

    def on_event(e, tr: CoupledTransition):
        if tr.status in (Status.ANTIZOMBIE, Status.ZOMBIE):
            fams = set()
            for q in tr.parents:
                fams |= member.get(q, frozenset())
            if not tr.parents:
                orphans[0] += 1
            member[e.id] = frozenset(fams)

    t = s.now
    advance_coupled(work, t + delta, marks, on_event)
    alive = work.specials()
    by_root: Dict[EventId, List[EventId]] = {z: [] for z in roots}
    for q in sorted(alive):
        for z in member.get(q, ()):
            by_root[z].append(q)
    records = [FamilyRecord(z, by_root[z]) for z in roots]
    return FamilyStep(t, delta, len(roots), len(alive), records, orphans[0], work)


def track_families(s: CoupledState, t: float, delta: float, marks: Optional[MarkFn] = None) -> List[FamilyRecord]:
    """Families ``M_{z, t, t+delta}`` of the special points alive at ``t``; ``s`` is untouched."""
    if t != s.now:
        raise ContractError(f"state is at time {s.now}, not {t}")
    return family_step(s, delta, marks).records


@dataclass
class CoverageStat:
    n_special: int
    mean_regular_count: float
    mean_covered_volume: float
    max_regular_count: int
    bound_violations: int
    kappa_exceedances: int
    empty: bool = False


def _ball_samples(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(size=(n, 1)) ** (1.0 / d)


def regular_coverage_stat(s: CoupledState, n_mc: int = 4000, seed: int = 0) -> CoverageStat:
    """Regular-point statistics around each special point.

    For every special ``z``: the number of regulars within 3/2 and a Monte
    Carlo estimate of the volume of ``B(z, 1)`` covered by unit balls around
    regulars. The pointwise inequality
    ``covered >= nu1 / 4**d * [count > 0] >= nu1 / (4**d (kappa - 1)) * count``
    is checked with a 3-sigma Monte Carlo margin; counts above ``kappa - 1``
    are tallied separately.
    """
    p = s.params
    w = p.window
    d = w.d
    nu1 = unit_ball_volume(d)
    kappa = kissing_number(d)
    specials = sorted(s.specials())
    if not specials:
        return CoverageStat(0, 0.0, 0.0, 0, 0, 0, empty=True)
    regs = s.regulars()
    reg_pos = np.array([s.proc1.points[q] for q in sorted(regs)], dtype=float).reshape(-1, d)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0FE]))
    unit = _ball_samples(rng, d, n_mc)
    L = w.side
    counts, covered = [], []
    violations = exceed = 0
    for z in specials:
        zx = np.array(s.position(z))
        if len(reg_pos):
            diff = reg_pos - zx
            if w.torus:
                diff -= L * np.round(diff / L)
            dist = np.sqrt((diff ** 2).sum(1))
            near = diff[dist <= 2.0]
            k = int((dist <= 1.5).sum())
        else:
            near = np.zeros((0, d))
            k = 0
        if len(near):
            dd = ((unit[:, None, :] - near[None, :, :]) ** 2).sum(-1)
            frac = float((dd <= 1.0).any(axis=1).mean())
        else:
            frac = 0.0
        vol = nu1 * frac
        sigma = nu1 * math.sqrt(max(frac * (1 - frac), 1.0 / n_mc) / n_mc)
        lower = nu1 / 4 ** d * (1 if k > 0 else 0)
        if vol + 3 * sigma < lower:
            violations += 1
        if k > kappa - 1:
            exceed += 1
        counts.append(k)
        covered.append(vol)
    return CoverageStat(len(specials), float(np.mean(counts)), float(np.mean(covered)), int(max(counts)),
                        violations, exceed)
