"""Single-process hard-core birth-death dynamics.

An arrival ``p`` at ``x_p`` meets every live point ``q`` with
``|x_p - x_q| <= 1``. Each such pair carries one Bernoulli(rho) mark: mark 1
kills ``q``, mark 0 lets ``q`` survive and block ``p``. ``p`` is born iff
every mark is 1, which gives acceptance probability ``rho**k`` with ``k``
neighbours and a per-neighbour death probability ``rho``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import ContractError, Coord, GridIndex, Window, _dist
from .params import SimParams
from .randomness import ArrivalEvent, EventId, MarkOracle, rain_between, uniform_stream

log = logging.getLogger(__name__)

MarkFn = Callable[[EventId, EventId], int]


class OutOfOrderEventError(ContractError):
    pass


class InvalidInitialConditionError(ContractError):
    pass


class Configuration:
    """Live point set with stable ids, birth times and a cell index."""

    def __init__(self, window: Window, now: float = 0.0):
        self.window = window
        self.index = GridIndex(window)
        self.birth: Dict[EventId, float] = {}
        self.now = float(now)

    @classmethod
    def from_points(cls, window: Window, coords: Iterable[Sequence[float]], tag: int = 0,
                    now: float = 0.0) -> "Configuration":
        """Initial configuration; points get ids of kind ``initial`` and birth time ``now``."""
        c = cls(window, now)
        for i, x in enumerate(coords):
            c.add(EventId.initial(i, tag), x, now)
        return c

    @property
    def points(self) -> Dict[EventId, Coord]:
        return self.index.coords

    def __len__(self) -> int:
        return len(self.index.coords)

    def __contains__(self, pid) -> bool:
        return pid in self.index.coords

    def add(self, pid: EventId, x: Sequence[float], birth: Optional[float] = None) -> None:
        self.index.insert(pid, self.window.canonical(x))
        self.birth[pid] = self.now if birth is None else birth

    def remove(self, pid: EventId) -> Coord:
        del self.birth[pid]
        return self.index.remove(pid)

    def copy(self) -> "Configuration":
        new = Configuration.__new__(Configuration)
        new.window = self.window
        new.index = self.index.copy()
        new.birth = dict(self.birth)
        new.now = self.now
        return new

    def ids(self) -> FrozenSet[EventId]:
        return frozenset(self.index.coords)

    def sorted_ids(self) -> List[EventId]:
        return sorted(self.index.coords)

    def positions(self) -> np.ndarray:
        """Coordinates as an ``(n, d)`` array in ascending id order."""
        pts = self.index.coords
        if not pts:
            return np.empty((0, self.window.d))
        return np.array([pts[k] for k in sorted(pts)], dtype=float)

    def same_points(self, other: "Configuration") -> bool:
        return self.index.coords == other.index.coords

    def hard_core_violations(self) -> List[Tuple[EventId, EventId]]:
        """Pairs at distance <= 1, found without the cell index."""
        ids = self.sorted_ids()
        if len(ids) < 2:
            return []
        pos = self.positions()
        w = self.window
        if len(ids) <= 2000:
            diff = np.abs(pos[:, None, :] - pos[None, :, :])
            if w.torus:
                diff = np.minimum(diff, w.side - diff)
            dist = np.sqrt((diff ** 2).sum(-1))
            i, j = np.nonzero(np.triu(dist <= 1.0, k=1))
            pairs = zip(i.tolist(), j.tolist())
        else:
            tree = cKDTree(pos, boxsize=w.side if w.torus else None)
            pairs = sorted(tree.query_pairs(1.0))
        return [(ids[a], ids[b]) for a, b in pairs]

    def __repr__(self) -> str:
        return f"Configuration(n={len(self)}, now={self.now}, window={self.window})"


class Transition(NamedTuple):
    accepted: bool
    killed: Tuple[EventId, ...]


def apply_arrival(c: Configuration, e: ArrivalEvent, marks: MarkFn) -> Transition:
    """Apply one arrival in place (pathwise update rule)."""
    if e.t < c.now:
        raise OutOfOrderEventError(f"event at t={e.t} precedes configuration time {c.now}")
    eid = e.id
    nbrs = c.index.neighbors(e.x, 1.0)
    killed = []
    accepted = True
    if nbrs:
        nbrs.sort()
        for q in nbrs:
            if marks(eid, q):
                killed.append(q)
            else:
                accepted = False
        for q in killed:
            c.remove(q)
    c.now = e.t
    if accepted:
        c.add(eid, e.x, e.t)
    return Transition(accepted, tuple(killed))


@dataclass
class Snapshot:
    time: float
    n_points: int
    ids: Optional[FrozenSet[EventId]] = None


class EventRecord(NamedTuple):
    t: float
    id: EventId
    accepted: bool
    killed: Tuple[EventId, ...]


@dataclass
class Trajectory:
    snapshots: List[Snapshot] = field(default_factory=list)
    events: Optional[List[EventRecord]] = None


def sample_times(t0: float, t1: float, dt: Optional[float]) -> List[float]:
    if not dt:
        return []
    n = int(math.floor((t1 - t0) / dt + 1e-9))
    return [t0 + k * dt for k in range(1, n + 1)]


def _check_initial(init: Configuration) -> None:
    bad = init.hard_core_violations()
    if bad:
        raise InvalidInitialConditionError(f"initial configuration has {len(bad)} pairs at distance <= 1")


def advance(c: Configuration, p: SimParams, t_end: float, marks: Optional[MarkFn] = None,
            on_event: Optional[Callable[[ArrivalEvent, Transition], None]] = None) -> Configuration:
    """Apply all rain in ``[c.now, t_end)`` in place."""
    marks = marks or MarkOracle(p.seed, p.rho)
    for e in rain_between(p.seed, c.now, t_end, p.lam, p.slab_len, c.window):
        tr = apply_arrival(c, e, marks)
        if on_event is not None:
            on_event(e, tr)
    c.now = max(c.now, t_end)
    return c


def simulate(p: SimParams, init: Configuration, t0: float, t1: float, sample_dt: Optional[float] = None,
             keep_ids: bool = False, log_events: bool = False,
             on_event: Optional[Callable[[ArrivalEvent, Transition], None]] = None
             ) -> Tuple[Trajectory, Configuration]:
    """Forward event-driven simulation of the rain in ``[t0, t1)``.

    Snapshots are taken at ``t0`` and every ``sample_dt`` after it; the
    snapshot at time ``s`` reflects all arrivals with ``t < s``.
    """
    if t1 < t0:
        raise ContractError("t1 must not precede t0")
    if init.window != p.window:
        raise ContractError("initial configuration lives in a different window")
    _check_initial(init)
    c = init.copy()
    c.now = t0
    marks = MarkOracle(p.seed, p.rho)
    traj = Trajectory(events=[] if log_events else None)

    def snap(t):
        traj.snapshots.append(Snapshot(t, len(c), c.ids() if keep_ids else None))

    snap(t0)
    times = sample_times(t0, t1, sample_dt)
    for i, ts in enumerate(times):
        start = t0 if i == 0 else times[i - 1]
        _run_interval(c, p, start, ts, marks, traj, on_event)
        snap(ts)
    last = times[-1] if times else t0
    _run_interval(c, p, last, t1, marks, traj, on_event)
    c.now = t1
    return traj, c


def _run_interval(c, p, a, b, marks, traj, on_event):
    events = traj.events
    for e in rain_between(p.seed, a, b, p.lam, p.slab_len, c.window):
        tr = apply_arrival(c, e, marks)
        if events is not None:
            events.append(EventRecord(e.t, e.id, tr.accepted, tr.killed))
        if on_event is not None:
            on_event(e, tr)
    c.now = max(c.now, b)


# ---------------------------------------------------------------------------
# Slab construction by backward investigation


@dataclass
class DependencyGraph:
    """Rain of one slab with edges from each event to earlier events within 2."""

    window: Window
    t0: float
    t1: float
    events: List[ArrivalEvent]
    earlier: List[List[int]]
    labels: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if len(self.events) else 0

    @property
    def component_sizes(self) -> np.ndarray:
        if not len(self.events):
            return np.zeros(0, dtype=int)
        return np.bincount(self.labels)

    @property
    def max_component_size(self) -> int:
        sizes = self.component_sizes
        return int(sizes.max()) if sizes.size else 0

    def n_edges(self) -> int:
        return sum(len(v) for v in self.earlier)


def build_dependency_graph(p: SimParams, t0: float, eps: float) -> DependencyGraph:
    if not eps > 0:
        raise ContractError("slab length must be positive")
    w = p.window
    events = rain_between(p.seed, t0, t0 + eps, p.lam, p.slab_len, w)
    return graph_from_events(w, t0, t0 + eps, events)


def graph_from_events(w: Window, t0: float, t1: float, events: Sequence[ArrivalEvent]) -> DependencyGraph:
    """Dependency graph over explicit arrivals in ``[t0, t1)``."""
    events = sorted(events)
    if any(not (t0 <= e.t < t1) for e in events):
        raise ContractError("event outside the slab interval")
    n = len(events)
    earlier: List[List[int]] = [[] for _ in range(n)]
    if n >= 2:
        pos = np.array([e.x for e in events], dtype=float)
        tree = cKDTree(pos, boxsize=w.side if w.torus else None)
        pairs = np.array(sorted(tree.query_pairs(2.0)), dtype=int).reshape(-1, 2)
        for a, b in pairs.tolist():
            # events are time sorted, so a < b means a is earlier
            earlier[b].append(a)
        rows, cols = pairs[:, 0], pairs[:, 1]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
    else:
        labels = np.zeros(n, dtype=int)
    return DependencyGraph(w, t0, t1, events, earlier, np.asarray(labels))


def resolve_slab(init: Configuration, g: DependencyGraph, marks: MarkFn) -> Configuration:
    """Configuration at the end of the slab, computed by backward investigation.

    A point ``q`` is alive at ``s`` iff it was born and no later arrival
    within distance 1 before ``s`` drew mark 1 against it. An event is born
    iff every point alive within distance 1 at its arrival drew mark 1. Birth
    status is resolved recursively through the event's earlier neighbours.
    """
    if init.now != g.t0:
        raise ContractError(f"configuration time {init.now} does not match slab start {g.t0}")
    if init.window != g.window:
        raise ContractError("window mismatch")
    w = g.window
    L, torus = w.side, w.torus
    events = g.events
    n = len(events)

    init_nbrs = [init.index.neighbors(e.x, 1.0) for e in events]
    ev_nbrs = [[a for a in g.earlier[b] if _dist(events[a].x, events[b].x, L, torus) <= 1.0]
               for b in range(n)]
    # later arrivals within 1 of each point, in time order
    killers_init: Dict[EventId, List[int]] = {}
    for b, qs in enumerate(init_nbrs):
        for q in qs:
            killers_init.setdefault(q, []).append(b)
    killers_ev: List[List[int]] = [[] for _ in range(n)]
    for b in range(n):
        for a in ev_nbrs[b]:
            killers_ev[a].append(b)
    for lst in killers_ev:
        lst.sort()

    def survives(qid: EventId, killers: List[int], upto: int) -> bool:
        for b in killers:
            if b >= upto:
                break
            if marks(events[b].id, qid):
                return False
        return True

    born: Dict[int, bool] = {}

    def decide(b: int) -> bool:
        eid = events[b].id
        for q in init_nbrs[b]:
            if survives(q, killers_init[q], b) and not marks(eid, q):
                return False
        for a in ev_nbrs[b]:
            if born[a] and survives(events[a].id, killers_ev[a], b) and not marks(eid, events[a].id):
                return False
        return True

    def investigate(b: int) -> bool:
        stack = [b]
        while stack:
            top = stack[-1]
            if top in born:
                stack.pop()
                continue
            pending = [a for a in ev_nbrs[top] if a not in born]
            if pending:
                stack.extend(pending)
                continue
            born[top] = decide(top)
            stack.pop()
        return born[b]

    out = Configuration(w, g.t1)
    for q, x in init.points.items():
        if q not in killers_init or survives(q, killers_init[q], n):
            out.add(q, x, init.birth[q])
    for b in range(n):
        if investigate(b) and survives(events[b].id, killers_ev[b], n):
            out.add(events[b].id, events[b].x, events[b].t)
    return out


# ---------------------------------------------------------------------------
# Initial conditions

INITIAL_KINDS = ("empty", "matern1", "matern2", "saturated_rsa")
_KIND_TAG = {"empty": 0, "matern1": 1, "matern2": 2, "saturated_rsa": 3}


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def _poisson_proposals(rng, w: Window, lam_prop: float) -> np.ndarray:
    n = rng.poisson(lam_prop * w.volume)
    pts = rng.uniform(0.0, w.side, size=(n, w.d))
    return np.minimum(pts, np.nextafter(w.side, 0.0))


def _close_pairs(pts: np.ndarray, w: Window, r: float = 1.0) -> np.ndarray:
    if len(pts) < 2:
        return np.zeros((0, 2), dtype=int)
    tree = cKDTree(pts, boxsize=w.side if w.torus else None)
    return tree.query_pairs(r, output_type="ndarray")


def matern1(rng, w: Window, lam_prop: float) -> np.ndarray:
    pts = _poisson_proposals(rng, w, lam_prop)
    pairs = _close_pairs(pts, w)
    keep = np.ones(len(pts), dtype=bool)
    keep[pairs.ravel()] = False
    return pts[keep]


def matern2(rng, w: Window, lam_prop: float) -> np.ndarray:
    pts = _poisson_proposals(rng, w, lam_prop)
    ages = rng.uniform(size=len(pts))
    pairs = _close_pairs(pts, w)
    keep = np.ones(len(pts), dtype=bool)
    if len(pairs):
        a, b = pairs[:, 0], pairs[:, 1]
        keep[np.where(ages[a] > ages[b], a, b)] = False
    return pts[keep]


def generate_initial(kind: str, lam_prop: float, p: SimParams, tag: Optional[int] = None,
                     rsa_grid: float = 0.05, rsa_warmup: float = 2.0) -> Configuration:
    """Hard-core initial configuration at time 0.

    ``matern1`` deletes every proposal with a neighbour within 1; ``matern2``
    keeps a proposal iff its uniform mark is the smallest within distance 1;
    ``saturated_rsa`` runs pure-birth dynamics then fills every remaining
    admissible site (exactly in 1-d, on a ``rsa_grid`` candidate lattice
    otherwise).
    """
    if kind not in INITIAL_KINDS:
        raise ContractError(f"unknown initial condition {kind!r}")
    w = p.window
    tag = _KIND_TAG[kind] if tag is None else tag
    if kind == "empty":
        return Configuration(w, 0.0)
    if not lam_prop > 0:
        raise ContractError("proposal intensity must be positive")
    rng = _rng(p.seed, tag, _KIND_TAG[kind])
    if kind == "matern1":
        pts = matern1(rng, w, lam_prop)
    elif kind == "matern2":
        pts = matern2(rng, w, lam_prop)
    else:
        pts = saturated_rsa(p, rng, grid=rsa_grid, warmup=rsa_warmup).positions()
    order = np.lexsort(pts.T[::-1]) if len(pts) else np.zeros(0, dtype=int)
    return Configuration.from_points(w, (tuple(x) for x in pts[order]), tag=tag)


def _admissible(c: Configuration, x: Coord) -> bool:
    return not c.index.neighbors(x, 1.0)


def saturated_rsa(p: SimParams, rng: np.random.Generator, grid: float = 0.05, warmup: float = 2.0) -> Configuration:
    """Jammed random sequential adsorption configuration.

    Pure-birth dynamics run for ``warmup`` time units on an independent rain
    stream; afterwards arrivals are drawn only from the admissible region,
    which leaves the law of the final packing unchanged.
    """
    sub = p.with_(rho=0.0, seed=int(rng.integers(0, 1 << 63)))
    _, c = simulate(sub, Configuration(p.window, 0.0), 0.0, warmup)
    fill_tag = 1 << 20
    counter = [0]

    def put(x):
        c.add(EventId.initial(counter[0], fill_tag), x, c.now)
        counter[0] += 1

    w = p.window
    if w.d == 1:
        _fill_1d(c, w, rng, put)
    else:
        _fill_grid(c, w, rng, put, grid)
    return c


def _fill_1d(c, w, rng, put):
    xs = sorted(x[0] for x in c.points.values())
    L = w.side
    gaps = []
    if not xs:
        if w.torus:
            x0 = rng.uniform() * L
            put((min(x0, math.nextafter(L, 0.0)),))
            gaps.append((x0 + 1.0, x0 + L - 1.0, False))
        else:
            gaps.append((0.0, L, True))
    else:
        for a, b in zip(xs, xs[1:]):
            gaps.append((a + 1.0, b - 1.0, False))
        if w.torus:
            gaps.append((xs[-1] + 1.0, xs[0] + L - 1.0, False))
        else:
            gaps.append((0.0, xs[0] - 1.0, True))
            gaps.append((xs[-1] + 1.0, L, True))
    # each open interval of admissible centres fills independently
    stack = [(lo, hi) for lo, hi, _ in gaps if hi > lo]
    while stack:
        lo, hi = stack.pop()
        x = lo + rng.uniform() * (hi - lo)
        if not (lo < x < hi):
            continue
        y = x % L if w.torus else min(x, math.nextafter(L, 0.0))
        if not _admissible(c, (y,)):
            continue
        put((y,))
        if x - 1.0 > lo:
            stack.append((lo, x - 1.0))
        if hi > x + 1.0:
            stack.append((x + 1.0, hi))


def _fill_grid(c, w, rng, put, h):
    n = max(1, int(math.ceil(w.side / h)))
    h = w.side / n
    axes = [np.arange(n) * h + 0.5 * h] * w.d
    cand = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, w.d)
    while True:
        pos = c.positions()
        if len(pos):
            tree = cKDTree(pos, boxsize=w.side if w.torus else None)
            dist, _ = tree.query(cand, k=1, distance_upper_bound=1.0 + h)
            cand = cand[dist > 1.0]
        if not len(cand):
            return
        added = 0
        for i in rng.permutation(len(cand)):
            x = cand[i] + rng.uniform(-0.5 * h, 0.5 * h, size=w.d)
            x = tuple(w.canonical(np.clip(x, 0.0, np.nextafter(w.side, 0.0))))
            if _admissible(c, x):
                put(x)
                added += 1
        if not added:
            # remaining candidates admissible only at their exact grid site
            for x in cand:
                x = tuple(float(v) for v in x)
                if _admissible(c, x):
                    put(x)
            return
