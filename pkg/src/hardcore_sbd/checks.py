"""Invariant and property checks shared by the ``check`` command and the test suite."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .bounds import theorem_threshold, theorem_value, theorem_value_mp
from .coupling import simulate_coupled
from .dynamics import (Configuration, apply_arrival, build_dependency_graph, generate_initial, resolve_slab,
                       simulate)
from .params import SimParams
from .randomness import EventId, ArrivalEvent, MarkOracle

DEFAULT_SIDES = {1: 400.0, 2: 20.0, 3: 8.0}


@dataclass
class CheckResult:
    name: str
    passed: bool
    seconds: float
    detail: Dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return asdict(self)


class _Mirror:
    """Array copy of a live point set; checks each birth against every live point."""

    def __init__(self, c: Configuration):
        self.w = c.window
        self.slot: Dict[EventId, int] = {}
        self.pos = np.zeros((max(64, 2 * len(c)), self.w.d))
        self.live = np.zeros(len(self.pos), dtype=bool)
        self.free: List[int] = []
        self.violations = 0
        self.births = 0
        for pid, x in c.points.items():
            self._put(pid, x)

    def _put(self, pid, x):
        if self.free:
            i = self.free.pop()
        else:
            i = len(self.slot) + len(self.free)
            if i >= len(self.pos):
                self.pos = np.vstack([self.pos, np.zeros_like(self.pos)])
                self.live = np.concatenate([self.live, np.zeros(len(self.live), dtype=bool)])
        self.slot[pid] = i
        self.pos[i] = x
        self.live[i] = True

    def on_event(self, e: ArrivalEvent, tr):
        for q in tr.killed:
            i = self.slot.pop(q)
            self.live[i] = False
            self.free.append(i)
        if tr.accepted:
            self.births += 1
            idx = np.nonzero(self.live)[0]
            if len(idx):
                diff = np.abs(self.pos[idx] - np.asarray(e.x))
                if self.w.torus:
                    diff = np.minimum(diff, self.w.side - diff)
                if np.any((diff ** 2).sum(1) <= 1.0):
                    self.violations += 1
            self._put(e.id, e.x)


def check_hard_core(dims: Sequence[int] = (1, 2, 3), rhos: Sequence[float] = (0.0, 0.3, 0.75, 1.0),
                    events: int = 1_000_000, seed: int = 0) -> CheckResult:
    """Every birth is checked against all live points by brute force; the final
    configurations are re-checked with a full pair scan."""
    t0 = time.perf_counter()
    per_run = events / (len(dims) * len(rhos))
    total = violations = final_bad = 0
    runs = []
    for d in dims:
        L = DEFAULT_SIDES[d]
        for rho in rhos:
            p = SimParams(d=d, L=L, rho=rho, seed=seed)
            T = math.ceil(per_run / p.window.volume)
            init = Configuration(p.window)
            mirror = _Mirror(init)
            n = [0]

            def on_event(e, tr, mirror=mirror):
                n[0] += 1
                mirror.on_event(e, tr)

            _, final = simulate(p, init, 0.0, T, on_event=on_event)
            bad_final = len(final.hard_core_violations())
            total += n[0]
            violations += mirror.violations
            final_bad += bad_final
            runs.append({"d": d, "rho": rho, "T": T, "events": n[0], "births": mirror.births,
                         "final_points": len(final), "violations": mirror.violations + bad_final})
    return CheckResult("hard-core invariant", violations == 0 and final_bad == 0 and total >= events,
                       time.perf_counter() - t0, {"events": total, "violations": violations + final_bad,
                                                  "runs": runs})


def _frozen_neighbourhood(k: int, d: int, L: float) -> List[tuple]:
    """``k`` points at distance 0.9 from the window centre, pairwise more than 1 apart."""
    c = L / 2
    if d == 1:
        if k > 2:
            raise ValueError("at most two frozen neighbours fit in one dimension")
        return [(c - 0.9,), (c + 0.9,)][:k]
    pts = []
    for j in range(k):
        a = 2 * math.pi * j / max(k, 1)
        x = [c + 0.9 * math.cos(a), c + 0.9 * math.sin(a)] + [c] * (d - 2)
        pts.append(tuple(x))
    return pts


def check_generator_law(rhos: Sequence[float] = (0.3, 0.6), ks: Sequence[int] = (0, 1, 2, 3, 4),
                        trials: int = 100_000, d: int = 2, seed: int = 0) -> CheckResult:
    """Acceptance frequency ``rho**k`` and per-neighbour death frequency ``rho``.

    Each trial rebuilds the frozen neighbourhood and applies one arrival at
    its centre with a fresh event id, so every pair mark is new.
    """
    t0 = time.perf_counter()
    L = 20.0
    rows = []
    ok = True
    w = SimParams(d=d, L=L).window
    centre = (L / 2,) * d
    for rho in rhos:
        marks = MarkOracle(seed, rho)
        for k in ks:
            nbrs = _frozen_neighbourhood(k, d, L)
            accepted = deaths = 0
            for i in range(trials):
                c = Configuration.from_points(w, nbrs)
                tr = apply_arrival(c, ArrivalEvent(0.0, EventId.rain(k, (0, 0, 0), i), centre), marks)
                accepted += tr.accepted
                deaths += len(tr.killed)
            pa = rho ** k
            se_a = math.sqrt(pa * (1 - pa) / trials)
            freq = accepted / trials
            acc_ok = abs(freq - pa) <= 3 * se_a if se_a > 0 else freq == pa
            row = {"rho": rho, "k": k, "acceptance": freq, "expected": pa, "se": se_a, "ok": acc_ok}
            if k:
                n = trials * k
                se_d = math.sqrt(rho * (1 - rho) / n)
                dfreq = deaths / n
                row.update(death=dfreq, death_se=se_d, death_ok=abs(dfreq - rho) <= 3 * se_d)
                acc_ok = acc_ok and row["death_ok"]
            ok = ok and acc_ok
            rows.append(row)
    return CheckResult("generator law", ok, time.perf_counter() - t0, {"rows": rows})


def slab_case(seed: int, d: int = 2, L: float = 20.0, rho: float = 0.5, eps: float = 0.1,
              warmup: float = 2.0):
    """Forward and backward-investigation results for one slab after a warm-up."""
    p = SimParams(d=d, L=L, rho=rho, seed=seed)
    _, init = simulate(p, Configuration(p.window), 0.0, warmup)
    g = build_dependency_graph(p, warmup, eps)
    backward = resolve_slab(init, g, MarkOracle(p.seed, p.rho))
    _, forward = simulate(p, init, warmup, warmup + eps)
    return forward, backward, g


def check_slab_equivalence(n_seeds: int = 100, d: int = 2, L: float = 20.0, rho: float = 0.5,
                           eps: float = 0.1) -> CheckResult:
    t0 = time.perf_counter()
    mismatches = []
    sizes = []
    for seed in range(n_seeds):
        fwd, bwd, g = slab_case(seed, d, L, rho, eps)
        sizes.append(g.max_component_size)
        if not fwd.same_points(bwd):
            mismatches.append(seed)
    return CheckResult("backward investigation == forward", not mismatches, time.perf_counter() - t0,
                       {"seeds": n_seeds, "mismatches": mismatches, "mean_max_component": float(np.mean(sizes))})


def check_marginal_consistency(n_seeds: int = 20, n_times: int = 50, d: int = 2, L: float = 20.0,
                               rho: float = 0.75, T: float = 5.0) -> CheckResult:
    t0 = time.perf_counter()
    dt = T / n_times
    mismatches = 0
    compared = 0
    for seed in range(n_seeds):
        p = SimParams(d=d, L=L, rho=rho, seed=seed)
        init1 = Configuration(p.window)
        init2 = generate_initial("matern2", 1.0, p)
        series, _ = simulate_coupled(p, init1, init2, T, dt, keep_ids=True)
        for init, ids in ((init1, series.ids1), (init2, series.ids2)):
            traj, _ = simulate(p, init, 0.0, T, sample_dt=dt, keep_ids=True)
            solo = [s.ids for s in traj.snapshots]
            compared += len(solo) - 1
            mismatches += sum(a != b for a, b in zip(solo[1:], ids[1:])) + (len(solo) != len(ids))
    return CheckResult("coupling marginal consistency", mismatches == 0, time.perf_counter() - t0,
                       {"seeds": n_seeds, "sample_times": n_times, "comparisons": compared,
                        "mismatches": mismatches})


def check_theorem_table(rhos: Sequence[float] = (0.1, 0.3, 0.5, 0.6, 0.9), dims: Sequence[int] = (1, 2, 3),
                        digits: int = 12) -> CheckResult:
    t0 = time.perf_counter()
    rows = []
    ok = True
    for d in dims:
        for rho in rhos:
            a = theorem_value(rho, d)
            b = float(theorem_value_mp(rho, d))
            agree = abs(a - b) <= 10.0 ** (-digits) * max(1.0, abs(b)) and (a < 0) == (b < 0)
            ok = ok and agree
            rows.append({"d": d, "rho": rho, "float": a, "mp": b, "satisfied": a < 0, "agree": agree})
    thr = theorem_threshold(2, tol=1e-9)
    bracket = (theorem_value(thr - 1e-6, 2) > 0) and (theorem_value(thr, 2) < 0)
    return CheckResult("theorem condition table", ok and bracket, time.perf_counter() - t0,
                       {"rows": rows, "threshold_d2": thr, "threshold_bracketed": bracket})


def check_determinism(seed: int = 3) -> CheckResult:
    t0 = time.perf_counter()
    p = SimParams(d=2, L=20.0, rho=0.6, seed=seed)
    logs = []
    for _ in range(2):
        traj, c = simulate(p, generate_initial("matern2", 1.0, p), 0.0, 3.0, log_events=True)
        logs.append((traj.events, sorted(c.points.items())))
    return CheckResult("determinism", logs[0] == logs[1], time.perf_counter() - t0,
                       {"events": len(logs[0][0])})


def run_all(scale: float = 1.0, seed: int = 0) -> List[CheckResult]:
    """The full suite; ``scale`` shrinks sample sizes for smoke runs."""
    n = lambda v, lo=1: max(lo, int(round(v * scale)))  # noqa: E731
    return [
        check_hard_core(events=n(1_000_000, 1000), seed=seed),
        check_generator_law(trials=n(100_000, 100), seed=seed),
        check_slab_equivalence(n_seeds=n(100, 2)),
        check_marginal_consistency(n_seeds=n(20, 1)),
        check_theorem_table(),
        check_determinism(seed=seed + 3),
    ]
