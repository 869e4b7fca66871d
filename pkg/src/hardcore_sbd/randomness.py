"""Counter-based random field.

Every random quantity is a pure function of ``(seed, structural key)``: a
keyed BLAKE2b digest of the key is turned into uniforms. Nothing depends on
generation order, so the rain on any slab is the same whether it is produced
for a run starting at ``-T`` or at ``-2T``.
"""
from __future__ import annotations

import hashlib
import math
import struct
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple

from scipy.stats import poisson

from .geometry import ContractError, Window

KIND_INITIAL = 0
KIND_RAIN = 1

_U53 = 1.0 / (1 << 53)
_ID = struct.Struct(">Bqqqqq")
_SLAB_CELL = struct.Struct(">qqqqq")
_BLOCK = struct.Struct(">Q")
_WORDS = struct.Struct(">8Q")


class EventId(NamedTuple):
    """Stable identity of a point.

    Rain events use ``(KIND_RAIN, slab, c0, c1, c2, ordinal)``. Initial points
    use ``(KIND_INITIAL, tag, 0, 0, 0, ordinal)`` where ``tag`` separates
    independently generated initial conditions. Tuple order is the total
    order used for tie-breaking.
    """

    kind: int
    slab: int
    c0: int
    c1: int
    c2: int
    ordinal: int

    @classmethod
    def rain(cls, slab: int, cell: Sequence[int], ordinal: int) -> "EventId":
        c = tuple(cell) + (0,) * (3 - len(cell))
        return cls(KIND_RAIN, slab, c[0], c[1], c[2], ordinal)

    @classmethod
    def initial(cls, ordinal: int, tag: int = 0) -> "EventId":
        return cls(KIND_INITIAL, tag, 0, 0, 0, ordinal)

    @property
    def cell(self) -> Tuple[int, int, int]:
        return (self.c0, self.c1, self.c2)

    def label(self) -> str:
        if self.kind == KIND_RAIN:
            return f"r{self.slab}:{self.c0}.{self.c1}.{self.c2}:{self.ordinal}"
        return f"i{self.slab}:{self.ordinal}"

    @classmethod
    def parse(cls, s: str) -> "EventId":
        if s.startswith("r"):
            slab, cell, ordinal = s[1:].split(":")
            c = [int(v) for v in cell.split(".")]
            return cls(KIND_RAIN, int(slab), c[0], c[1], c[2], int(ordinal))
        if s.startswith("i"):
            tag, ordinal = s[1:].split(":")
            return cls.initial(int(ordinal), int(tag))
        raise ValueError(f"malformed point id {s!r}")


class ArrivalEvent(NamedTuple):
    """A space-time point of the Poisson rain. Sorts by ``(t, id)``."""

    t: float
    id: EventId
    x: Tuple[float, ...]


def _key(seed: int) -> bytes:
    if not 0 <= seed < 1 << 64:
        raise ContractError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed.to_bytes(8, "big")


def uniform_stream(seed: int, domain: bytes, counter: bytes, n: int) -> List[float]:
    """``n`` uniforms on [0, 1) determined by ``(seed, domain, counter)``."""
    key = _key(seed)
    out: List[float] = []
    block = 0
    while len(out) < n:
        h = hashlib.blake2b(counter + _BLOCK.pack(block), key=key, person=domain, digest_size=64)
        out.extend((w >> 11) * _U53 for w in _WORDS.unpack(h.digest()))
        block += 1
    return out[:n]


def _poisson_inverse(u: float, mean: float) -> int:
    if mean <= 0.0:
        return 0
    if mean > 30.0:
        return int(poisson.ppf(u, mean))
    p = math.exp(-mean)
    cdf = p
    k = 0
    while u >= cdf and k < 1000:
        k += 1
        p *= mean / k
        cdf += p
    return k


def rain(seed: int, slab: int, cell: Sequence[int], lam: float, slab_len: float, w: Window) -> List[ArrivalEvent]:
    """Poisson rain of intensity ``lam`` inside one (time slab, grid cell) box.

    Slab ``k`` covers ``[k * slab_len, (k + 1) * slab_len)``; cells are those
    of ``w``. Events come back sorted by time.
    """
    if not lam > 0 or not slab_len > 0:
        raise ContractError("lam and slab_len must be positive")
    d = w.d
    c = tuple(cell) + (0,) * (3 - len(cell))
    counter = _SLAB_CELL.pack(slab, *c, d)
    u = uniform_stream(seed, b"rain", counter, 8)
    count = _poisson_inverse(u[0], lam * slab_len * w.cell_volume)
    if count == 0:
        return []
    need = 1 + count * (d + 1)
    if need > len(u):
        u = uniform_stream(seed, b"rain", counter, need)
    h = w.cell_size
    L = w.side
    events = []
    for j in range(count):
        base = 1 + j * (d + 1)
        t = (slab + u[base]) * slab_len
        if t >= (slab + 1) * slab_len:
            t = math.nextafter((slab + 1) * slab_len, -math.inf)
        x = tuple(min((cell[i] + u[base + 1 + i]) * h, math.nextafter(L, 0.0)) for i in range(d))
        events.append(ArrivalEvent(t, EventId.rain(slab, cell, j), x))
    events.sort()
    return events


@lru_cache(maxsize=256)
def slab_rain(seed: int, slab: int, lam: float, slab_len: float, w: Window) -> Tuple[ArrivalEvent, ...]:
    """All rain of one time slab over the whole window, sorted by ``(t, id)``."""
    events: List[ArrivalEvent] = []
    for cell in w.all_cells():
        events.extend(rain(seed, slab, cell, lam, slab_len, w))
    events.sort()
    return tuple(events)


def rain_between(seed: int, t0: float, t1: float, lam: float, slab_len: float, w: Window) -> List[ArrivalEvent]:
    """Rain events with ``t0 <= t < t1`` in time order."""
    if t1 <= t0:
        return []
    k0 = math.floor(t0 / slab_len)
    k1 = math.ceil(t1 / slab_len)
    out: List[ArrivalEvent] = []
    for k in range(k0, k1):
        evs = slab_rain(seed, k, lam, slab_len, w)
        if (k * slab_len) >= t0 and (k + 1) * slab_len <= t1:
            out.extend(evs)
        else:
            out.extend(e for e in evs if t0 <= e.t < t1)
    return out


def pair_uniform(seed: int, a: EventId, b: EventId) -> float:
    if a == b:
        raise ContractError("pair mark needs two distinct points")
    if b < a:
        a, b = b, a
    h = hashlib.blake2b(_ID.pack(*a) + _ID.pack(*b), key=_key(seed), person=b"mark", digest_size=8)
    return (int.from_bytes(h.digest(), "big") >> 11) * _U53


def pair_mark(seed: int, a: EventId, b: EventId, rho: float) -> int:
    """Bernoulli(``rho``) mark shared by the unordered pair ``{a, b}``.

    1 means the later arrival kills the earlier point; 0 means the earlier
    point survives and blocks the arrival.
    """
    if not 0.0 <= rho <= 1.0:
        raise ContractError(f"rho must lie in [0, 1], got {rho}")
    return 1 if pair_uniform(seed, a, b) < rho else 0


class MarkOracle:
    """Callable ``(a, b) -> bit`` bound to a seed and ``rho``."""

    def __init__(self, seed: int, rho: float):
        if not 0.0 <= rho <= 1.0:
            raise ContractError(f"rho must lie in [0, 1], got {rho}")
        self.seed = seed
        self.rho = rho
        self._key = _key(seed)

    def __call__(self, a: EventId, b: EventId) -> int:
        rho = self.rho
        if rho == 0.0:
            if a == b:
                raise ContractError("pair mark needs two distinct points")
            return 0
        if rho == 1.0:
            if a == b:
                raise ContractError("pair mark needs two distinct points")
            return 1
        if b < a:
            a, b = b, a
        elif a == b:
            raise ContractError("pair mark needs two distinct points")
        h = hashlib.blake2b(_ID.pack(*a) + _ID.pack(*b), key=self._key, person=b"mark", digest_size=8)
        return 1 if (int.from_bytes(h.digest(), "big") >> 11) * _U53 < rho else 0
