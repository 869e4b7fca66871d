"""Torus / box geometry and a cell-list index for radius <= 1.5 queries."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Hashable, Iterable, List, Sequence, Tuple

MAX_QUERY_RADIUS = 1.5

_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
_KISSING_NUMBER = {1: 2, 2: 6, 3: 12}

Coord = Tuple[float, ...]


class ContractError(ValueError):
    """Raised when a caller violates a documented precondition."""


class UnsupportedRadiusError(ContractError):
    pass


@dataclass(frozen=True)
class Window:
    """Observation domain: a ``d``-dimensional torus or free box of side ``side``."""

    d: int
    side: float
    boundary: str = "torus"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ContractError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.boundary not in ("torus", "free"):
            raise ContractError(f"boundary must be 'torus' or 'free', got {self.boundary!r}")
        if self.boundary == "torus" and not self.side >= 4:
            raise ContractError(f"torus side must be >= 4, got {self.side}")
        if not self.side >= 1:
            raise ContractError(f"side must be >= 1, got {self.side}")

    @property
    def torus(self) -> bool:
        return self.boundary == "torus"

    @property
    def volume(self) -> float:
        return float(self.side) ** self.d

    @cached_property
    def ncell(self) -> int:
        """Cells per axis; cells have side ``side / ncell`` which is >= 1."""
        return max(1, int(math.floor(self.side)))

    @cached_property
    def cell_size(self) -> float:
        return self.side / self.ncell

    @cached_property
    def cell_volume(self) -> float:
        return self.cell_size ** self.d

    def cell_of(self, x: Sequence[float]) -> Tuple[int, ...]:
        n1 = self.ncell - 1
        h = self.cell_size
        out = []
        for xi in x:
            k = int(xi // h)
            out.append(k if k < n1 else n1)
        return tuple(out)

    def all_cells(self) -> Iterable[Tuple[int, ...]]:
        return itertools.product(range(self.ncell), repeat=self.d)

    def canonical(self, x: Sequence[float]) -> Coord:
        """Map coordinates into ``[0, side)`` (wrap on the torus, clamp on a box)."""
        L = self.side
        out = []
        for xi in x:
            xi = float(xi)
            if self.torus:
                xi = xi % L
                if xi >= L:  # -tiny % L can round up to L
                    xi = 0.0
            elif not 0.0 <= xi < L:
                raise ContractError(f"coordinate {xi} outside free box [0, {L})")
            out.append(xi)
        return tuple(out)

    def contains(self, x: Sequence[float]) -> bool:
        return len(x) == self.d and all(0.0 <= xi < self.side for xi in x)


def _dist(x: Sequence[float], y: Sequence[float], L: float, torus: bool) -> float:
    s = 0.0
    if torus:
        half = 0.5 * L
        for a, b in zip(x, y):
            dx = abs(a - b)
            if dx > half:
                dx = L - dx
            s += dx * dx
    else:
        for a, b in zip(x, y):
            dx = a - b
            s += dx * dx
    return math.sqrt(s)


def torus_distance(x: Sequence[float], y: Sequence[float], w: Window) -> float:
    """Distance between ``x`` and ``y``: minimum over periodic images on a torus,
    plain Euclidean on a free box."""
    if len(x) != w.d or len(y) != w.d:
        raise ContractError(f"expected {w.d}-dimensional points, got {len(x)} and {len(y)}")
    return _dist(x, y, w.side, w.torus)


def unit_ball_volume(d: int) -> float:
    try:
        return _UNIT_BALL_VOLUME[d]
    except KeyError:
        raise ContractError(f"unsupported dimension {d}") from None


def kissing_number(d: int) -> int:
    try:
        return _KISSING_NUMBER[d]
    except KeyError:
        raise ContractError(f"unsupported dimension {d}") from None


def ball_volume(d: int, r: float) -> float:
    return unit_ball_volume(d) * r ** d


class GridIndex:
    """Cell list with cell side >= 1 over a :class:`Window`.

    Holds point coordinates as well as the cell buckets, so it can answer
    closed-ball queries on its own.
    """

    def __init__(self, window: Window):
        self.window = window
        self.cells: Dict[Tuple[int, ...], List[Hashable]] = {}
        self.coords: Dict[Hashable, Coord] = {}
        self._offsets = {
            1: list(itertools.product((-1, 0, 1), repeat=window.d)),
            2: list(itertools.product((-2, -1, 0, 1, 2), repeat=window.d)),
        }
        self._nbr_cache: Dict[Tuple[Tuple[int, ...], int], Tuple[Tuple[int, ...], ...]] = {}

    def __len__(self) -> int:
        return len(self.coords)

    def __contains__(self, pid) -> bool:
        return pid in self.coords

    @property
    def cell_size(self) -> float:
        return self.window.cell_size

    def insert(self, pid: Hashable, x: Coord) -> None:
        if pid in self.coords:
            raise ContractError(f"point {pid!r} already indexed")
        self.coords[pid] = x
        cell = self.window.cell_of(x)
        bucket = self.cells.get(cell)
        if bucket is None:
            self.cells[cell] = [pid]
        else:
            bucket.append(pid)

    def remove(self, pid: Hashable) -> Coord:
        x = self.coords.pop(pid)
        cell = self.window.cell_of(x)
        bucket = self.cells[cell]
        bucket.remove(pid)
        if not bucket:
            del self.cells[cell]
        return x

    def copy(self) -> "GridIndex":
        new = GridIndex.__new__(GridIndex)
        new.window = self.window
        new.cells = {k: list(v) for k, v in self.cells.items()}
        new.coords = dict(self.coords)
        new._offsets = self._offsets
        new._nbr_cache = self._nbr_cache
        return new

    def _neighbor_cells(self, cell: Tuple[int, ...], reach: int) -> Tuple[Tuple[int, ...], ...]:
        key = (cell, reach)
        found = self._nbr_cache.get(key)
        if found is not None:
            return found
        n = self.window.ncell
        out = set()
        for off in self._offsets[reach]:
            c = tuple(ci + oi for ci, oi in zip(cell, off))
            if self.window.torus:
                c = tuple(ci % n for ci in c)
            elif any(ci < 0 or ci >= n for ci in c):
                continue
            out.add(c)
        found = tuple(sorted(out))
        self._nbr_cache[key] = found
        return found

    def neighbors(self, center: Coord, r: float = 1.0) -> List[Hashable]:
        """Ids at distance <= ``r`` from ``center`` (unsorted)."""
        if r > MAX_QUERY_RADIUS:
            raise UnsupportedRadiusError(f"radius {r} exceeds {MAX_QUERY_RADIUS}")
        w = self.window
        reach = 1 if r <= w.cell_size else 2
        L = w.side
        torus = w.torus
        coords = self.coords
        cells = self.cells
        out = []
        for c in self._neighbor_cells(w.cell_of(center), reach):
            bucket = cells.get(c)
            if bucket:
                for pid in bucket:
                    if _dist(center, coords[pid], L, torus) <= r:
                        out.append(pid)
        return out


def ball_neighbors(index: GridIndex, center: Sequence[float], r: float, w: Window | None = None) -> List[Hashable]:
    """Ids of indexed points within closed distance ``r`` of ``center``, ascending."""
    if w is not None and w != index.window:
        raise ContractError("window does not match the index")
    if len(center) != index.window.d:
        raise ContractError("center has wrong dimension")
    return sorted(index.neighbors(tuple(center), r))
