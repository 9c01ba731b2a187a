"""Spatial layouts: 2D toroidal grid (Von Neumann, radius 1) and ring of radius r."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Grid:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid needs rows, cols >= 1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def coords(self, cell: int) -> tuple[int, int]:
        return divmod(_check_cell(self, cell), self.cols)

    def index(self, row: int, col: int) -> int:
        return (row % self.rows) * self.cols + (col % self.cols)


@dataclass(frozen=True)
class Ring:
    size: int
    radius: int = 1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"ring needs Z >= 1, got {self.size}")
        if self.radius < 1:
            raise ValueError(f"ring radius must be >= 1, got {self.radius}")
        # r = 1 is allowed on tiny rings (Z <= 2); aliased neighbours are deduplicated
        if self.radius > 1 and 2 * self.radius + 1 > self.size:
            raise ValueError(
                f"ring radius {self.radius} too large for Z={self.size}: "
                f"need r <= floor((Z-1)/2) = {(self.size - 1) // 2}"
            )


Topology = Grid | Ring


def _check_cell(t: Topology, cell: int) -> int:
    if not 0 <= cell < t.size:
        raise ValueError(f"cell {cell} out of range for population of {t.size}")
    return cell


def subpopulation_size(t: Topology) -> int:
    """Nominal sub-population size s: 5 on the grid, 2r+1 on the ring."""
    if isinstance(t, Grid):
        return 5
    return 2 * t.radius + 1


def neighbors(t: Topology, cell: int) -> list[int]:
    """Neighborhood of ``cell``, center first.

    Grid order is [self, N, S, W, E]; ring order is [self, -1, +1, -2, +2, ...].
    Aliased cells on tiny layouts appear once.
    """
    _check_cell(t, cell)
    if isinstance(t, Grid):
        row, col = t.coords(cell)
        raw = [cell, t.index(row - 1, col), t.index(row + 1, col),
               t.index(row, col - 1), t.index(row, col + 1)]
    else:
        raw = [cell]
        for k in range(1, t.radius + 1):
            raw += [(cell - k) % t.size, (cell + k) % t.size]
    return list(dict.fromkeys(raw))


def effective_subpopulation_size(t: Topology) -> int:
    return len(neighbors(t, 0))


def propagation_hops(t: Topology, src: int, dst: int) -> int:
    """Generations needed for a center update at ``src`` to reach ``dst``."""
    _check_cell(t, src)
    _check_cell(t, dst)
    if isinstance(t, Grid):
        (r0, c0), (r1, c1) = t.coords(src), t.coords(dst)
        dr, dc = abs(r0 - r1), abs(c0 - c1)
        return min(dr, t.rows - dr) + min(dc, t.cols - dc)
    delta = abs(src - dst)
    return math.ceil(min(delta, t.size - delta) / t.radius)


def takeover_time(t: Topology, origin: int = 0) -> int:
    return max(propagation_hops(t, origin, c) for c in range(t.size))


def describe(t: Topology) -> str:
    if isinstance(t, Grid):
        return f"grid{t.rows}x{t.cols}"
    return f"ring{t.size}r{t.radius}"
