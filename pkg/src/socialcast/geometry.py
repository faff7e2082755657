"""Node placement on the wireless square and Euclidean distance queries.

n nodes are placed independently and uniformly on a square of width sqrt(n),
so the expected density is 1 node per unit area.  Everything downstream
(channel attenuation, routing cells, the distance filter of the protocol)
works off these coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Placement:
    """Immutable placement of n nodes on the [0, side]^2 square, side = sqrt(n)."""

    n: int
    side: float
    seed: int
    coords: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        if self.coords.shape != (self.n, 2):
            raise ValueError(f"coords shape {self.coords.shape} != ({self.n}, 2)")


def place_uniform(n: int, seed: int) -> Placement:
    """Place n nodes i.i.d. uniform on the sqrt(n)-width square, deterministically per seed."""
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    side = math.sqrt(n)
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, side, size=(n, 2))
    return Placement(n=n, side=side, seed=seed, coords=coords)


def distance(p: Placement, i: int, j: int) -> float:
    """Euclidean distance between nodes i and j."""
    if not (0 <= i < p.n and 0 <= j < p.n):
        raise IndexError(f"node index out of range: i={i}, j={j}, n={p.n}")
    dx = p.coords[i, 0] - p.coords[j, 0]
    dy = p.coords[i, 1] - p.coords[j, 1]
    return math.hypot(dx, dy)


def distances_from(p: Placement, i: int, others: np.ndarray) -> np.ndarray:
    """Euclidean distances from node i to each node in `others` (vectorized)."""
    d = p.coords[others] - p.coords[i]
    return np.hypot(d[:, 0], d[:, 1])


def count_in_rectangle(p: Placement, rect: tuple[float, float, float, float]) -> int:
    """Number of nodes inside the axis-aligned rectangle (x0, y0, x1, y1).

    Boundaries are closed: a node exactly on an edge counts as inside.
    """
    x0, y0, x1, y1 = rect
    if x1 < x0 or y1 < y0:
        raise ValueError(f"degenerate rectangle {rect}")
    x = p.coords[:, 0]
    y = p.coords[:, 1]
    inside = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
    return int(np.count_nonzero(inside))


def nearest_within(
    p: Placement, i: int, candidates: np.ndarray, radius: float
) -> int | None:
    """Closest candidate to node i if within `radius`, else None.

    Ties are broken by smallest node index so replays are deterministic.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        return None
    cand = np.sort(cand)
    d = distances_from(p, i, cand)
    k = int(np.argmin(d))  # argmin returns the first (smallest-index) minimum
    if d[k] <= radius:
        return int(cand[k])
    return None


def save_placement(p: Placement, path: str) -> None:
    """Write the placement as CSV: header `n,side,seed`, then `index,x,y` rows."""
    with open(path, "w") as f:
        f.write(f"{p.n},{p.side!r},{p.seed}\n")
        for i in range(p.n):
            f.write(f"{i},{p.coords[i, 0]:.17g},{p.coords[i, 1]:.17g}\n")


def load_placement(path: str) -> Placement:
    with open(path) as f:
        header = f.readline().strip().split(",")
        n, side, seed = int(header[0]), float(header[1]), int(header[2])
        coords = np.empty((n, 2))
        for line in f:
            idx, x, y = line.strip().split(",")
            coords[int(idx)] = (float(x), float(y))
    return Placement(n=n, side=side, seed=seed, coords=coords)
