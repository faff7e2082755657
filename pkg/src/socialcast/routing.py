"""Transmission substrate: an idealized highway cell grid plus a full-SINR oracle.

The grid abstracts the multi-hop highway routing substrate down to the three
properties the analysis actually uses: constant per-hop rate kappa, near
straight (here: exactly staircase) routes, and equal rate sharing at loaded
relays.  A flow's rate is kappa divided by the heaviest flow count among the
cells on its route.

The SINR backend replays the same demands under the full interference model at
small n and serves as a cross-validation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as chan
from .channel import ChannelParams
from .geometry import Placement


@dataclass
class FlowPlan:
    flow_id: int
    tx: int
    rx: int
    route: list[tuple[int, int]]  # (row, col) cells, staircase order
    kind: str  # "L" or "S"
    rate: float = 0.0


@dataclass
class HighwayGrid:
    side: float
    cell_side: float
    ncells: int  # cells per axis
    kappa: float
    flow_counts: np.ndarray = field(init=False)  # int32 (ncells, ncells)
    peak_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.flow_counts = np.zeros((self.ncells, self.ncells), dtype=np.int32)
        self.peak_counts = np.zeros((self.ncells, self.ncells), dtype=np.int32)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        r = min(int(y / self.cell_side), self.ncells - 1)
        c = min(int(x / self.cell_side), self.ncells - 1)
        return r, c


def build_grid(placement: Placement, kappa: float = 1.0, cell_side: float = 4.0) -> HighwayGrid:
    """Empty lattice of ceil(side/cell_side)^2 cells over the placement square."""
    if cell_side < 1.0:
        raise ValueError(f"cell_side must be >= 1, got {cell_side}")
    ncells = max(1, math.ceil(placement.side / cell_side))
    return HighwayGrid(side=placement.side, cell_side=cell_side, ncells=ncells, kappa=kappa)


def staircase_route(grid: HighwayGrid, placement: Placement, tx: int, rx: int) -> list[tuple[int, int]]:
    """Horizontal run from tx's cell to rx's column, then vertical run to rx's cell."""
    r0, c0 = grid.cell_of(*placement.coords[tx])
    r1, c1 = grid.cell_of(*placement.coords[rx])
    step_c = 1 if c1 >= c0 else -1
    route = [(r0, c) for c in range(c0, c1 + step_c, step_c)]
    step_r = 1 if r1 >= r0 else -1
    route.extend((r, c1) for r in range(r0 + step_r, r1 + step_r, step_r))
    return route


def register_flow(
    grid: HighwayGrid, placement: Placement, tx: int, rx: int, kind: str, flow_id: int = 0
) -> FlowPlan:
    """Route the flow through the grid and bump the count of every cell it crosses."""
    if tx == rx:
        raise ValueError("flow endpoints must differ")
    route = staircase_route(grid, placement, tx, rx)
    for r, c in route:
        grid.flow_counts[r, c] += 1
        if grid.flow_counts[r, c] > grid.peak_counts[r, c]:
            grid.peak_counts[r, c] = grid.flow_counts[r, c]
    return FlowPlan(flow_id=flow_id, tx=tx, rx=rx, route=route, kind=kind)


def deregister_flow(grid: HighwayGrid, flow: FlowPlan) -> None:
    for r, c in flow.route:
        grid.flow_counts[r, c] -= 1


def assign_rates(grid: HighwayGrid, flows: list[FlowPlan]) -> list[FlowPlan]:
    """Equal-sharing rates: kappa over the max flow count along each route."""
    for f in flows:
        bottleneck = max(grid.flow_counts[r, c] for r, c in f.route)
        f.rate = grid.kappa / bottleneck
    return flows


def heatmap_csv(grid: HighwayGrid, path: str, peak: bool = False) -> None:
    """Per-cell load snapshot as `row,col,flow_count` rows."""
    counts = grid.peak_counts if peak else grid.flow_counts
    with open(path, "w") as f:
        f.write("row,col,flow_count\n")
        for r in range(grid.ncells):
            for c in range(grid.ncells):
                f.write(f"{r},{c},{counts[r, c]}\n")


def sinr_backend_step(
    params: ChannelParams,
    placement: Placement,
    demands: list[tuple[int, int]],
    kappa_min: float = 0.5,
) -> dict[tuple[int, int], float]:
    """One slot of the full-SINR oracle: greedy spatial-reuse admission.

    Starting from the first demand, repeatedly admit the demand whose
    transmitter is farthest from all admitted transmitters, as long as every
    admitted flow (including the newcomer) still has SINR rate >= kappa_min.
    Returns bits delivered per admitted demand this slot.
    """
    if placement.n > 512:
        raise ValueError("SINR backend is an oracle for n <= 512")
    nodes = set()
    for tx, rx in demands:
        if tx == rx:
            raise ValueError("demand endpoints must differ")
        if tx in nodes or rx in nodes:
            raise ValueError("demands must be node-disjoint (half-duplex)")
        nodes.update((tx, rx))
    if not demands:
        return {}

    def rates(admitted: list[tuple[int, int]]) -> list[float]:
        active = [tx for tx, _ in admitted]
        return [chan.sinr_rate(params, placement, tx, rx, active) for tx, rx in admitted]

    admitted = [demands[0]]
    remaining = list(demands[1:])
    while remaining:
        atx = np.array([placement.coords[tx] for tx, _ in admitted])

        def sep(dem: tuple[int, int]) -> float:
            d = atx - placement.coords[dem[0]]
            return float(np.min(np.hypot(d[:, 0], d[:, 1])))

        best = max(range(len(remaining)), key=lambda k: (sep(remaining[k]), -k))
        trial = admitted + [remaining[best]]
        if min(rates(trial)) >= kappa_min:
            admitted = trial
            remaining.pop(best)
        else:
            break
    return {dem: r for dem, r in zip(admitted, rates(admitted))}
