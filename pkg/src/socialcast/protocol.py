"""Three-phase dissemination protocol driven in discrete time slots.

Node lifecycle is inactive -> eager -> active.  Each slot: eager nodes without
an assigned transmitter request the file from an active node found through the
social network (preferring geographically close ones when a distance threshold
is set); active nodes balance requesters across balanced binary schedule trees
so nobody ever serves more than six receivers; open streams then push bits
through the highway grid at a 1/6 round-robin duty cycle.

The simulator is event-driven internally (it jumps over slots in which nothing
can change) but is slot-exact: per-node completion times match a direct
slot-by-slot execution of the same rules.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .geometry import Placement, distances_from
from .routing import HighwayGrid, build_grid, staircase_route
from .socialgraph import SocialGraph, bfs_distances, bfs_neighborhood, giant_component

# Completion slack: a receiver is done once it is within EPS bits of the full
# file.  Absorbs float accumulation drift so slot counts are reproducible
# across the event-driven and the slot-by-slot reference execution.
EPS = 1e-9

STATUS_INACTIVE = 0
STATUS_EAGER = 1
STATUS_ACTIVE = 2


def default_L(n: int, epsilon_prime: float, sigma: float, l_scale: float = 1.0) -> float:
    """Distance threshold 8*sqrt(n^(1-eps')*log(n)/(sigma*pi)), times a calibration scale."""
    return l_scale * 8.0 * math.sqrt(n ** (1.0 - epsilon_prime) * math.log(n) / (sigma * math.pi))


@dataclass(frozen=True)
class AlgorithmParams:
    """Protocol inputs: search depth control, distance threshold, diameter, file size."""

    epsilon: float
    L: float  # math.inf disables the geographic filter
    D: int
    F: float
    epsilon_prime: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must be in [0, 0.5], got {self.epsilon}")
        if self.F <= 0:
            raise ValueError("file length must be positive")
        if self.L <= 0:
            raise ValueError("distance threshold must be positive")

    @property
    def search_depth(self) -> int:
        """Social search radius in hops: floor(2*eps*D + 1), at least 1."""
        return max(1, int(2.0 * self.epsilon * self.D + 1.0))

    @property
    def s_request_radius(self) -> float:
        """Fallback requests are allowed when hop distance to the source is below this."""
        return self.epsilon * self.D + 1.0


def tree_parent_position(k: int) -> int | None:
    """Position of entry k's parent in the same tree; None means the tree owner."""
    if k < 2:
        return None
    return k // 2 - 1


def tree_entry_depth(k: int) -> int:
    """Depth of entry k below the owner (owner's direct children have depth 1)."""
    return int(math.log2(k / 2 + 1)) + 1


class ScheduleTree:
    """Balanced binary tree an active node builds over its requesters, in arrival order."""

    def __init__(self, owner: int):
        self.owner = owner
        self.entries: list[int] = []

    def add(self, requester: int) -> int:
        """Append a requester; returns its assigned parent node."""
        k = len(self.entries)
        pos = tree_parent_position(k)
        parent = self.owner if pos is None else self.entries[pos]
        self.entries.append(requester)
        return parent

    @property
    def depth(self) -> int:
        if not self.entries:
            return 0
        return tree_entry_depth(len(self.entries) - 1)


@dataclass
class RunResult:
    """Everything one simulation run produces, serializable to JSON/CSV."""

    n: int
    source: int
    mode: str
    seed: int
    F: float
    kappa: float
    giant_size: int
    T: int
    completed: bool
    stranded: bool
    slots_run: int
    max_fanout: int
    max_tree_depth: int
    l_transfers: int
    s_transfers: int
    max_cell_load: int
    completion_time: np.ndarray  # -1 where never active
    eager_time: np.ndarray
    parent: np.ndarray
    kind: list[str]
    transfer_distance: np.ndarray
    lower_bound: dict | None = None

    def summary_dict(self) -> dict:
        d = {
            "n": self.n,
            "source": self.source,
            "mode": self.mode,
            "seed": self.seed,
            "F": self.F,
            "kappa": self.kappa,
            "giant_size": self.giant_size,
            "T": self.T,
            "completed": self.completed,
            "stranded": self.stranded,
            "slots_run": self.slots_run,
            "max_fanout": self.max_fanout,
            "max_tree_depth": self.max_tree_depth,
            "l_transfers": self.l_transfers,
            "s_transfers": self.s_transfers,
            "max_cell_load": self.max_cell_load,
        }
        if self.lower_bound is not None:
            d["lower_bound"] = self.lower_bound
        return d

    def to_json(self, path: str) -> None:
        doc = self.summary_dict()
        doc["completion_time"] = self.completion_time.tolist()
        with open(path, "w") as f:
            json.dump(doc, f, sort_keys=True, indent=None, separators=(",", ":"))
            f.write("\n")

    def to_csv(self, path: str) -> None:
        with open(path, "w") as f:
            f.write("id,became_eager,became_active,parent,kind,distance\n")
            for i in range(self.n):
                f.write(
                    f"{i},{self.eager_time[i]},{self.completion_time[i]},"
                    f"{self.parent[i]},{self.kind[i]},{self.transfer_distance[i]:.6g}\n"
                )


def wan_baseline(n_receivers: int, F: float, wan_rate: float) -> float:
    """Linear-scaling reference: every receiver downloads the whole file over the WAN."""
    if wan_rate <= 0:
        raise ValueError("wan_rate must be positive")
    return n_receivers * F / wan_rate


class _FlowEngine:
    """Vectorized bookkeeping of open streams over the highway grid.

    One flow per receiver, keyed by the receiver's node id.  Rates follow the
    grid's equal-sharing rule (kappa over the bottleneck cell count); the 1/6
    round-robin duty cycle is applied here as a fixed multiplier.
    """

    def __init__(self, grid: HighwayGrid, n: int, F: float):
        self.grid = grid
        self.nc = grid.ncells
        self.kappa = grid.kappa
        self.F = F
        self.counts = np.zeros(self.nc * self.nc, dtype=np.int32)
        self.peak = np.zeros(self.nc * self.nc, dtype=np.int32)
        self.rem = np.zeros(n)
        self.eff = np.zeros(n)  # bits per slot after the 1/6 duty cycle
        self.rate = np.zeros(n)
        self.alive = np.zeros(n, dtype=bool)
        self.route_of: dict[int, np.ndarray] = {}
        # Segment structure for vectorized per-flow bottleneck maxima.  New
        # segments are buffered and merged once per rate recompute; dead
        # segments are compacted away when they dominate.
        self._flat = np.empty(0, dtype=np.int64)
        self._fid_list: list[int] = []
        self._new_parts: list[np.ndarray] = []
        self._new_fids: list[int] = []
        self._ptr_arr = np.zeros(1, dtype=np.int64)
        self._fid_arr = np.empty(0, dtype=np.int64)
        self._live_cells = 0
        self.num_alive = 0

    def open(self, rx: int, cells: np.ndarray) -> None:
        self.counts[cells] += 1
        self.peak[cells] = np.maximum(self.peak[cells], self.counts[cells])
        self.route_of[rx] = cells
        self.rem[rx] = self.F
        self.alive[rx] = True
        self.num_alive += 1
        self._new_parts.append(cells)
        self._new_fids.append(rx)
        self._live_cells += len(cells)

    def close(self, rx: int) -> None:
        cells = self.route_of[rx]
        self.counts[cells] -= 1
        self.alive[rx] = False
        self.num_alive -= 1
        self._live_cells -= len(cells)

    def _merge_new(self) -> None:
        if self._new_parts:
            self._flat = np.concatenate([self._flat] + self._new_parts)
            self._fid_list.extend(self._new_fids)
            self._new_parts = []
            self._new_fids = []
            self._rebuild_ptrs()

    def _rebuild_ptrs(self) -> None:
        lens = [0] + [len(self.route_of[fid]) for fid in self._fid_list]
        self._ptr_arr = np.cumsum(np.array(lens, dtype=np.int64))
        self._fid_arr = np.array(self._fid_list, dtype=np.int64)

    def _compact(self) -> None:
        self._fid_list = [fid for fid in self._fid_list if self.alive[fid]]
        parts = [self.route_of[fid] for fid in self._fid_list]
        self._flat = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        self._rebuild_ptrs()

    def recompute_rates(self) -> None:
        if len(self._flat) > 2 * max(self._live_cells - sum(len(p) for p in self._new_parts), 1):
            self._compact()
        self._merge_new()
        if len(self._fid_arr) == 0:
            return
        gather = self.counts[self._flat]
        maxes = np.maximum.reduceat(gather, self._ptr_arr[:-1])
        # Dead segments may have drained to 0; clamp so their unused slots stay finite.
        rates = self.kappa / np.maximum(maxes, 1)
        self.rate[self._fid_arr] = rates
        self.eff[self._fid_arr] = rates / 6.0

    def min_slots(self) -> int:
        rem = self.rem[self.alive]
        eff = self.eff[self.alive]
        d = np.ceil((rem - EPS) / eff)
        return max(1, int(d.min()))

    def accrue(self, delta: int) -> np.ndarray:
        """Advance delta slots; returns receivers that finished, ascending."""
        self.rem[self.alive] -= delta * self.eff[self.alive]
        done = np.flatnonzero(self.alive & (self.rem <= EPS))
        return done


def run(
    graph: SocialGraph,
    placement: Placement,
    params: AlgorithmParams,
    source: int,
    slot_limit: int,
    kappa: float = 1.0,
    cell_side: float = 4.0,
    seed: int = 0,
    mode: str = "",
    giant: np.ndarray | None = None,
    grid_out: list | None = None,
) -> RunResult:
    """Simulate dissemination from `source` until the giant component is done.

    Deterministic given (graph, placement, params, source, seed).  Hitting
    slot_limit or reaching a frozen state with eager nodes left is reported via
    the `completed`/`stranded` flags, never raised.
    """
    if not math.isfinite(slot_limit) or slot_limit <= 0:
        raise ValueError("slot_limit must be a positive finite integer")
    n = graph.n
    if graph.degree(source) == 0:
        raise ValueError(f"source {source} has no social neighbors")
    if giant is None:
        giant = giant_component(graph)
    in_giant = np.zeros(n, dtype=bool)
    in_giant[giant] = True
    if not in_giant[source]:
        raise ValueError(f"source {source} is not in the giant component")

    rng = random.Random(seed)
    grid = build_grid(placement, kappa=kappa, cell_side=cell_side)
    if grid_out is not None:
        grid_out.append(grid)
    engine = _FlowEngine(grid, n, params.F)

    status = np.zeros(n, dtype=np.int8)
    active = np.zeros(n, dtype=bool)
    parent = np.full(n, -1, dtype=np.int64)
    kind = [""] * n
    streaming = np.zeros(n, dtype=bool)
    waiting = np.zeros(n, dtype=bool)
    eager_time = np.full(n, -1, dtype=np.int64)
    active_time = np.full(n, -1, dtype=np.int64)
    transfer_distance = np.full(n, -1.0)
    fanout = np.zeros(n, dtype=np.int64)
    pending: dict[int, list[int]] = {}
    trees: dict[tuple[int, str], ScheduleTree] = {}

    depth = params.search_depth
    L = params.L
    finite_L = math.isfinite(L)
    dist_src = bfs_distances(graph, source)
    s_radius = params.s_request_radius
    coords = placement.coords

    nbhd_cache: dict[int, np.ndarray] = {}

    def nbhd(x: int) -> np.ndarray:
        if depth == 1:
            return graph.adj(x)
        cached = nbhd_cache.get(x)
        if cached is None:
            shells = bfs_neighborhood(graph, x, depth)
            cached = np.sort(np.concatenate(shells[1:])) if len(shells) > 1 else np.empty(0, dtype=np.int64)
            nbhd_cache[x] = cached
        return cached

    max_fanout = 0
    max_tree_depth = 0
    l_transfers = 0
    s_transfers = 0

    def schedule(y: int, x: int, k: str) -> None:
        nonlocal max_tree_depth
        if parent[x] >= 0:
            raise ValueError(f"node {x} already holds an assignment")
        tree = trees.get((y, k))
        if tree is None:
            tree = trees[(y, k)] = ScheduleTree(y)
        p = tree.add(x)
        max_tree_depth = max(max_tree_depth, tree.depth)
        parent[x] = p
        kind[x] = k
        if active[p]:
            to_open.append(x)
        else:
            pending.setdefault(p, []).append(x)

    def attempt(x: int) -> None:
        nb = nbhd(x)
        if nb.size:
            cand = nb[active[nb]]
        else:
            cand = nb
        if finite_L and cand.size:
            d = distances_from(placement, x, cand)
            cand = cand[d <= L]
        if cand.size:
            y = int(cand[rng.randrange(cand.size)])
            schedule(y, x, "L")
            return
        if dist_src[x] >= 0 and dist_src[x] < s_radius:
            one = graph.adj(x)
            oa = one[active[one]]
            if oa.size:
                y = int(oa[rng.randrange(oa.size)])
                schedule(y, x, "S")
                return
        waiting[x] = True

    def open_flow(x: int) -> None:
        nonlocal max_fanout, l_transfers, s_transfers
        tx = int(parent[x])
        cells = np.array(
            [r * grid.ncells + c for r, c in staircase_route(grid, placement, tx, x)],
            dtype=np.int64,
        )
        engine.open(x, cells)
        streaming[x] = True
        fanout[tx] += 1
        if fanout[tx] > max_fanout:
            max_fanout = int(fanout[tx])
        d = math.hypot(*(coords[tx] - coords[x]))
        transfer_distance[x] = d
        if kind[x] == "L":
            l_transfers += 1
        else:
            s_transfers += 1

    # Initial state: source active, its social neighbors eager.
    status[source] = STATUS_ACTIVE
    active[source] = True
    active_time[source] = 0
    remaining_giant = int(in_giant.sum()) - 1
    dirty: list[int] = []
    for z in graph.adj(source):
        z = int(z)
        status[z] = STATUS_EAGER
        eager_time[z] = 0
        dirty.append(z)
    dirty.sort()
    to_open: list[int] = []

    t = 0
    stranded = False
    while remaining_giant > 0 and t < slot_limit:
        for x in dirty:
            if status[x] == STATUS_EAGER and parent[x] < 0:
                waiting[x] = False
                attempt(x)
        dirty = []
        if to_open:
            to_open.sort()
            for x in to_open:
                if not streaming[x] and status[x] == STATUS_EAGER:
                    open_flow(x)
            to_open = []
        if engine.num_alive == 0:
            stranded = True
            break
        engine.recompute_rates()
        delta = min(engine.min_slots(), slot_limit - t)
        done = engine.accrue(delta)
        t += delta
        newly_eager: set[int] = set()
        woken: set[int] = set()
        for x in done.tolist():
            engine.close(x)
            streaming[x] = False
            fanout[parent[x]] -= 1
            status[x] = STATUS_ACTIVE
            active[x] = True
            active_time[x] = t
            if in_giant[x]:
                remaining_giant -= 1
            for z in graph.adj(x):
                z = int(z)
                if status[z] == STATUS_INACTIVE:
                    status[z] = STATUS_EAGER
                    eager_time[z] = t
                    newly_eager.add(z)
            nb = nbhd(x)
            if nb.size:
                w = nb[waiting[nb]]
                if finite_L and w.size:
                    d = distances_from(placement, x, w)
                    w = w[d <= L]
                for z in w.tolist():
                    woken.add(int(z))
            for z in pending.pop(x, []):
                to_open.append(z)
        dirty = sorted(newly_eager | woken)

    completed = remaining_giant == 0
    T = int(active_time[giant].max()) if completed else t
    if not completed and engine.num_alive == 0:
        stranded = True

    return RunResult(
        n=n,
        source=source,
        mode=mode,
        seed=seed,
        F=params.F,
        kappa=kappa,
        giant_size=int(in_giant.sum()),
        T=T,
        completed=completed,
        stranded=stranded,
        slots_run=t,
        max_fanout=max_fanout,
        max_tree_depth=max_tree_depth,
        l_transfers=l_transfers,
        s_transfers=s_transfers,
        max_cell_load=int(engine.peak.max()),
        completion_time=active_time,
        eager_time=eager_time,
        parent=parent,
        kind=kind,
        transfer_distance=transfer_distance,
    )
