"""Random graphs from expected degree sequences (Chung-Lu) and their statistics.

Edge {i, j} is present independently with probability min(1, w_i*w_j / sum(w)).
Power-law sequences follow the closed-form recipe: w_i = c * (i0 + i)^(-1/(beta-1))
with c and i0 chosen so the mean weight is dbar and the top weight is about M.

The production sampler runs in O(n + |E|) expected time by skip-sampling over
the index-sorted weights; an all-pairs Bernoulli sampler is kept as a small-n
cross-validation oracle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PowerLawParams:
    beta: float
    dbar: float
    M: float
    m: float  # realized minimum weight w_n


@dataclass(frozen=True)
class DegreeSequence:
    """Expected degrees w_1..w_n; admissible when max(w)^2 <= sum(w)."""

    weights: np.ndarray
    params: PowerLawParams | None = None

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def vol(self) -> float:
        return float(np.sum(self.weights))

    def check_admissible(self) -> None:
        vol = self.vol
        sq = self.weights ** 2
        worst = int(np.argmax(sq))
        if sq[worst] > vol:
            raise ValueError(
                f"inadmissible degree sequence: w[{worst}]^2 = {sq[worst]:.6g} "
                f"> vol = {vol:.6g}"
            )


def powerlaw_weights(n: int, beta: float, dbar: float, M: float) -> DegreeSequence:
    """Power-law expected degree sequence with exponent beta, mean dbar, top weight ~M."""
    if beta <= 2:
        raise ValueError(f"beta must exceed 2, got {beta}")
    if dbar <= 0 or M <= 0:
        raise ValueError("dbar and M must be positive")
    c = (beta - 2) / (beta - 1) * dbar * n ** (1 / (beta - 1))
    i0 = n * (dbar * (beta - 2) / (M * (beta - 1))) ** (beta - 1)
    i = np.arange(1, n + 1, dtype=np.float64)
    w = c * (i0 + i) ** (-1 / (beta - 1))
    seq = DegreeSequence(
        weights=w, params=PowerLawParams(beta=beta, dbar=dbar, M=M, m=float(w[-1]))
    )
    seq.check_admissible()
    return seq


@dataclass
class SocialGraph:
    """Undirected simple graph in CSR form; neighbor lists are index-sorted."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    degseq: DegreeSequence
    seed: int

    def adj(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def edge_list(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for j in self.adj(i):
                if i < j:
                    out.append((i, int(j)))
        return out


@dataclass(frozen=True)
class GraphStats:
    vol: float
    vol2: float
    vol3: float
    dtilde: float
    giant_size: int
    diameter_est: int


def _csr_from_pairs(n: int, pairs: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    if pairs:
        a = np.array(pairs, dtype=np.int64)
        src = np.concatenate([a[:, 0], a[:, 1]])
        dst = np.concatenate([a[:, 1], a[:, 0]])
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.astype(np.int32)


def generate(degseq: DegreeSequence, seed: int) -> SocialGraph:
    """Sample a graph from the sequence by geometric skip-sampling (O(n + |E|) expected).

    Requires the weights to be non-increasing in index (true for the power-law
    recipe); general sequences are handled by sorting behind an index map.
    """
    degseq.check_admissible()
    w = degseq.weights
    n = len(w)
    if np.any(np.diff(w) > 0):
        order = np.argsort(-w, kind="stable")
        ws = w[order]
        pairs = _skip_sample_pairs(ws, seed)
        # order[k] is the original index of the k-th largest weight.
        pairs = [(min(order[a], order[b]), max(order[a], order[b])) for a, b in pairs]
    else:
        pairs = _skip_sample_pairs(w, seed)
    indptr, indices = _csr_from_pairs(n, pairs)
    return SocialGraph(n=n, indptr=indptr, indices=indices, degseq=degseq, seed=seed)


def _skip_sample_pairs(w: np.ndarray, seed: int) -> list[tuple[int, int]]:
    # Miller-Hagberg sampler: for each i walk j upward taking geometric skips at
    # the current probability bound, then thin to the exact pair probability.
    n = len(w)
    vol = float(np.sum(w))
    rng = random.Random(seed)
    pairs: list[tuple[int, int]] = []
    wl = w.tolist()
    for i in range(n - 1):
        j = i + 1
        p = min(wl[i] * wl[j] / vol, 1.0)
        while j < n and p > 0:
            if p < 1.0:
                r = rng.random()
                j += int(math.log(r) / math.log1p(-p))
            if j < n:
                q = min(wl[i] * wl[j] / vol, 1.0)
                if rng.random() < q / p:
                    pairs.append((i, j))
                p = q
                j += 1
    return pairs


def generate_allpairs(degseq: DegreeSequence, seed: int) -> SocialGraph:
    """All-pairs Bernoulli sampler; Theta(n^2), used only as a small-n oracle."""
    degseq.check_admissible()
    w = degseq.weights
    n = len(w)
    vol = float(np.sum(w))
    rng = np.random.default_rng(seed)
    prob = np.minimum(np.outer(w, w) / vol, 1.0)
    u = rng.random((n, n))
    iu = np.triu_indices(n, k=1)
    mask = u[iu] < prob[iu]
    pairs = list(zip(iu[0][mask].tolist(), iu[1][mask].tolist()))
    indptr, indices = _csr_from_pairs(n, pairs)
    return SocialGraph(n=n, indptr=indptr, indices=indices, degseq=degseq, seed=seed)


def bfs_neighborhood(g: SocialGraph, root: int, depth: int) -> list[np.ndarray]:
    """Per-hop shells S_0..S_depth from root; shells are disjoint sorted arrays."""
    if not 0 <= root < g.n:
        raise IndexError(f"root {root} out of range")
    seen = np.zeros(g.n, dtype=bool)
    seen[root] = True
    shells = [np.array([root], dtype=np.int64)]
    frontier = shells[0]
    for _ in range(depth):
        if frontier.size == 0:
            shells.append(np.empty(0, dtype=np.int64))
            continue
        cand = np.concatenate([g.adj(i) for i in frontier])
        cand = np.unique(cand)
        nxt = cand[~seen[cand]]
        seen[nxt] = True
        shells.append(nxt.astype(np.int64))
        frontier = nxt
    return shells


def bfs_distances(g: SocialGraph, root: int) -> np.ndarray:
    """Hop distance from root to every node; -1 where unreachable."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[root] = 0
    frontier = np.array([root], dtype=np.int64)
    d = 0
    while frontier.size:
        d += 1
        cand = np.unique(np.concatenate([g.adj(i) for i in frontier]))
        nxt = cand[dist[cand] < 0]
        dist[nxt] = d
        frontier = nxt
    return dist


def giant_component(g: SocialGraph) -> np.ndarray:
    """Sorted node indices of the largest component (ties: smallest contained index)."""
    comp = np.full(g.n, -1, dtype=np.int64)
    best: np.ndarray | None = None
    cid = 0
    for start in range(g.n):
        if comp[start] >= 0:
            continue
        members = [start]
        comp[start] = cid
        frontier = np.array([start], dtype=np.int64)
        while frontier.size:
            cand = np.unique(np.concatenate([g.adj(i) for i in frontier])) if frontier.size else frontier
            nxt = cand[comp[cand] < 0] if cand.size else cand
            comp[nxt] = cid
            members.extend(nxt.tolist())
            frontier = nxt
        if best is None or len(members) > best.size:
            best = np.sort(np.array(members, dtype=np.int64))
        cid += 1
    assert best is not None
    return best


def diameter_estimate(g: SocialGraph, component: np.ndarray, sweeps: int = 16, seed: int = 0) -> int:
    """Upper estimate of the component diameter via repeated double sweeps.

    Each sweep BFSes from a random component node, then from the farthest node
    found; the estimate is the max eccentricity observed, so it is never below
    the true eccentricity of any swept source.
    """
    comp = np.asarray(component, dtype=np.int64)
    if comp.size == 0:
        raise ValueError("empty component")
    in_comp = np.zeros(g.n, dtype=bool)
    in_comp[comp] = True
    dist0 = bfs_distances(g, int(comp[0]))
    if np.any(dist0[comp] < 0):
        raise ValueError("component is not connected")
    rng = random.Random(seed)
    best = 0
    for _ in range(sweeps):
        s = int(comp[rng.randrange(comp.size)])
        d1 = bfs_distances(g, s)
        ecc1 = int(d1[comp].max())
        far = int(comp[int(np.argmax(d1[comp]))])
        d2 = bfs_distances(g, far)
        ecc2 = int(d2[comp].max())
        best = max(best, ecc1, ecc2)
    return best


def stats(g: SocialGraph, sweeps: int = 16, seed: int = 0) -> GraphStats:
    """Volume statistics from the expected weights plus giant-component figures."""
    w = g.degseq.weights
    vol = float(np.sum(w))
    vol2 = float(np.sum(w ** 2))
    vol3 = float(np.sum(w ** 3))
    giant = giant_component(g)
    diam = diameter_estimate(g, giant, sweeps=sweeps, seed=seed)
    return GraphStats(
        vol=vol, vol2=vol2, vol3=vol3, dtilde=vol2 / vol,
        giant_size=int(giant.size), diameter_est=diam,
    )


def neighborhood_growth_profile(g: SocialGraph, root: int, depth: int) -> np.ndarray:
    """vol(S_i) of each BFS shell around root, i = 0..depth."""
    shells = bfs_neighborhood(g, root, depth)
    w = g.degseq.weights
    return np.array([float(np.sum(w[s])) if s.size else 0.0 for s in shells])


def save_graph(g: SocialGraph, path: str) -> None:
    """Edge-list text format: header `n,seed,beta,dbar,M,m`, then `i,j` with i<j,
    then a `weights` marker followed by `index,weight` rows."""
    p = g.degseq.params
    hdr = (
        f"{g.n},{g.seed},{p.beta!r},{p.dbar!r},{p.M!r},{p.m!r}"
        if p is not None
        else f"{g.n},{g.seed},,,,"
    )
    with open(path, "w") as f:
        f.write(hdr + "\n")
        for i, j in g.edge_list():
            f.write(f"{i},{j}\n")
        f.write("weights\n")
        for i, wi in enumerate(g.degseq.weights):
            f.write(f"{i},{wi:.17g}\n")


def load_graph(path: str) -> SocialGraph:
    with open(path) as f:
        hdr = f.readline().strip().split(",")
        n, seed = int(hdr[0]), int(hdr[1])
        params = None
        if hdr[2]:
            params = PowerLawParams(
                beta=float(hdr[2]), dbar=float(hdr[3]), M=float(hdr[4]), m=float(hdr[5])
            )
        pairs = []
        weights = np.empty(n)
        in_weights = False
        for line in f:
            line = line.strip()
            if line == "weights":
                in_weights = True
                continue
            a, b = line.split(",")
            if in_weights:
                weights[int(a)] = float(b)
            else:
                pairs.append((int(a), int(b)))
    degseq = DegreeSequence(weights=weights, params=params)
    indptr, indices = _csr_from_pairs(n, pairs)
    return SocialGraph(n=n, indptr=indptr, indices=indices, degseq=degseq, seed=seed)
