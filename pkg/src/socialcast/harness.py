"""Experiment orchestration: sweeps over n and seeds, fits, and plot data export.

A run is fully determined by its config (including the seed base): graph and
placement seeds are derived per (n, seed) cell with a seed sequence, so
repeating a config reproduces every output byte.
"""

from __future__ import annotations

import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geometry, lowerbound, protocol, routing, socialgraph
from .channel import ChannelParams
from .geometry import place_uniform
from .protocol import AlgorithmParams, RunResult, default_L, wan_baseline
from .socialgraph import (
    DegreeSequence,
    diameter_estimate,
    generate,
    giant_component,
    powerlaw_weights,
)

MODES = ("lb", "geography", "wan-baseline", "lower-bound")

_INT_KEYS = {"seeds", "seed_base", "slot_limit", "hop_budget", "workers"}
_FLOAT_KEYS = {
    "beta", "dbar", "K", "M", "P", "N0", "gamma", "alpha", "epsilon",
    "epsilon_prime", "sigma", "l_scale", "F", "kappa", "cell_side",
    "wan_rate", "close_eta",
}
_STR_KEYS = {"mode", "outdir"}


def parse_config(text: str, **overrides) -> "ExperimentConfig":
    """Build a config from flat `key = value` lines (# comments allowed).

    n_list is comma-separated; dbar/K/M/sigma/slot_limit/hop_budget accept
    "none"; L accepts "auto", "inf", or a number.  Keyword overrides win.
    """
    kv: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key == "n_list":
            kv[key] = tuple(int(tok) for tok in val.split(","))
        elif key == "L":
            kv[key] = val if val in ("auto", "inf") else float(val)
        elif key in _INT_KEYS:
            kv[key] = None if val.lower() == "none" else int(val)
        elif key in _FLOAT_KEYS:
            kv[key] = None if val.lower() == "none" else float(val)
        elif key in _STR_KEYS:
            kv[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    kv.update(overrides)
    return ExperimentConfig(**kv)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "lb"
    n_list: tuple[int, ...] = (256, 512, 1024)
    seeds: int = 3
    seed_base: int = 0
    # social graph
    beta: float = 3.5
    dbar: float | None = 20.0  # fixed mean degree, or None to derive from K
    K: float | None = None  # minimum expected degree m = K log n
    M: float | None = None  # None: M = sqrt(dbar * n) / 2
    # channel
    P: float = 1.0
    N0: float = 1.0
    gamma: float = 0.0
    alpha: float = 3.0
    # algorithm
    epsilon: float = 0.0
    epsilon_prime: float = 0.0
    sigma: float | None = None  # None: calibrate at the smallest n
    l_scale: float = 1.0
    L: float | str = "auto"  # "auto" | "inf" | numeric
    F: float = 1.0
    kappa: float = 1.0
    cell_side: float = 4.0
    slot_limit: int | None = None  # None: generous size-dependent default
    wan_rate: float = 1.0
    hop_budget: int | None = None  # None: 2 for lb, 4 eps log_dt(n) + 2 otherwise
    close_eta: float = 0.1
    workers: int = 1
    outdir: str = "results"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError("n_list must be strictly increasing")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.dbar is None and self.K is None:
            raise ValueError("one of dbar or K must be set")

    def graph_params(self, n: int) -> tuple[float, float]:
        """(dbar, M) for instance size n."""
        dbar = self.K * math.log(n) * (self.beta - 1) / (self.beta - 2) if self.K is not None else self.dbar
        M = self.M if self.M is not None else math.sqrt(dbar * n) / 2.0
        return dbar, M

    def channel(self) -> ChannelParams:
        return ChannelParams(P=self.P, N0=self.N0, gamma=self.gamma, alpha=self.alpha)


def _seed_ints(cfg: ExperimentConfig, n: int, s: int, count: int = 4) -> list[int]:
    ss = np.random.SeedSequence([cfg.seed_base, n, s])
    return [int(x) for x in ss.generate_state(count, dtype=np.uint64)]


def calibrate_sigma(cfg: ExperimentConfig) -> float:
    """Neighborhood-size constant measured once per (beta, K) at the smallest n.

    sigma = mean searched-neighborhood size / n^eps', averaged over 100 roots
    of one calibration instance; deterministic per config.
    """
    n = cfg.n_list[0]
    dbar, M = cfg.graph_params(n)
    degseq = powerlaw_weights(n, cfg.beta, dbar, M)
    ss = np.random.SeedSequence([cfg.seed_base, 0xCA11B])
    gseed, dseed = [int(x) for x in ss.generate_state(2, dtype=np.uint64)]
    g = generate(degseq, gseed)
    giant = giant_component(g)
    D = diameter_estimate(g, giant, seed=dseed)
    depth = AlgorithmParams(epsilon=cfg.epsilon, L=math.inf, D=D, F=1.0).search_depth
    rng = random.Random(dseed)
    sizes = []
    for _ in range(100):
        root = int(giant[rng.randrange(giant.size)])
        shells = socialgraph.bfs_neighborhood(g, root, depth)
        sizes.append(sum(len(s_) for s_ in shells[1:]))
    return float(np.mean(sizes)) / n ** cfg.epsilon_prime


def resolve_L(cfg: ExperimentConfig, n: int, sigma: float | None) -> float:
    if cfg.L == "inf":
        return math.inf
    if cfg.L != "auto":
        return float(cfg.L)
    if cfg.mode != "geography":
        return math.inf
    if sigma is None:
        raise ValueError("auto L needs a sigma value")
    return default_L(n, cfg.epsilon_prime, sigma, l_scale=cfg.l_scale)


def _auto_slot_limit(cfg: ExperimentConfig, n: int) -> int:
    return int(20 * n * cfg.F + 100000)


def run_one(
    cfg: ExperimentConfig, n: int, s: int, sigma: float | None = None,
    heatmap_path: str | None = None,
) -> RunResult:
    """Execute one (n, seed) cell of the experiment."""
    pl_seed, g_seed, d_seed, proto_seed = _seed_ints(cfg, n, s)
    dbar, M = cfg.graph_params(n)
    degseq = powerlaw_weights(n, cfg.beta, dbar, M)
    graph = generate(degseq, g_seed)
    placement = place_uniform(n, pl_seed)
    giant = giant_component(graph)
    D = diameter_estimate(graph, giant, seed=d_seed)
    rng = random.Random(proto_seed)
    source = int(giant[rng.randrange(giant.size)])
    epsilon = 0.0 if cfg.mode == "lb" else cfg.epsilon
    L = resolve_L(cfg, n, sigma)
    params = AlgorithmParams(
        epsilon=epsilon, L=L, D=D, F=cfg.F,
        epsilon_prime=cfg.epsilon_prime, sigma=sigma,
    )
    hop = cfg.hop_budget
    if hop is None:
        if epsilon == 0.0:
            hop = 2
        else:
            dt = float(np.sum(degseq.weights**2) / np.sum(degseq.weights))
            hop = int(4.0 * epsilon * math.log(n) / math.log(dt)) + 2

    if cfg.mode == "wan-baseline":
        T = wan_baseline(giant.size - 1, cfg.F, cfg.wan_rate)
        zeros = np.full(n, -1, dtype=np.int64)
        return RunResult(
            n=n, source=source, mode=cfg.mode, seed=s, F=cfg.F, kappa=cfg.kappa,
            giant_size=int(giant.size), T=int(math.ceil(T)), completed=True,
            stranded=False, slots_run=int(math.ceil(T)), max_fanout=0,
            max_tree_depth=0, l_transfers=0, s_transfers=0, max_cell_load=0,
            completion_time=zeros, eager_time=zeros, parent=zeros,
            kind=[""] * n, transfer_distance=np.full(n, -1.0),
        )

    report = lowerbound.lower_bound_time(
        graph, placement, cfg.channel(), cfg.F, hop, source,
        giant=giant, close_eta=cfg.close_eta,
    )
    if cfg.mode == "lower-bound":
        zeros = np.full(n, -1, dtype=np.int64)
        return RunResult(
            n=n, source=source, mode=cfg.mode, seed=s, F=cfg.F, kappa=cfg.kappa,
            giant_size=int(giant.size), T=int(math.ceil(report.time_bound)),
            completed=True, stranded=False, slots_run=0, max_fanout=0,
            max_tree_depth=0, l_transfers=0, s_transfers=0, max_cell_load=0,
            completion_time=zeros, eager_time=zeros, parent=zeros,
            kind=[""] * n, transfer_distance=np.full(n, -1.0),
            lower_bound=report.to_dict(),
        )

    slot_limit = cfg.slot_limit if cfg.slot_limit is not None else _auto_slot_limit(cfg, n)
    grid_out: list = []
    result = protocol.run(
        graph, placement, params, source, slot_limit,
        kappa=cfg.kappa, cell_side=cfg.cell_side, seed=proto_seed,
        mode=cfg.mode, giant=giant, grid_out=grid_out,
    )
    if heatmap_path is not None:
        routing.heatmap_csv(grid_out[0], heatmap_path, peak=True)
    result.seed = s  # record the sweep index, not the derived stream seed
    result.lower_bound = report.to_dict()
    return result


def _cell(args):
    cfg, n, s, sigma, heatmap_path = args
    return (n, s), run_one(cfg, n, s, sigma=sigma, heatmap_path=heatmap_path)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> list[RunResult]:
    """All (n, seed) cells of the configured sweep, optionally persisted as JSON/CSV."""
    sigma = cfg.sigma
    if sigma is None and cfg.mode == "geography" and cfg.L == "auto":
        sigma = calibrate_sigma(cfg)
    simulated = cfg.mode in ("lb", "geography")
    if write:
        os.makedirs(cfg.outdir, exist_ok=True)

    def hpath(n, s):
        if not (write and simulated):
            return None
        return os.path.join(cfg.outdir, f"{cfg.mode}_n{n}_s{s}_heatmap.csv")

    cells = [(cfg, n, s, sigma, hpath(n, s)) for n in cfg.n_list for s in range(cfg.seeds)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            keyed = dict(pool.map(_cell, cells))
        results = [keyed[(n, s)] for n in cfg.n_list for s in range(cfg.seeds)]
    else:
        results = [run_one(cfg, n, s, sigma=sigma, heatmap_path=hpath(n, s))
                   for n in cfg.n_list for s in range(cfg.seeds)]
    if write:
        for r in results:
            stem = os.path.join(cfg.outdir, f"{cfg.mode}_n{r.n}_s{r.seed}")
            r.to_json(stem + ".json")
            r.to_csv(stem + ".csv")
    return results


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    sizes: tuple[int, ...]
    medians: tuple[float, ...]
    q25: tuple[float, ...]
    q75: tuple[float, ...]
    log_correction: bool


def fit_scaling(results, log_correction: bool = True) -> ScalingFit:
    """Least-squares slope of log(median T [/ F log^2 n]) against log n.

    Accepts RunResult objects or summary dicts with n, T, F fields.
    """

    def get(r, k):
        return r[k] if isinstance(r, dict) else getattr(r, k)

    by_n: dict[int, list[float]] = {}
    for r in results:
        by_n.setdefault(int(get(r, "n")), []).append(float(get(r, "T")) / float(get(r, "F")))
    sizes = sorted(by_n)
    if len(sizes) < 3:
        raise ValueError("need at least 3 distinct sizes to fit a scaling exponent")
    med, q25, q75 = [], [], []
    for n in sizes:
        ts = np.array(by_n[n])
        med.append(float(np.median(ts)))
        q25.append(float(np.percentile(ts, 25)))
        q75.append(float(np.percentile(ts, 75)))
    x = np.log(np.array(sizes, dtype=float))
    y = np.array(med)
    if log_correction:
        y = y / np.log(np.array(sizes, dtype=float)) ** 2
    ylog = np.log(y)
    slope, intercept = np.polyfit(x, ylog, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((ylog - pred) ** 2))
    ss_tot = float(np.sum((ylog - ylog.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(
        exponent=float(slope), intercept=float(intercept), r_squared=r2,
        sizes=tuple(sizes), medians=tuple(med), q25=tuple(q25), q75=tuple(q75),
        log_correction=log_correction,
    )


def emit_plots(results_by_mode: dict[str, list], fits: dict[str, ScalingFit], outdir: str) -> list[str]:
    """CSV series per mode (`n,median_T,q25,q75,mode`) plus fitted lines."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    for mode, results in results_by_mode.items():
        path = os.path.join(outdir, f"series_{mode}.csv")
        with open(path, "w") as f:
            f.write("n,median_T,q25,q75,mode\n")
            if results:
                fit = fits.get(mode)
                if fit is None:
                    fit = fit_scaling(results, log_correction=False) if len({getattr(r, "n", r["n"] if isinstance(r, dict) else None) for r in results}) >= 3 else None
                if fit is not None:
                    for n, m, a, b in zip(fit.sizes, fit.medians, fit.q25, fit.q75):
                        f.write(f"{n},{m:.6g},{a:.6g},{b:.6g},{mode}\n")
        written.append(path)
    for mode, fit in fits.items():
        path = os.path.join(outdir, f"fit_{mode}.csv")
        with open(path, "w") as f:
            f.write("n,fit_T,mode\n")
            for n in fit.sizes:
                corr = math.log(n) ** 2 if fit.log_correction else 1.0
                f.write(f"{n},{math.exp(fit.intercept + fit.exponent * math.log(n)) * corr:.6g},{mode}\n")
        written.append(path)
    return written


def load_results(outdir: str) -> dict[str, list[dict]]:
    """Read persisted run summaries back, grouped by mode."""
    out: dict[str, list[dict]] = {}
    for name in sorted(os.listdir(outdir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(outdir, name)) as f:
            doc = json.load(f)
        out.setdefault(doc["mode"], []).append(doc)
    return out


# ---------------------------------------------------------------------------
# Statistical gates for the placement / random-graph lemmas.


def validate_lemmas(seed: int = 0, trials: int = 500, log=print) -> dict[str, bool]:
    """Monte-Carlo gates for the concentration lemmas; returns per-gate pass flags."""
    rng = random.Random(seed)
    out: dict[str, bool] = {}

    # Min-distance gate: among k=256 uniform candidates on the n=4096 square,
    # the closest one to a fixed node is within sqrt(64 n log n / (pi k)) in
    # >= 99% of trials.
    n, k = 4096, 256
    radius = math.sqrt(64.0 * n * math.log(n) / (math.pi * k))
    fails = 0
    for _ in range(trials):
        p = place_uniform(n, rng.randrange(2**63))
        cand = np.array(rng.sample(range(1, n), k), dtype=np.int64)
        if geometry.nearest_within(p, 0, cand, radius) is None:
            fails += 1
    out["min_distance"] = fails <= 0.01 * trials
    log(f"min_distance gate: {fails}/{trials} failures -> {'PASS' if out['min_distance'] else 'FAIL'}")

    # Rectangle gate: a rectangle of area A = 20 log n holds < 2A nodes in
    # >= 99% of trials.
    A = 20.0 * math.log(n)
    a_side = math.sqrt(A)
    fails = 0
    for _ in range(trials):
        p = place_uniform(n, rng.randrange(2**63))
        x0 = rng.uniform(0, p.side - a_side)
        y0 = rng.uniform(0, p.side - a_side)
        if geometry.count_in_rectangle(p, (x0, y0, x0 + a_side, y0 + a_side)) >= 2 * A:
            fails += 1
    out["rectangle_count"] = fails <= 0.01 * trials
    log(f"rectangle_count gate: {fails}/{trials} failures -> {'PASS' if out['rectangle_count'] else 'FAIL'}")

    # Degree gate: a node with expected degree 10 log n realizes between half
    # and twice that in >= 99% of generated graphs.
    n2 = 1024
    w0 = 10.0 * math.log(n2)
    weights = np.full(n2, w0)
    degseq = DegreeSequence(weights=weights)
    fails = 0
    for _ in range(trials):
        g = generate(degseq, rng.randrange(2**63))
        deg = g.degree(0)
        if not (w0 / 2 < deg < 2 * w0):
            fails += 1
    out["degree_concentration"] = fails <= 0.01 * trials
    log(f"degree_concentration gate: {fails}/{trials} failures -> {'PASS' if out['degree_concentration'] else 'FAIL'}")

    # Neighborhood growth gate: first-shell volume growth ratio within
    # [dtilde/2, 2 dtilde] for >= 90% of sampled roots of a dense power-law graph.
    n3 = 10000
    m3 = 10.0 * math.log(n3)
    dbar3 = m3 * 2.5 / 1.5  # beta = 3.5
    degseq3 = powerlaw_weights(n3, 3.5, dbar3, 300.0)
    g3 = generate(degseq3, rng.randrange(2**63))
    dt = float(np.sum(degseq3.weights**2) / np.sum(degseq3.weights))
    depth = max(1, int(0.08 * math.log(n3) / math.log(dt)))
    giant = giant_component(g3)
    ok = 0
    total = 0
    for _ in range(200):
        root = int(giant[rng.randrange(giant.size)])
        prof = socialgraph.neighborhood_growth_profile(g3, root, depth)
        for i in range(depth):
            if prof[i] <= 0:
                continue
            total += 1
            ratio = prof[i + 1] / prof[i]
            if dt / 2 <= ratio <= 2 * dt:
                ok += 1
    out["neighborhood_growth"] = total > 0 and ok >= 0.9 * total
    log(f"neighborhood_growth gate: {ok}/{total} in band -> {'PASS' if out['neighborhood_growth'] else 'FAIL'}")

    # Mid-weight fraction gate: share of nodes with weight in [m, 2m] within
    # 10% of 1 - 2^(1-beta).
    beta = 3.5
    target = 1.0 - 2.0 ** (1.0 - beta)
    fracs = []
    for nn in (4096, 8192):
        m = 10.0 * math.log(nn)
        seq = powerlaw_weights(nn, beta, m * 2.5 / 1.5, 300.0)
        w = seq.weights
        fracs.append(float(np.mean((w >= w.min()) & (w <= 2 * w.min()))))
    frac = float(np.mean(fracs))
    out["mid_weight_fraction"] = abs(frac - target) <= 0.1 * target
    log(f"mid_weight_fraction gate: {frac:.4f} vs {target:.4f} -> {'PASS' if out['mid_weight_fraction'] else 'FAIL'}")
    return out
