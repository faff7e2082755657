"""Cross-validation of the optimized simulator against the slot-by-slot reference."""

import math
import random

import numpy as np

from naive_sim import naive_run
from socialcast.geometry import place_uniform
from socialcast.protocol import AlgorithmParams, run
from socialcast.socialgraph import DegreeSequence, generate, giant_component


def random_instance(s: int):
    rng = random.Random(s)
    n = rng.randrange(4, 33)
    w = np.full(n, rng.uniform(1.0, math.sqrt(n)))
    degseq = DegreeSequence(weights=w)
    graph = generate(degseq, seed=s)
    placement = place_uniform(n, seed=s)
    giant = giant_component(graph)
    if giant.size < 2:
        return None
    source = int(giant[rng.randrange(giant.size)])
    if rng.random() < 0.5:
        params = AlgorithmParams(epsilon=0.0, L=math.inf, D=4,
                                 F=rng.choice([1.0, 3.0, 6.0]))
    else:
        params = AlgorithmParams(epsilon=rng.uniform(0.05, 0.3),
                                 L=rng.uniform(2.0, 8.0), D=4,
                                 F=rng.choice([1.0, 3.0, 6.0]))
    return graph, placement, params, source, s


def test_fifty_instances_match_exactly():
    checked = 0
    s = 0
    while checked < 50:
        inst = random_instance(s)
        s += 1
        if inst is None:
            continue
        graph, placement, params, source, seed = inst
        fast = run(graph, placement, params, source, slot_limit=20_000, seed=seed)
        times, T, completed = naive_run(graph, placement, params, source,
                                        slot_limit=20_000, seed=seed)
        assert np.array_equal(fast.completion_time, times), (
            f"instance seed {seed}: per-node completion slots diverge")
        assert fast.T == T and fast.completed == completed
        checked += 1
    assert checked == 50
