"""Gaussian interference channel: attenuation, SINR rates, bit-meter budget.

Rates are in bits per slot (log base 2); the attenuation is
min(1, exp(-gamma*d) / d^alpha), which resolves the d=0 singularity to 1.
The bit-meter budget is the per-slot network-wide cap on sum(rate * distance),
linear in n with an explicit constant read off the channel parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import Placement

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ChannelParams:
    """Fixed transmit power P, noise N0, attenuation exponent gamma, path loss alpha."""

    P: float = 1.0
    N0: float = 1.0
    gamma: float = 0.0
    alpha: float = 3.0

    def __post_init__(self):
        if self.P <= 0 or self.N0 <= 0:
            raise ValueError("P and N0 must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.gamma == 0 and self.alpha <= 2:
            raise ValueError("gamma = 0 requires alpha > 2")


def attenuation(params: ChannelParams, d) -> float | np.ndarray:
    """Power attenuation min(1, e^(-gamma d)/d^alpha); equals 1 at d = 0."""
    d = np.asarray(d, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        raw = np.exp(-params.gamma * d) / np.power(d, params.alpha)
    out = np.minimum(1.0, raw)
    out = np.where(d == 0.0, 1.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def sinr_rate(
    params: ChannelParams,
    placement: Placement,
    tx: int,
    rx: int,
    active: set[int] | np.ndarray,
) -> float:
    """Shannon rate (bits/slot) from tx to rx given the set of active transmitters."""
    active_arr = np.fromiter(active, dtype=np.int64) if isinstance(active, (set, frozenset)) else np.asarray(active, dtype=np.int64)
    if tx not in set(active_arr.tolist()):
        raise ValueError(f"tx {tx} is not in the active transmitter set")
    if rx in set(active_arr.tolist()):
        raise ValueError(f"rx {rx} is half-duplex and currently transmitting")
    d_sig = np.hypot(*(placement.coords[tx] - placement.coords[rx]))
    signal = params.P * attenuation(params, float(d_sig))
    interferers = active_arr[active_arr != tx]
    if interferers.size:
        delta = placement.coords[interferers] - placement.coords[rx]
        d_int = np.hypot(delta[:, 0], delta[:, 1])
        interference = float(np.sum(params.P * attenuation(params, d_int)))
    else:
        interference = 0.0
    return math.log2(1.0 + signal / (params.N0 + interference))


def sup_attenuation_distance_product(params: ChannelParams, d_hi: float = 50.0, tol: float = 1e-9) -> float:
    """sup over d > 0 of attenuation(d) * d.

    For gamma = 0 (alpha > 2) the supremum is 1, attained at d = 1.  For
    gamma > 0 it is found by bounded 1-D maximization seeded from a grid scan.
    """
    if params.gamma == 0:
        # min(1, d^-alpha)*d is d on (0,1] and d^(1-alpha) beyond: peak at d=1.
        return 1.0

    def f(d: float) -> float:
        return float(attenuation(params, d)) * d

    grid = np.linspace(1e-6, d_hi, 4001)
    vals = np.array([f(d) for d in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda d: -f(d), bounds=(lo, hi), method="bounded",
                          options={"xatol": tol})
    return max(float(-res.fun), float(vals[k]))


def bit_meter_constant(params: ChannelParams) -> float:
    """Per-node constant C in budget = C * n: (P/N0) * sup(l(d) d) / (2 ln 2)."""
    return params.P / params.N0 * sup_attenuation_distance_product(params) / (2.0 * LN2)


def bit_meter_budget(params: ChannelParams, n: int) -> float:
    """Network-wide bit-meter product (rate * distance summed over pairs) cap per slot."""
    return bit_meter_constant(params) * n
