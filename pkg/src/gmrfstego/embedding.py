"""Cost conversion, cost smoothing, and ternary embedding simulation.

Change probabilities and additive costs are two views of the same Gibbs
law beta = e^{-lambda d} / (1 + 2 e^{-lambda d}).  Probabilities from the
optimizer convert to costs at lambda = 1, the costs may be averaged over
a small window to suppress isolated spikes, and a fresh multiplier is
searched so the final probabilities carry the requested payload.  The
simulator then flips pixels by +-1 with those probabilities, which is
embedding at the payload-distortion bound without an actual coder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import _integral_box
from .lattice import tessellate
from .optimizer import (
    BETA_MAX,
    BETA_MIN,
    LOG2_3,
    CapacityError,
    entropy_ternary,
)

_LAMBDA_BRACKET = (1e-6, 1e6)
_LAMBDA_MAX_ITERS = 80


@dataclass
class StegoResult:
    """Simulated embedding outcome with per-sublattice change rates."""

    stego: np.ndarray
    changes: np.ndarray
    seed: object
    rate_a: float
    rate_b: float


def probs_to_costs(beta: np.ndarray) -> np.ndarray:
    """Embedding cost d = ln(1/beta - 2), zero at beta = 1/3."""
    b = np.clip(np.asarray(beta, dtype=np.float64), BETA_MIN, BETA_MAX)
    return np.maximum(np.log(1.0 / b - 2.0), 0.0)


def costs_to_probs_at(cost: np.ndarray, lagrange: float) -> np.ndarray:
    """Gibbs probabilities for one multiplier: 1 / (e^{lambda d} + 2)."""
    x = np.minimum(lagrange * np.asarray(cost, dtype=np.float64), 700.0)
    return 1.0 / (np.exp(x) + 2.0)


def smooth_costs(cost: np.ndarray, kernel: int = 7) -> np.ndarray:
    """Moving average over a kernel x kernel window, symmetric padding."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError("kernel must be odd and positive")
    c = np.asarray(cost, dtype=np.float64)
    half = kernel // 2
    padded = np.pad(c, half, mode="symmetric")
    return _integral_box(padded, kernel) / float(kernel * kernel)


def costs_to_probs(cost: np.ndarray, payload_bits: float):
    """Probabilities under the cost profile meeting the payload.

    Payload decreases as the multiplier grows, so the bracket expands
    downward for large targets and upward for small ones; geometric
    bisection then drives the entropy sum to payload_bits within
    max(1e-6 target, 0.1 bits).  Returns (lagrange, beta).
    """
    c = np.asarray(cost, dtype=np.float64)
    if not payload_bits > 0:
        raise ValueError("payload must be positive")
    capacity = c.size * LOG2_3
    tol = max(1e-6 * payload_bits, 0.1)
    if payload_bits > capacity + tol:
        raise CapacityError(
            f"payload {payload_bits:.1f} bits exceeds capacity "
            f"{capacity:.1f}")
    if payload_bits >= capacity - tol:
        return 0.0, np.full(c.shape, BETA_MAX)

    def payload(lag):
        beta = costs_to_probs_at(c, lag)
        return float(np.sum(entropy_ternary(beta))), beta

    lo, hi = _LAMBDA_BRACKET
    p_lo, beta_lo = payload(lo)
    expand = 0
    while p_lo < payload_bits and expand < _LAMBDA_MAX_ITERS:
        lo *= 0.5
        p_lo, beta_lo = payload(lo)
        expand += 1
    p_hi, beta = payload(hi)
    while p_hi > payload_bits and expand < _LAMBDA_MAX_ITERS:
        hi *= 2.0
        p_hi, beta = payload(hi)
        expand += 1
    if p_lo < payload_bits:
        raise CapacityError("payload bracket expansion failed")

    best = (lo, beta_lo, p_lo - payload_bits)
    if abs(p_hi - payload_bits) < abs(best[2]):
        best = (hi, beta, p_hi - payload_bits)
    iters = 0
    while iters < _LAMBDA_MAX_ITERS and abs(best[2]) > tol:
        mid = math.sqrt(lo * hi)
        p_mid, beta_mid = payload(mid)
        if abs(p_mid - payload_bits) < abs(best[2]):
            best = (mid, beta_mid, p_mid - payload_bits)
        if p_mid > payload_bits:
            lo = mid
        else:
            hi = mid
        iters += 1
    return best[0], best[1]


def simulate_embedding(cover: np.ndarray, beta: np.ndarray,
                       seed) -> StegoResult:
    """Draw ternary changes pixel by pixel and apply them with saturation.

    One uniform draw per pixel in row-major order: u < beta means +1,
    u < 2 beta means -1, else no change.  At the range ends the drawn
    direction flips so the change magnitude stays one.
    """
    c = np.asarray(cover)
    if c.dtype != np.uint8 or c.ndim != 2:
        raise ValueError("cover must be a 2-D uint8 array")
    b = np.asarray(beta, dtype=np.float64)
    if b.shape != c.shape:
        raise ValueError("probability map does not match the cover")
    if np.any(b < 0) or np.any(b > BETA_MAX + 1e-12):
        raise ValueError("change probability must lie in [0, 1/3]")

    rng = np.random.default_rng(seed)
    u = rng.random(c.shape)
    changes = np.where(u < b, 1, np.where(u < 2.0 * b, -1, 0)).astype(np.int8)
    changes[(c == 255) & (changes == 1)] = -1
    changes[(c == 0) & (changes == -1)] = 1
    stego = (c.astype(np.int16) + changes).astype(np.uint8)

    part = tessellate(c.shape[1], c.shape[0])
    changed = changes != 0
    rate_a = float(changed[part.a_mask].mean())
    rate_b = float(changed[part.b_mask].mean())
    return StegoResult(stego, changes, seed, rate_a, rate_b)
