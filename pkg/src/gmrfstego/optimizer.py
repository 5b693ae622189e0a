"""Alternating change-probability optimization under a payload constraint.

One sublattice is held fixed while every pixel of the other solves a
scalar stationarity condition

    Gamma * beta + Lambda - 2 lambda * ln((1 - 2 beta) / beta) = 0

where Gamma collects the center diagonal of the active clique kernels
(minus the overcounted single-pixel share), Lambda the cross terms with
the frozen neighbor probabilities, and lambda the multiplier enforcing
that the sublattice's entropy hits its payload share.  The left side is
strictly increasing in beta with Gamma > 0 and lambda > 0, so a plain
bisection on [beta_min, 1/3] is exact enough and fully vectorizes; the
multiplier itself is found by a geometric bisection on an expanding
bracket.  Sublattices alternate until the multipliers stabilize or the
iteration cap is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fim import fim_grid
from .lattice import (
    SublatticePartition,
    allocate_theta_grid,
    neighbor_values,
    tessellate,
)

BETA_MIN = 1e-9
BETA_MAX = 1.0 / 3.0
LOG2_3 = math.log2(3.0)

_BETA_BISECTIONS = 48
_LAMBDA_BRACKET = (1e-6, 1e6)
_LAMBDA_MAX_ITERS = 80


class CapacityError(ValueError):
    """Requested payload exceeds what the pixels can carry."""


@dataclass
class OptimizerConfig:
    payload_bits: float
    beta_t: float = 0.1
    max_outer_iters: int = 4
    lambda_ratio_stop: float = 0.98
    init_beta_max: float = 0.001
    rng_seed: int = 0
    beta_min: float = BETA_MIN
    delta: float = 1.0

    def __post_init__(self):
        if not self.payload_bits > 0:
            raise ValueError("payload must be positive")
        if not 0 < self.beta_t:
            raise ValueError("clique threshold must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("need at least one outer iteration")


@dataclass
class SublatticeSolve:
    lagrange: float
    beta: np.ndarray
    payload_error: float
    iterations: int
    within_tolerance: bool


@dataclass
class OptimizeResult:
    beta: np.ndarray
    lambdas_a: list = field(default_factory=list)
    lambdas_b: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    payload_ok: bool = True
    trace: list = field(default_factory=list)


def entropy_ternary(beta):
    """Entropy in bits of the symmetric ternary change law.

    h(b) = -2 b log2 b - (1 - 2 b) log2(1 - 2 b), with h(0) = 0.
    Accepts scalars or arrays; beta must lie in [0, 1/3].
    """
    b = np.asarray(beta, dtype=np.float64)
    if np.any(b < 0) or np.any(b > BETA_MAX + 1e-12):
        raise ValueError("change probability must lie in [0, 1/3]")
    safe = np.where(b > 0, b, 1.0)
    h = -2.0 * b * np.log2(safe) - (1.0 - 2.0 * b) * np.log2(1.0 - 2.0 * b)
    h = np.where(b > 0, h, 0.0)
    return float(h) if np.isscalar(beta) else h


def stationarity_residual(beta: float, gamma: float, lambda_coef: float,
                          lagrange: float) -> float:
    """Left side of the per-pixel optimality condition at one beta."""
    if not 0.0 < beta < BETA_MAX:
        raise ValueError("residual defined on the open interval (0, 1/3)")
    return gamma * beta + lambda_coef \
        - 2.0 * lagrange * math.log((1.0 - 2.0 * beta) / beta)


def _solve_beta_grid(gamma: np.ndarray, lambda_coef: np.ndarray,
                     lagrange: float, beta_min: float) -> np.ndarray:
    """Vectorized bisection for the stationarity root of every pixel.

    Monotonicity makes the bracket [beta_min, 1/3] always valid: the
    residual is -inf-like at beta_min for small beta_min and equals
    Gamma/3 + Lambda >= 0 at the top.  Roots pushed outside the bracket
    clamp to its ends, which is the defined behavior.
    """
    lo = np.full(gamma.shape, beta_min)
    hi = np.full(gamma.shape, BETA_MAX)
    for _ in range(_BETA_BISECTIONS):
        mid = 0.5 * (lo + hi)
        res = gamma * mid + lambda_coef \
            - 2.0 * lagrange * np.log((1.0 - 2.0 * mid) / mid)
        above = res > 0.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def solve_beta_pixel(gamma: float, lagrange_lambda: float,
                     lambda_coef: float = 0.0,
                     beta_min: float = BETA_MIN) -> float:
    """Scalar stationarity solve; see _solve_beta_grid for semantics."""
    if not lagrange_lambda > 0:
        raise ValueError("multiplier must be positive")
    out = _solve_beta_grid(np.array([gamma]), np.array([lambda_coef]),
                           lagrange_lambda, beta_min)
    return float(out[0])


def solve_lambda_sublattice(gamma: np.ndarray, lambda_coef: np.ndarray,
                            target_bits: float,
                            beta_min: float = BETA_MIN) -> SublatticeSolve:
    """Find the multiplier whose betas carry target_bits of entropy.

    The payload is strictly increasing in the multiplier, so an expanding
    bracket followed by geometric bisection converges; iteration stops
    when the payload error drops under max(1e-6 target, 0.1 bits).
    """
    n = gamma.size
    capacity = n * LOG2_3
    tol = max(1e-6 * target_bits, 0.1)
    if target_bits > capacity + tol:
        raise CapacityError(
            f"target {target_bits:.1f} bits exceeds capacity {capacity:.1f}")
    if target_bits >= capacity - tol:
        beta = np.full(gamma.shape, BETA_MAX)
        return SublatticeSolve(math.inf, beta, capacity - target_bits, 0,
                               True)

    def payload(lag):
        beta = _solve_beta_grid(gamma, lambda_coef, lag, beta_min)
        return float(np.sum(entropy_ternary(beta))), beta

    lo, hi = _LAMBDA_BRACKET
    p_lo, beta = payload(lo)
    expand = 0
    while p_lo > target_bits and expand < _LAMBDA_MAX_ITERS:
        lo *= 0.5
        p_lo, beta = payload(lo)
        expand += 1
    p_hi, beta_hi = payload(hi)
    while p_hi < target_bits and expand < _LAMBDA_MAX_ITERS:
        hi *= 2.0
        p_hi, beta_hi = payload(hi)
        expand += 1
    if p_hi < target_bits:
        raise CapacityError("payload bracket expansion failed")

    best_lag, best_beta, best_err = hi, beta_hi, p_hi - target_bits
    if abs(p_lo - target_bits) < abs(best_err):
        best_lag, best_beta, best_err = lo, beta, p_lo - target_bits
    iters = 0
    while iters < _LAMBDA_MAX_ITERS and abs(best_err) > tol:
        mid = math.sqrt(lo * hi)
        p_mid, beta_mid = payload(mid)
        err = p_mid - target_bits
        if abs(err) < abs(best_err):
            best_lag, best_beta, best_err = mid, beta_mid, err
        if p_mid < target_bits:
            lo = mid
        else:
            hi = mid
        iters += 1
    return SublatticeSolve(best_lag, best_beta, best_err, iters,
                           abs(best_err) <= tol)


@dataclass
class _CoupledField:
    """Precomputed clique kernels: center diagonal and cross entries per
    direction, plus the isolated-pixel information."""

    i1: np.ndarray
    i22: np.ndarray
    i12: np.ndarray

    @classmethod
    def from_model(cls, model, delta: float = 1.0):
        var = model.variance
        i1 = 2.0 * delta ** 4 / (var * var)
        i22 = np.empty((4,) + var.shape)
        i12 = np.empty((4,) + var.shape)
        rho_by_dir = (
            neighbor_values(model.rho_v, 0),
            model.rho_v,
            neighbor_values(model.rho_h, 2),
            model.rho_h,
        )
        for d in range(4):
            sig_nbr = neighbor_values(var, d, fill=1.0)
            _, i12[d], i22[d] = fim_grid(sig_nbr, var, rho_by_dir[d], delta)
        return cls(i1, i22, i12)


def _assemble(coupled: _CoupledField, thetas: np.ndarray, beta: np.ndarray):
    """Gamma and Lambda grids for the current activations and the frozen
    opposite-sublattice probabilities."""
    th = thetas.astype(np.float64)
    count = th.sum(axis=0)
    gamma = np.einsum("dij,dij->ij", th, coupled.i22) \
        + (1.0 - count) * coupled.i1
    lam = np.zeros_like(gamma)
    for d in range(4):
        lam += th[d] * coupled.i12[d] * neighbor_values(beta, d)
    return gamma, lam


def alternate_optimize(model, partition: SublatticePartition | None,
                       config: OptimizerConfig) -> OptimizeResult:
    """Alternate per-sublattice payload solves until the multipliers
    stabilize.

    The opposite sublattice seeds from a small uniform random draw, so
    the first pass sees every clique inactive and reduces to the
    independent single-pixel model; couplings switch on as probabilities
    cross the activation threshold.  Payload splits proportionally to
    sublattice sizes.
    """
    shape = model.variance.shape
    if partition is None:
        partition = tessellate(shape[1], shape[0])
    if (partition.height, partition.width) != shape:
        raise ValueError("partition does not match the model grid")
    total = shape[0] * shape[1]
    if config.payload_bits > total * LOG2_3:
        raise CapacityError("payload exceeds image capacity")

    coupled = _CoupledField.from_model(model, config.delta)
    masks = (partition.a_mask, partition.b_mask)
    targets = (config.payload_bits * masks[0].sum() / total,
               config.payload_bits * masks[1].sum() / total)

    rng = np.random.default_rng(config.rng_seed)
    beta = np.full(shape, config.beta_min)
    init = rng.uniform(0.0, config.init_beta_max, size=shape)
    beta[masks[1]] = init[masks[1]]

    result = OptimizeResult(beta=beta)
    lam_hist = ([], [])
    for k in range(1, config.max_outer_iters + 1):
        thetas = allocate_theta_grid(beta, config.beta_t)
        for side in (0, 1):
            gamma, lam_coef = _assemble(coupled, thetas, beta)
            mask = masks[side]
            solve = solve_lambda_sublattice(
                gamma[mask], lam_coef[mask], targets[side], config.beta_min)
            beta[mask] = solve.beta
            lam_hist[side].append(solve.lagrange)
            result.payload_ok &= solve.within_tolerance
            result.trace.append(
                (k, "AB"[side], solve.lagrange, solve.payload_error))
        result.iterations = k
        if k >= 2:
            ratios = []
            for hist in lam_hist:
                prev, cur = hist[-2], hist[-1]
                if math.isinf(prev) and math.isinf(cur):
                    ratios.append(1.0)
                else:
                    ratios.append(cur / prev)
            if all(r > config.lambda_ratio_stop for r in ratios):
                result.converged = True
                break

    result.beta = beta
    result.lambdas_a = lam_hist[0]
    result.lambdas_b = lam_hist[1]
    return result


def trace_csv(result: OptimizeResult) -> str:
    """Multiplier trace as CSV with a header row."""
    lines = ["iter,lattice,lambda,payload_error"]
    for k, side, lag, err in result.trace:
        lines.append(f"{k},{side},{lag:.10g},{err:.6g}")
    return "\n".join(lines) + "\n"
