"""End-to-end orchestration from cover image to simulated stego image."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedding import (
    StegoResult,
    costs_to_probs,
    probs_to_costs,
    simulate_embedding,
    smooth_costs,
)
from .estimation import ModelField, estimate_model
from .image_io import compute_residual
from .lattice import tessellate
from .optimizer import (
    LOG2_3,
    OptimizeResult,
    OptimizerConfig,
    alternate_optimize,
    entropy_ternary,
)


@dataclass
class PipelineResult:
    stego: np.ndarray
    changes: np.ndarray
    beta_opt: np.ndarray
    beta_final: np.ndarray
    cost: np.ndarray
    cost_smoothed: np.ndarray | None
    model: ModelField
    optimum: OptimizeResult
    embed_lambda: float
    payload_bits: float
    seed: int
    rate_a: float
    rate_b: float

    @property
    def achieved_bits(self) -> float:
        return float(np.sum(entropy_ternary(self.beta_final)))


def _check_cover(cover: np.ndarray) -> np.ndarray:
    c = np.asarray(cover)
    if c.ndim != 2 or c.dtype != np.uint8:
        raise ValueError("cover must be a 2-D uint8 array")
    if c.shape[0] < 3 or c.shape[1] < 3:
        raise ValueError("cover must be at least 3 x 3")
    return c


def _check_rate(payload_rate: float) -> float:
    if not 0.0 < payload_rate <= LOG2_3:
        raise ValueError(
            f"payload rate must lie in (0, {LOG2_3:.5f}] bits per pixel")
    return float(payload_rate)


def compute_probabilities(cover: np.ndarray, payload_rate: float,
                          seed: int = 0, *, wiener_window: int = 2,
                          block: int = 9, degree: int = 2,
                          beta_t: float = 0.1, max_outer_iters: int = 4):
    """Model the cover and optimize change probabilities for the rate.

    Returns (OptimizeResult, ModelField); the payload in bits is
    rate times pixel count.
    """
    c = _check_cover(cover)
    rate = _check_rate(payload_rate)
    residual = compute_residual(c, wiener_window)
    model = estimate_model(residual, block, degree)
    config = OptimizerConfig(
        payload_bits=rate * c.size,
        beta_t=beta_t,
        max_outer_iters=max_outer_iters,
        rng_seed=np.random.SeedSequence(seed).spawn(2)[0],
    )
    partition = tessellate(c.shape[1], c.shape[0])
    optimum = alternate_optimize(model, partition, config)
    return optimum, model


def embed_image(cover: np.ndarray, payload_rate: float, seed: int = 0, *,
                smooth: bool = True, kernel: int = 7,
                wiener_window: int = 2, block: int = 9, degree: int = 2,
                beta_t: float = 0.1,
                max_outer_iters: int = 4) -> PipelineResult:
    """Full pipeline: model, optimize, optionally smooth costs, simulate.

    With smoothing on, the optimized probabilities become costs, the
    costs are averaged over a kernel x kernel window, and the final
    probabilities are re-derived for the full payload; with smoothing
    off the optimizer's probabilities embed directly.
    """
    c = _check_cover(cover)
    rate = _check_rate(payload_rate)
    optimum, model = compute_probabilities(
        c, rate, seed, wiener_window=wiener_window, block=block,
        degree=degree, beta_t=beta_t, max_outer_iters=max_outer_iters)
    payload_bits = rate * c.size
    cost = probs_to_costs(optimum.beta)
    if smooth:
        cost_smoothed = smooth_costs(cost, kernel)
        embed_lambda, beta_final = costs_to_probs(cost_smoothed, payload_bits)
    else:
        cost_smoothed = None
        embed_lambda, beta_final = math.nan, optimum.beta

    embed_seed = np.random.SeedSequence(seed).spawn(2)[1]
    sim: StegoResult = simulate_embedding(c, beta_final, embed_seed)
    return PipelineResult(
        stego=sim.stego,
        changes=sim.changes,
        beta_opt=optimum.beta,
        beta_final=beta_final,
        cost=cost,
        cost_smoothed=cost_smoothed,
        model=model,
        optimum=optimum,
        embed_lambda=embed_lambda,
        payload_bits=payload_bits,
        seed=seed,
        rate_a=sim.rate_a,
        rate_b=sim.rate_b,
    )
