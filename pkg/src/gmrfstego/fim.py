"""Closed-form Fisher information kernels for two-pixel cliques.

A clique couples a quantized pixel pair whose residuals are modeled as a
zero-mean bivariate Gaussian with variances sigma1, sigma2 and correlation
rho.  Symmetric ternary embedding perturbs each pixel by +-delta with
probability beta each way, and for small beta the KL divergence between
cover and stego laws is the quadratic form beta' I beta / (2 ln 2) with I
the 2x2 steganographic Fisher information matrix.  The entries collapse to

    i11 = 2 delta^4 / (sigma1^2 (1 - rho^2)^2)
    i12 = 2 delta^4 rho^2 / (sigma1 sigma2 (1 - rho^2)^2)
    i22 = 2 delta^4 / (sigma2^2 (1 - rho^2)^2)

where sigma1, sigma2 denote variances, not standard deviations.  The
single-pixel kernel fi_single is the rho -> 0 limit of a diagonal entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

LN2 = math.log(2.0)


@dataclass(frozen=True)
class CliqueParams:
    """Gaussian parameters of one pixel pair.

    sigma1 and sigma2 are variances of the two residuals, rho their
    correlation coefficient, delta the quantization step.
    """

    sigma1: float
    sigma2: float
    rho: float
    delta: float = 1.0

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("variances must be positive")
        if not abs(self.rho) < 1:
            raise ValueError("correlation must satisfy |rho| < 1")
        if not self.delta > 0:
            raise ValueError("quantization step must be positive")


@dataclass(frozen=True)
class Fim2:
    """Symmetric 2x2 Fisher information matrix stored as (i11, i12, i22)."""

    i11: float
    i12: float
    i22: float

    def as_matrix(self):
        import numpy as np

        return np.array([[self.i11, self.i12], [self.i12, self.i22]])


def fim_clique(params: CliqueParams) -> Fim2:
    """Closed-form Fisher information of a correlated pixel pair."""
    s1, s2, rho, delta = params.sigma1, params.sigma2, params.rho, params.delta
    shrink = (1.0 - rho * rho) ** 2
    d4 = delta ** 4
    i11 = 2.0 * d4 / (s1 * s1 * shrink)
    i22 = 2.0 * d4 / (s2 * s2 * shrink)
    i12 = 2.0 * d4 * rho * rho / (s1 * s2 * shrink)
    return Fim2(i11, i12, i22)


def fi_single(sigma: float, delta: float = 1.0) -> float:
    """Fisher information of an isolated pixel with residual variance sigma."""
    if sigma <= 0:
        raise ValueError("variance must be positive")
    return 2.0 * delta ** 4 / (sigma * sigma)


def fim_grid(sigma1, sigma2, rho, delta: float = 1.0):
    """Closed-form entries for whole grids of pair parameters at once.

    Same formulas as fim_clique but on numpy arrays; returns the tuple
    (i11, i12, i22).  Inputs must already satisfy the scalar domain
    (positive variances, |rho| < 1), which the model-field clamps
    guarantee.
    """
    import numpy as np

    s1 = np.asarray(sigma1, dtype=np.float64)
    s2 = np.asarray(sigma2, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    if np.any(s1 <= 0) or np.any(s2 <= 0):
        raise ValueError("variances must be positive")
    if np.any(np.abs(r) >= 1):
        raise ValueError("correlation must satisfy |rho| < 1")
    shrink = (1.0 - r * r) ** 2
    d4 = delta ** 4
    i11 = 2.0 * d4 / (s1 * s1 * shrink)
    i12 = 2.0 * d4 * r * r / (s1 * s2 * shrink)
    i22 = 2.0 * d4 / (s2 * s2 * shrink)
    return i11, i12, i22


def kl_clique(beta1: float, beta2: float, fim: Fim2) -> float:
    """Quadratic KL divergence of one clique, in bits.

    Evaluates (i11 b1^2 + 2 i12 b1 b2 + i22 b2^2) / (2 ln 2) for change
    probabilities b1, b2 in [0, 1/3].
    """
    _check_beta(beta1)
    _check_beta(beta2)
    quad = fim.i11 * beta1 * beta1 + 2.0 * fim.i12 * beta1 * beta2 \
        + fim.i22 * beta2 * beta2
    return quad / (2.0 * LN2)


def kl_tree(beta_center: float, beta_neighbors: Sequence[float],
            thetas: Sequence[int], fims: Sequence[Fim2],
            fi_center: float) -> float:
    """Quadratic KL divergence of one clique tree, in bits.

    The tree joins a center pixel to up to four cross neighbors.  Each clique
    contributes its quadratic form when its activation theta is 1, and the
    center marginal (Fisher information fi_center) is subtracted once per
    surplus active clique so overlapping cliques do not double count it:

        [sum_c theta_c (i11 b_t^2 + 2 i12 b_t b_s + i22 b_s^2)
         - (sum_c theta_c - 1) fi_center b_s^2] / (2 ln 2)

    The center pixel occupies the second slot of every Fim2, so i22 and i12
    always refer to it.  With a single active clique this reduces exactly to
    kl_clique.
    """
    if not (len(beta_neighbors) == len(thetas) == len(fims)):
        raise ValueError("neighbor, theta and fim lists must align")
    _check_beta(beta_center)
    total = 0.0
    active = 0
    for beta_n, theta, fim in zip(beta_neighbors, thetas, fims):
        if not theta:
            continue
        _check_beta(beta_n)
        active += 1
        total += fim.i11 * beta_n * beta_n \
            + 2.0 * fim.i12 * beta_n * beta_center \
            + fim.i22 * beta_center * beta_center
    total -= (active - 1) * fi_center * beta_center * beta_center
    return total / (2.0 * LN2)


def _check_beta(beta: float):
    if not (0.0 <= beta <= 1.0 / 3.0 + 1e-12):
        raise ValueError("change probability must lie in [0, 1/3]")
