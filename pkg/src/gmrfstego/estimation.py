"""Blockwise local-polynomial fits of the residual and the derived
per-pixel variance and per-clique covariance/correlation fields.

Every pixel owns the p x p block centered on it (symmetric padding at the
borders).  The block is projected onto a low-degree 2-D polynomial basis;
what the projection cannot explain is treated as the stationary noise
whose second moments parameterize the pairwise model.  Estimates use the
identity e_m . e_n = b_m . b_n - (Q^T b_m) . (Q^T b_n) with Q an
orthonormal basis of the fit space, so only box sums and q kernel
correlations per pixel are ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VAR_FLOOR = 0.01
RHO_CLAMP = 0.99

_CHUNK_ROWS = 64


@dataclass(frozen=True)
class BasisMatrix:
    """Design matrix of the local fit and its orthonormalized form."""

    p: int
    degree: int
    powers: tuple
    g: np.ndarray
    ortho: np.ndarray

    @property
    def q(self) -> int:
        return self.g.shape[1]


@dataclass
class ModelField:
    """Per-pixel variance and per-clique covariance/correlation grids.

    cov_h and rho_h describe the pair (pixel, right neighbor) stored at
    the left pixel, so their last column is zero; cov_v and rho_v pair
    each pixel with the one below and zero the last row.
    """

    variance: np.ndarray
    cov_h: np.ndarray
    cov_v: np.ndarray
    rho_h: np.ndarray
    rho_v: np.ndarray


def build_basis(p: int = 9, degree: int = 2) -> BasisMatrix:
    """Monomial basis u^a v^b with a+b <= degree on the p x p block.

    Coordinates are normalized to [-1, 1]; the constant column comes
    first.  q = (degree+1)(degree+2)/2 columns.
    """
    if p < 3 or p % 2 == 0:
        raise ValueError("block side must be odd and at least 3")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    q = (degree + 1) * (degree + 2) // 2
    if q >= p * p:
        raise ValueError("basis has as many parameters as samples")
    c = (p - 1) / 2.0
    u = (np.arange(p) - c) / c
    powers = []
    for d in range(degree + 1):
        for a in range(d, -1, -1):
            powers.append((a, d - a))
    cols = []
    for a, b in powers:
        # u runs along block columns, v along block rows
        cols.append(np.outer(u ** b, u ** a).ravel())
    g = np.stack(cols, axis=1)
    ortho, r = np.linalg.qr(g)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * diag.max():
        raise ValueError("basis columns are numerically dependent")
    return BasisMatrix(p, degree, tuple(powers), g, ortho)


def fit_block(block: np.ndarray, basis: BasisMatrix) -> np.ndarray:
    """Orthogonal projection of one block onto the basis span."""
    b = np.asarray(block, dtype=np.float64)
    flat = b.ravel()
    if flat.size != basis.p * basis.p:
        raise ValueError("block size does not match basis")
    fitted = basis.ortho @ (basis.ortho.T @ flat)
    return fitted.reshape(b.shape)


def _integral_box(arr: np.ndarray, p: int) -> np.ndarray:
    """Sums over all p x p boxes of arr, anchored at the top-left."""
    h, w = arr.shape
    acc = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(arr, axis=0, out=acc[1:, 1:])
    np.cumsum(acc[1:, 1:], axis=1, out=acc[1:, 1:])
    return (acc[p:, p:] - acc[:-p, p:] - acc[p:, :-p] + acc[:-p, :-p])


def _basis_scores(padded: np.ndarray, basis: BasisMatrix,
                  shape) -> np.ndarray:
    """Q^T b for every pixel's block, shape (h, w, q)."""
    p = basis.p
    kernels = basis.ortho.reshape(p, p, basis.q)
    view = np.lib.stride_tricks.sliding_window_view(padded, (p, p))
    view = view[:shape[0], :shape[1]]
    out = np.empty(shape + (basis.q,), dtype=np.float64)
    for i0 in range(0, shape[0], _CHUNK_ROWS):
        i1 = min(i0 + _CHUNK_ROWS, shape[0])
        out[i0:i1] = np.einsum("ijab,abc->ijc", view[i0:i1], kernels,
                               optimize=True)
    return out


def _pad_centered(residual: np.ndarray, half: int, extra_col: int = 0,
                  extra_row: int = 0) -> np.ndarray:
    return np.pad(residual,
                  ((half, half + extra_row), (half, half + extra_col)),
                  mode="symmetric")


def estimate_variance(residual: np.ndarray, basis: BasisMatrix) -> np.ndarray:
    """Residual energy unexplained by the local fit, floored at 0.01."""
    r = np.asarray(residual, dtype=np.float64)
    half = basis.p // 2
    padded = _pad_centered(r, half)
    scores = _basis_scores(padded, basis, r.shape)
    total = _integral_box(padded * padded, basis.p)
    raw = (total - np.sum(scores * scores, axis=2)) / (basis.p ** 2 - basis.q)
    return np.maximum(VAR_FLOOR, raw)


def estimate_covariance(residual: np.ndarray, basis: BasisMatrix,
                        orientation: str) -> np.ndarray:
    """Cross moment of fit leftovers for horizontally or vertically
    adjacent blocks; stored at the left/top pixel, far edge zero."""
    r = np.asarray(residual, dtype=np.float64)
    half = basis.p // 2
    if orientation == "h":
        padded = _pad_centered(r, half, extra_col=1)
        prod = padded[:, :-1] * padded[:, 1:]
        scores = _basis_scores(padded[:, :-1], basis, r.shape)
        cross_scores = np.zeros(r.shape)
        cross_scores[:, :-1] = np.sum(scores[:, :-1] * scores[:, 1:], axis=2)
    elif orientation == "v":
        padded = _pad_centered(r, half, extra_row=1)
        prod = padded[:-1, :] * padded[1:, :]
        scores = _basis_scores(padded[:-1, :], basis, r.shape)
        cross_scores = np.zeros(r.shape)
        cross_scores[:-1, :] = np.sum(scores[:-1, :] * scores[1:, :], axis=2)
    else:
        raise ValueError("orientation must be 'h' or 'v'")
    total = _integral_box(prod, basis.p)
    cov = (total - cross_scores) / (basis.p ** 2 - basis.q)
    if orientation == "h":
        cov[:, -1] = 0.0
    else:
        cov[-1, :] = 0.0
    return cov


def correlation(variance: np.ndarray, cov: np.ndarray,
                orientation: str) -> np.ndarray:
    """Pairwise correlation from clamped variances, clamped to 0.99."""
    rho = np.zeros_like(cov)
    if orientation == "h":
        denom = np.sqrt(variance[:, :-1] * variance[:, 1:])
        rho[:, :-1] = cov[:, :-1] / denom
    elif orientation == "v":
        denom = np.sqrt(variance[:-1, :] * variance[1:, :])
        rho[:-1, :] = cov[:-1, :] / denom
    else:
        raise ValueError("orientation must be 'h' or 'v'")
    return np.clip(rho, -RHO_CLAMP, RHO_CLAMP)


def estimate_model(residual: np.ndarray, p: int = 9,
                   degree: int = 2) -> ModelField:
    """Full second-moment field of the residual in one pass."""
    basis = build_basis(p, degree)
    variance = estimate_variance(residual, basis)
    cov_h = estimate_covariance(residual, basis, "h")
    cov_v = estimate_covariance(residual, basis, "v")
    return ModelField(
        variance=variance,
        cov_h=cov_h,
        cov_v=cov_v,
        rho_h=correlation(variance, cov_h, "h"),
        rho_v=correlation(variance, cov_v, "v"),
    )
