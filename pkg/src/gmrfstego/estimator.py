"""Estimator-style wrappers around the functional pipeline.

GmrfModel fits the local pairwise model of a cover image; GmrfEmbedder
fits change probabilities for a payload and emits the simulated stego
image.  Both follow the scikit-learn parameter conventions (constructor
args stored verbatim, get_params/set_params, trailing-underscore fitted
attributes), so they compose with its tooling; note that transform on
the embedder is randomized by the seed parameter and specific to the
fitted cover.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .estimation import estimate_model
from .image_io import compute_residual
from .pipeline import _check_cover, _check_rate, embed_image


class GmrfModel(BaseEstimator, TransformerMixin):
    """Fit per-pixel variance and pairwise correlation fields.

    Parameters mirror the pipeline defaults: wiener_window is the
    denoiser box side, block the fitting block side, degree the
    polynomial degree of the local fit.
    """

    def __init__(self, wiener_window: int = 2, block: int = 9,
                 degree: int = 2):
        self.wiener_window = wiener_window
        self.block = block
        self.degree = degree

    def fit(self, X, y=None):
        cover = _check_cover(np.asarray(X))
        self.residual_ = compute_residual(cover, self.wiener_window)
        model = estimate_model(self.residual_, self.block, self.degree)
        self.model_ = model
        self.variance_ = model.variance
        self.rho_h_ = model.rho_h
        self.rho_v_ = model.rho_v
        return self

    def transform(self, X):
        """Stack (variance, rho_h, rho_v) of X as an (h, w, 3) array."""
        self.fit(X)
        return np.stack([self.variance_, self.rho_h_, self.rho_v_], axis=-1)


class GmrfEmbedder(BaseEstimator):
    """Payload-constrained probability fit plus embedding simulation.

    fit(X) runs modeling and optimization on the cover X; transform(X)
    simulates the embedding and returns the stego image.  The fitted
    probabilities belong to one specific cover, so transform insists on
    receiving the same image again.
    """

    def __init__(self, payload: float = 0.4, seed: int = 0,
                 smooth: bool = True, kernel: int = 7,
                 wiener_window: int = 2, block: int = 9, degree: int = 2,
                 beta_t: float = 0.1):
        self.payload = payload
        self.seed = seed
        self.smooth = smooth
        self.kernel = kernel
        self.wiener_window = wiener_window
        self.block = block
        self.degree = degree
        self.beta_t = beta_t

    def fit(self, X, y=None):
        cover = _check_cover(np.asarray(X))
        _check_rate(self.payload)
        result = embed_image(
            cover, self.payload, self.seed, smooth=self.smooth,
            kernel=self.kernel, wiener_window=self.wiener_window,
            block=self.block, degree=self.degree, beta_t=self.beta_t)
        self.cover_ = cover
        self.result_ = result
        self.beta_ = result.beta_final
        self.converged_ = result.optimum.converged
        return self

    def transform(self, X):
        if not hasattr(self, "result_"):
            raise ValueError("embedder is not fitted")
        cover = _check_cover(np.asarray(X))
        if not np.array_equal(cover, self.cover_):
            raise ValueError(
                "fitted probabilities are specific to the fitted cover")
        return self.result_.stego

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)
