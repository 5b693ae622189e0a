"""Numerical reference oracles for the closed-form information kernels.

Everything here is recomputed from first principles: probability masses by
per-cell Gauss-Legendre quadrature of the bivariate normal density, KL
divergences by direct summation over the quantized support, Fisher
information both by quadrature of its defining integrals and by
second-difference sums on the pmf, curvature by finite differences of the
exact KL.  None of it reuses the closed forms in ``fim``, so agreement
between routes is evidence rather than a tautology.

Two Fisher information routes exist on purpose.  ``fim_numeric``
integrates the exact continuum expressions the closed form was derived
from, so it validates the moment algebra at any parameter point.
``fim_discrete`` evaluates the curvature sums of the actual quantized
model; it approaches the closed form only when the step is fine relative
to the conditional spread, and the quadratic KL story inherits the same
premise.  ``FINE_QUANT_MIN_CONDVAR`` is the working boundary of that
regime, fixed once from measured behavior: below roughly 2.25 step^2 of
conditional variance a one-step change stops being a small perturbation
and no quadratic summary is accurate.

``run_verification`` bundles the cross-checks into a battery with fixed
thresholds; the kernel under test is injectable so a deliberate
perturbation can prove the battery actually bites.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fim as fim_mod
from .fim import CliqueParams, Fim2

TAIL_EPS = 1e-8

# Minimum conditional variance (in units of delta^2) for the quantized
# model to sit inside the fine-quantization regime where the quadratic KL
# approximation and the closed-form information are meaningful.
FINE_QUANT_MIN_CONDVAR = 2.25

# Parameter lattice for the full verification battery: variances and
# correlations spanning smooth through strongly textured content.
BATTERY_SIGMAS = (0.5, 1.0, 4.0, 25.0, 100.0)
BATTERY_RHOS = (0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9)
QUICK_SIGMAS = (1.0, 25.0)
QUICK_RHOS = (0.0, 0.6, -0.6)
KL_BETAS = (0.005, 0.01, 0.02, 0.05)


@dataclass
class QuantizedPmf2:
    """Joint pmf of a quantized pixel pair on {-T..T} x {-T..T}.

    probs[i + T, j + T] is the mass of the outcome (i * delta, j * delta).
    """

    support: int
    delta: float
    probs: np.ndarray

    def total(self) -> float:
        return float(self.probs.sum())


def default_support(params: CliqueParams) -> int:
    """Support radius covering eight standard deviations of both pixels."""
    spread = max(math.sqrt(params.sigma1), math.sqrt(params.sigma2))
    return max(2, int(math.ceil(8.0 * spread / params.delta)))


def conditional_variance(params: CliqueParams) -> float:
    """Smaller conditional variance of the pair, the resolution that counts."""
    return min(params.sigma1, params.sigma2) * (1.0 - params.rho ** 2)


def is_fine_quantized(params: CliqueParams) -> bool:
    delta2 = params.delta * params.delta
    return conditional_variance(params) >= FINE_QUANT_MIN_CONDVAR * delta2


def _precision(params: CliqueParams):
    s1, s2, rho = params.sigma1, params.sigma2, params.rho
    cross = rho * math.sqrt(s1 * s2)
    det = s1 * s2 - cross * cross
    return s2 / det, -cross / det, s1 / det, det


def _density_grid(params: CliqueParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bivariate normal density on the outer product grid x (rows) by y."""
    g11, g12, g22, det = _precision(params)
    quad = (g11 * x[:, None] ** 2
            + 2.0 * g12 * x[:, None] * y[None, :]
            + g22 * y[None, :] ** 2)
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


def _cell_nodes(params: CliqueParams, support: int, nodes: int):
    """Gauss-Legendre abscissas and weights tiled over all cells of one axis."""
    delta = params.delta
    centers = delta * np.arange(-support, support + 1, dtype=np.float64)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    pts = (centers[:, None] + 0.5 * delta * xg[None, :]).ravel()
    return centers.size, pts, 0.5 * delta * wg


def cover_pmf(params: CliqueParams, support: int | None = None,
              mode: str = "integrate", nodes: int = 8) -> QuantizedPmf2:
    """Quantize the clique Gaussian onto a (2T+1)^2 lattice of cells.

    mode "integrate" integrates the density over each delta-cell with a
    tensor Gauss-Legendre rule of the given node count per axis; mode
    "midpoint" takes delta^2 times the density at cell centers.  Raises if
    the retained mass falls below 1 - TAIL_EPS, which signals a support
    radius too small for the variances at hand.
    """
    if support is None:
        support = default_support(params)
    if support < 1:
        raise ValueError("support radius must be at least 1")
    delta = params.delta
    if mode == "midpoint":
        centers = delta * np.arange(-support, support + 1, dtype=np.float64)
        probs = delta * delta * _density_grid(params, centers, centers)
    elif mode == "integrate":
        n, pts, w = _cell_nodes(params, support, nodes)
        dens = _density_grid(params, pts, pts).reshape(n, nodes, n, nodes)
        probs = np.einsum('a,b,iajb->ij', w, w, dens, optimize=True)
    else:
        raise ValueError(f"unknown pmf mode {mode!r}")
    total = probs.sum()
    if total < 1.0 - TAIL_EPS:
        raise ValueError(
            f"pmf support too small: retained mass {total:.12f}, "
            f"enlarge the support radius")
    # The midpoint rule overshoots slightly on peaked densities; exact cell
    # integrals must not exceed unit mass beyond roundoff.
    excess = 1e-3 if mode == "midpoint" else 1e-9
    if total > 1.0 + excess:
        raise ValueError("pmf mass exceeds one; quadrature is inconsistent")
    return QuantizedPmf2(support, delta, probs)


def _shift(arr: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Translate arr by (di, dj) with zero fill, out[i, j] = arr[i-di, j-dj]."""
    out = np.zeros_like(arr)
    h, w = arr.shape
    src_i = slice(max(0, -di), min(h, h - di))
    src_j = slice(max(0, -dj), min(w, w - dj))
    dst_i = slice(max(0, di), min(h, h + di))
    dst_j = slice(max(0, dj), min(w, w + dj))
    out[dst_i, dst_j] = arr[src_i, src_j]
    return out


def stego_pmf(cover: QuantizedPmf2, beta1: float, beta2: float) -> QuantizedPmf2:
    """Law of the pair after independent symmetric ternary perturbation.

    Each pixel moves +-delta with probability beta each way.  The stego
    mass is the bilinear mixture of the cover mass and its eight shifted
    copies; mass leaks only through the truncated boundary, which is of
    the order of the tail epsilon.
    """
    for b in (beta1, beta2):
        if not (0.0 <= b <= 1.0 / 3.0 + 1e-12):
            raise ValueError("change probability must lie in [0, 1/3]")
    p = cover.probs
    stay1, stay2 = 1.0 - 2.0 * beta1, 1.0 - 2.0 * beta2
    axis1 = _shift(p, 1, 0) + _shift(p, -1, 0)
    axis2 = _shift(p, 0, 1) + _shift(p, 0, -1)
    corners = (_shift(p, 1, 1) + _shift(p, 1, -1)
               + _shift(p, -1, 1) + _shift(p, -1, -1))
    q = (p * stay1 * stay2
         + axis1 * beta1 * stay2
         + axis2 * stay1 * beta2
         + corners * beta1 * beta2)
    return QuantizedPmf2(cover.support, cover.delta, q)


def kl_exact(p: QuantizedPmf2, q: QuantizedPmf2) -> float:
    """KL divergence sum p log2(p/q) over the common support, in bits."""
    if p.probs.shape != q.probs.shape:
        raise ValueError("pmf supports differ")
    mask = p.probs > 0.0
    qm = q.probs[mask]
    if np.any(qm <= 0.0):
        raise ValueError("q vanishes where p has mass; KL undefined")
    pm = p.probs[mask]
    return float(np.sum(pm * np.log2(pm / qm)))


def fim_numeric(params: CliqueParams, support: int | None = None,
                nodes: int = 8) -> Fim2:
    """Fisher information by quadrature of its defining continuum integrals.

    The closed form arises from delta^4 times integrals of the density
    weighted by its second-derivative factors,

        integral f(x, y) [ (g11 x + g12 y)^2 - g11 ]^2 dx dy

    and the analogous mixed and second-axis terms, with g the precision
    matrix entries.  This route evaluates those integrals directly on a
    truncated domain, so the only error is tail truncation; it shrinks as
    the support radius grows.
    """
    if support is None:
        support = default_support(params)
    g11, g12, g22, det = _precision(params)
    n, pts, w = _cell_nodes(params, support, nodes)
    X, Y = pts[:, None], pts[None, :]
    f = np.exp(-0.5 * (g11 * X * X + 2.0 * g12 * X * Y + g22 * Y * Y)) \
        / (2.0 * math.pi * math.sqrt(det))
    u1 = (g11 * X + g12 * Y) ** 2 - g11
    u2 = (g12 * X + g22 * Y) ** 2 - g22
    wfull = np.tile(w, n)
    d4 = params.delta ** 4
    i11 = d4 * float(wfull @ (f * u1 * u1) @ wfull)
    i12 = d4 * float(wfull @ (f * u1 * u2) @ wfull)
    i22 = d4 * float(wfull @ (f * u2 * u2) @ wfull)
    return Fim2(i11, i12, i22)


def _fim_discrete_from_pmf(pmf: QuantizedPmf2) -> Fim2:
    p = pmf.probs
    om1 = _shift(p, 1, 0) + _shift(p, -1, 0) - 2.0 * p
    om2 = _shift(p, 0, 1) + _shift(p, 0, -1) - 2.0 * p
    mask = p > 0.0
    pm = p[mask]
    o1 = om1[mask]
    o2 = om2[mask]
    i11 = float(np.sum(o1 * o1 / pm))
    i12 = float(np.sum(o1 * o2 / pm))
    i22 = float(np.sum(o2 * o2 / pm))
    return Fim2(i11, i12, i22)


def fim_discrete(params: CliqueParams, support: int | None = None,
                 nodes: int = 8) -> Fim2:
    """Fisher information of the quantized model by second-difference sums.

    Uses omega1 = p(i-1,j) + p(i+1,j) - 2 p(i,j) and the analogous omega2
    along the second axis; the matrix entries are the sums of
    omega_a omega_b / p over the support.  This is the exact curvature of
    the discrete family and approaches the continuum closed form only for
    steps fine relative to the conditional spread.
    """
    return _fim_discrete_from_pmf(cover_pmf(params, support, "integrate", nodes))


def hessian_fd(params: CliqueParams, h: float = 1e-3,
               support: int | None = None, nodes: int = 8) -> np.ndarray:
    """One-sided finite-difference Hessian of the exact KL at beta = 0.

    Uses D(0, 0) = 0, so each diagonal entry needs two KL evaluations and
    the mixed entry three.  Returned in bits per unit beta squared; the
    expected value is the discrete Fisher information over ln 2.
    """
    pmf = cover_pmf(params, support, "integrate", nodes)

    def D(b1, b2):
        return kl_exact(pmf, stego_pmf(pmf, b1, b2))

    d_h0 = D(h, 0.0)
    d_0h = D(0.0, h)
    h11 = (D(2.0 * h, 0.0) - 2.0 * d_h0) / (h * h)
    h22 = (D(0.0, 2.0 * h) - 2.0 * d_0h) / (h * h)
    h12 = (D(h, h) - d_h0 - d_0h) / (h * h)
    return np.array([[h11, h12], [h12, h22]])


def _quad_moment(params: CliqueParams, a: int, b: int,
                 support: int | None = None, nodes: int = 8) -> float:
    """E[X1^a X2^b] by the same tensor quadrature used for the pmf."""
    if support is None:
        support = default_support(params)
    n, pts, w = _cell_nodes(params, support, nodes)
    wfull = np.tile(w, n)
    dens = _density_grid(params, pts, pts)
    integrand = dens * (pts[:, None] ** a) * (pts[None, :] ** b)
    return float(wfull @ integrand @ wfull)


def isserlis_check(params: CliqueParams, support: int | None = None,
                   nodes: int = 8) -> dict:
    """Compare Gaussian moment identities against quadrature.

    The closed-form kernels lean on the fourth-moment factorizations
    E[X1^4] = 3 s1^2, E[X1^2 X2^2] = s1 s2 + 2 c^2 and E[X1^3 X2] = 3 s1 c
    with c the covariance.  Returns a dict mapping moment names to
    (closed, numeric, relative error) triples.
    """
    s1, s2 = params.sigma1, params.sigma2
    c = params.rho * math.sqrt(s1 * s2)
    closed = {
        "m20": s1,
        "m11": c,
        "m02": s2,
        "m40": 3.0 * s1 * s1,
        "m31": 3.0 * s1 * c,
        "m22": s1 * s2 + 2.0 * c * c,
        "m13": 3.0 * s2 * c,
        "m04": 3.0 * s2 * s2,
    }
    report = {}
    for name, want in closed.items():
        a, b = int(name[1]), int(name[2])
        got = _quad_moment(params, a, b, support, nodes)
        scale = max(abs(want), abs(got), 1e-12)
        report[name] = (want, got, abs(want - got) / scale)
    return report


# ---------------------------------------------------------------------------
# verification battery


@dataclass
class CheckResult:
    name: str
    cases: int
    worst: float
    threshold: float
    passed: bool


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "ok " if c.passed else "FAIL"
            bound = "informational" if math.isinf(c.threshold) \
                else f"threshold {c.threshold:.3g}"
            out.append(f"[{tag}] {c.name}: {c.cases} cases, "
                       f"worst {c.worst:.3e} ({bound})")
        out.append(f"battery {'passed' if self.passed else 'FAILED'} "
                   f"in {self.elapsed:.1f} s")
        return out


def _fim_entry_errors(closed: Fim2, numeric: Fim2) -> list[float]:
    """Per-entry relative disagreement with a floor for doubly tiny entries."""
    floor = 1e-9 * math.sqrt(abs(closed.i11 * closed.i22))
    errs = []
    for a, b in ((closed.i11, numeric.i11), (closed.i12, numeric.i12),
                 (closed.i22, numeric.i22)):
        if abs(a) < floor and abs(b) < floor:
            errs.append(0.0)
        else:
            errs.append(abs(a - b) / max(abs(a), abs(b)))
    return errs


def _lattice(sigmas, rhos):
    for s1 in sigmas:
        for s2 in sigmas:
            for rho in rhos:
                yield CliqueParams(s1, s2, rho)


def run_verification(quick: bool = False,
                     fim_fn: Callable[[CliqueParams], Fim2] | None = None,
                     ) -> VerificationReport:
    """Cross-check the closed-form kernels against every oracle route.

    fim_fn defaults to the production closed form; tests may inject a
    perturbed variant to confirm the battery rejects it.
    """
    if fim_fn is None:
        fim_fn = fim_mod.fim_clique
    sigmas = QUICK_SIGMAS if quick else BATTERY_SIGMAS
    rhos = QUICK_RHOS if quick else BATTERY_RHOS
    t0 = time.perf_counter()
    report = VerificationReport()

    # Closed form against quadrature of its defining integrals, everywhere.
    fim_worst = 0.0
    fim_cases = 0
    for params in _lattice(sigmas, rhos):
        errs = _fim_entry_errors(fim_fn(params), fim_numeric(params))
        fim_worst = max(fim_worst, *errs)
        fim_cases += 1
    report.checks.append(CheckResult(
        "closed form vs defining integrals", fim_cases, fim_worst,
        0.01, fim_worst <= 0.01))

    # Quadratic KL with the discrete information against the exact KL, and
    # finite-difference curvature against the discrete information.  Both
    # are gated on the fine-quantization premise; outside it the one-step
    # change is no longer a small perturbation and the measured error is
    # reported without being thresholded.
    kl_small_worst = kl_small_coarse = 0.0
    kl_large_worst = kl_large_coarse = 0.0
    kl_small_cases = kl_large_cases = kl_coarse_cases = 0
    hess_worst = cross_zero_worst = 0.0
    hess_cases = 0
    for params in _lattice(sigmas, rhos):
        fine = is_fine_quantized(params)
        pmf = cover_pmf(params)
        disc = _fim_discrete_from_pmf(pmf)
        for b in KL_BETAS:
            for b1, b2 in ((b, b), (b, 0.5 * b)):
                exact = kl_exact(pmf, stego_pmf(pmf, b1, b2))
                rel = abs(fim_mod.kl_clique(b1, b2, disc) - exact) / exact
                if not fine:
                    kl_coarse_cases += 1
                    if b <= 0.02:
                        kl_small_coarse = max(kl_small_coarse, rel)
                    else:
                        kl_large_coarse = max(kl_large_coarse, rel)
                elif b <= 0.02:
                    kl_small_worst = max(kl_small_worst, rel)
                    kl_small_cases += 1
                else:
                    kl_large_worst = max(kl_large_worst, rel)
                    kl_large_cases += 1
        if fine:
            fd = hessian_fd(params)
            want = disc.as_matrix() / fim_mod.LN2
            floor = 1e-6 * math.sqrt(want[0, 0] * want[1, 1])
            hess_cases += 1
            for i, j in ((0, 0), (0, 1), (1, 1)):
                if abs(want[i, j]) < floor:
                    cross_zero_worst = max(cross_zero_worst,
                                           abs(fd[i, j] - want[i, j]))
                else:
                    hess_worst = max(hess_worst,
                                     abs(fd[i, j] - want[i, j]) / abs(want[i, j]))
    report.checks.append(CheckResult(
        "quadratic KL vs exact, beta <= 0.02 (fine quantization)",
        kl_small_cases, kl_small_worst, 0.10, kl_small_worst <= 0.10))
    report.checks.append(CheckResult(
        "quadratic KL vs exact, beta = 0.05 (fine quantization)",
        kl_large_cases, kl_large_worst, 0.25, kl_large_worst <= 0.25))
    report.checks.append(CheckResult(
        "quadratic KL vs exact, coarse quantization (reported only)",
        kl_coarse_cases, max(kl_small_coarse, kl_large_coarse),
        math.inf, True))
    report.checks.append(CheckResult(
        "exact-KL curvature vs discrete information", hess_cases,
        hess_worst, 0.02, hess_worst <= 0.02))
    report.checks.append(CheckResult(
        "curvature cross term at rho 0 (absolute)", hess_cases,
        cross_zero_worst, 0.05, cross_zero_worst <= 0.05))

    # Discrete sums approach the closed form as the step shrinks.
    deltas = (1.0, 0.5, 0.25)
    conv = []
    for d in deltas:
        p = CliqueParams(1.0, 1.0, 0.0, d)
        clo = fim_fn(p)
        got = fim_discrete(p)
        conv.append(abs(got.i11 - clo.i11) / clo.i11)
    monotone = all(a > b for a, b in zip(conv, conv[1:]))
    report.checks.append(CheckResult(
        "discrete sums converge to closed form as step shrinks",
        len(deltas), conv[-1], 0.0105,
        monotone and conv[-1] <= 0.0105))

    # Moment identities behind the closed forms.
    iss_worst = 0.0
    iss_cases = 0
    iss_params = (CliqueParams(1.0, 1.0, 0.5), CliqueParams(4.0, 25.0, -0.7),
                  CliqueParams(0.5, 2.0, 0.9))
    for params in iss_params:
        for _, _, rel in isserlis_check(params).values():
            iss_worst = max(iss_worst, rel)
            iss_cases += 1
    report.checks.append(CheckResult(
        "gaussian moment identities", iss_cases, iss_worst,
        0.01, iss_worst <= 0.01))

    # Independence factorization of the quadrature itself.
    from scipy.special import erf
    fact_worst = 0.0
    for sigma in sigmas:
        params = CliqueParams(sigma, sigma, 0.0)
        pmf = cover_pmf(params)
        edges = params.delta * (np.arange(-pmf.support, pmf.support + 2) - 0.5)
        z = edges / math.sqrt(2.0 * sigma)
        marg = 0.5 * (erf(z[1:]) - erf(z[:-1]))
        fact_worst = max(fact_worst, float(
            np.max(np.abs(pmf.probs - np.outer(marg, marg)))))
    report.checks.append(CheckResult(
        "independent-pair factorization vs erf", len(sigmas), fact_worst,
        1e-10, fact_worst <= 1e-10))

    # Mass bookkeeping of the perturbed law.
    mass_worst = 0.0
    pmf = cover_pmf(CliqueParams(4.0, 4.0, 0.3))
    for b in KL_BETAS:
        q = stego_pmf(pmf, b, b)
        mass_worst = max(mass_worst, abs(q.total() - pmf.total()))
    report.checks.append(CheckResult(
        "perturbation mass conservation", len(KL_BETAS), mass_worst,
        1e-12, mass_worst <= 1e-12))

    report.elapsed = time.perf_counter() - t0
    return report
