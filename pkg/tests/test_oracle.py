"""Reference oracles: quantization, perturbation, information, curvature.

Expected numbers below were computed with these oracles first and frozen;
where a closed form exists the value is also derived by independent hand
arithmetic (erf marginals, exact decimals).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmrfstego.fim import LN2, CliqueParams, Fim2, fim_clique, kl_clique
from gmrfstego import oracle
from gmrfstego.oracle import (
    cover_pmf,
    default_support,
    fim_discrete,
    fim_numeric,
    hessian_fd,
    is_fine_quantized,
    isserlis_check,
    kl_exact,
    run_verification,
    stego_pmf,
)

UNIT = CliqueParams(1.0, 1.0, 0.0)


def test_default_support_covers_eight_sigma():
    assert default_support(UNIT) == 8
    assert default_support(CliqueParams(100.0, 1.0, 0.0)) == 80
    assert default_support(CliqueParams(0.5, 0.5, 0.0)) == 6


def test_center_cell_mass_matches_erf_product():
    # independent unit pair: each axis integrates to erf(1/(2 sqrt 2))
    pmf = cover_pmf(UNIT)
    marg = math.erf(0.5 / math.sqrt(2.0))
    assert marg == pytest.approx(0.3829249225480261, rel=1e-15)
    assert pmf.probs[8, 8] == pytest.approx(marg * marg, rel=1e-13)
    assert pmf.probs[8, 8] == pytest.approx(0.14663149630841182, rel=1e-12)


def test_pmf_mass_is_one_up_to_tails():
    for params in (UNIT, CliqueParams(25.0, 4.0, -0.6),
                   CliqueParams(100.0, 100.0, 0.9)):
        assert cover_pmf(params).total() == pytest.approx(1.0, abs=1e-8)


def test_pmf_midpoint_close_to_integrated():
    # midpoint error is curvature-limited, about delta^2 f'' / 24 per cell
    a = cover_pmf(CliqueParams(25.0, 25.0, 0.3), mode="integrate")
    b = cover_pmf(CliqueParams(25.0, 25.0, 0.3), mode="midpoint")
    assert np.max(np.abs(a.probs - b.probs)) < 5e-5
    assert b.total() == pytest.approx(a.total(), abs=1e-4)


def test_pmf_small_support_rejected():
    with pytest.raises(ValueError):
        cover_pmf(CliqueParams(25.0, 25.0, 0.0), support=5)


def test_pmf_symmetries():
    pmf = cover_pmf(CliqueParams(2.0, 3.0, 0.5)).probs
    assert np.allclose(pmf, pmf[::-1, ::-1], atol=1e-16)
    uncorr = cover_pmf(CliqueParams(2.0, 3.0, 0.0)).probs
    assert np.allclose(uncorr, uncorr[::-1, :], atol=1e-16)
    assert np.allclose(uncorr, uncorr[:, ::-1], atol=1e-16)


def test_perturbation_identity_at_zero():
    pmf = cover_pmf(UNIT)
    out = stego_pmf(pmf, 0.0, 0.0)
    assert np.array_equal(out.probs, pmf.probs)


def test_perturbation_mass_conserved():
    pmf = cover_pmf(CliqueParams(4.0, 4.0, 0.3))
    for b in (0.005, 0.05, 1.0 / 3.0):
        assert stego_pmf(pmf, b, b).total() == pytest.approx(
            pmf.total(), abs=1e-12)


def test_perturbation_axes_commute():
    # per-pixel channels are independent, so axis order cannot matter
    pmf = cover_pmf(CliqueParams(2.0, 5.0, -0.4))
    ab = stego_pmf(stego_pmf(pmf, 0.07, 0.0), 0.0, 0.02)
    ba = stego_pmf(stego_pmf(pmf, 0.0, 0.02), 0.07, 0.0)
    joint = stego_pmf(pmf, 0.07, 0.02)
    assert np.allclose(ab.probs, joint.probs, atol=1e-16)
    assert np.allclose(ba.probs, joint.probs, atol=1e-16)


def test_perturbation_rejects_large_rate():
    pmf = cover_pmf(UNIT)
    with pytest.raises(ValueError):
        stego_pmf(pmf, 0.34, 0.0)


def test_divergence_zero_for_identical():
    pmf = cover_pmf(UNIT)
    assert kl_exact(pmf, pmf) == 0.0


def test_divergence_frozen_value():
    # exact KL of the unit pair at rate 0.01 each, frozen from this oracle
    pmf = cover_pmf(UNIT)
    d = kl_exact(pmf, stego_pmf(pmf, 0.01, 0.01))
    assert d == pytest.approx(2.528563366331277e-4, rel=1e-10)


def test_divergence_additive_for_independent_pair():
    # product law: joint KL splits exactly into per-axis KLs
    pmf = cover_pmf(UNIT)
    d12 = kl_exact(pmf, stego_pmf(pmf, 0.03, 0.01))
    d1 = kl_exact(pmf, stego_pmf(pmf, 0.03, 0.0))
    d2 = kl_exact(pmf, stego_pmf(pmf, 0.0, 0.01))
    assert d12 == pytest.approx(d1 + d2, rel=1e-12)


@given(b=st.floats(min_value=1e-4, max_value=1.0 / 3.0))
@settings(max_examples=60, deadline=None)
def test_divergence_positive_at_positive_rate(b):
    pmf = cover_pmf(CliqueParams(2.0, 2.0, 0.3, delta=1.0))
    assert kl_exact(pmf, stego_pmf(pmf, b, b)) > 0.0


def test_divergence_monotone_in_rate():
    pmf = cover_pmf(CliqueParams(4.0, 9.0, 0.5))
    vals = [kl_exact(pmf, stego_pmf(pmf, b, b))
            for b in (0.002, 0.01, 0.05, 0.15, 0.3)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_integral_information_matches_closed_form_tightly():
    for params in (UNIT, CliqueParams(1.0, 1.0, 0.5),
                   CliqueParams(4.0, 25.0, -0.6),
                   CliqueParams(0.5, 100.0, 0.9)):
        want = fim_clique(params)
        got = fim_numeric(params)
        assert got.i11 == pytest.approx(want.i11, rel=1e-9)
        assert got.i22 == pytest.approx(want.i22, rel=1e-9)
        assert got.i12 == pytest.approx(want.i12, rel=1e-9, abs=1e-12)


def test_integral_information_truncation_improves_with_support():
    want = fim_clique(UNIT).i11
    errs = [abs(fim_numeric(UNIT, support=t).i11 - want) for t in (3, 5, 8)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-10


def test_discrete_information_frozen_unit_value():
    # curvature of the actual unit-step family, frozen from this oracle;
    # about 7.7% below the continuum value 2
    got = fim_discrete(UNIT)
    assert got.i11 == pytest.approx(1.8454715810906, rel=1e-9)
    assert got.i22 == pytest.approx(got.i11, rel=1e-12)
    assert abs(got.i12) < 1e-12


def test_discrete_information_approaches_closed_form():
    errs = []
    for delta in (1.0, 0.5, 0.25):
        p = CliqueParams(1.0, 1.0, 0.0, delta)
        clo = fim_clique(p)
        errs.append(abs(fim_discrete(p).i11 - clo.i11) / clo.i11)
    assert errs[0] == pytest.approx(0.07726, abs=5e-5)
    assert errs[1] == pytest.approx(0.03527, abs=5e-5)
    assert errs[2] == pytest.approx(0.01000, abs=5e-5)
    assert errs[0] > errs[1] > errs[2]


def test_quadratic_predicts_exact_divergence_with_discrete_kernel():
    pmf = cover_pmf(UNIT)
    disc = fim_discrete(UNIT)
    exact = kl_exact(pmf, stego_pmf(pmf, 0.01, 0.01))
    quad = kl_clique(0.01, 0.01, disc)
    assert abs(quad - exact) / exact < 0.06


def test_curvature_frozen_unit_values():
    h = hessian_fd(UNIT)
    assert h[0, 0] == pytest.approx(2.6179373632900207, rel=1e-6)
    assert h[1, 1] == pytest.approx(h[0, 0], rel=1e-9)
    assert abs(h[0, 1]) < 1e-9
    want = fim_discrete(UNIT).i11 / LN2
    assert want == pytest.approx(2.6624526981409233, rel=1e-9)
    assert h[0, 0] == pytest.approx(want, rel=0.02)


def test_curvature_matches_discrete_information_in_fine_regime():
    params = CliqueParams(25.0, 25.0, 0.6)
    assert is_fine_quantized(params)
    h = hessian_fd(params)
    want = fim_discrete(params).as_matrix() / LN2
    assert np.allclose(h, want, rtol=0.02)


def test_fine_quantization_gate():
    assert not is_fine_quantized(UNIT)
    assert not is_fine_quantized(CliqueParams(25.0, 1.0, 0.0))
    assert is_fine_quantized(CliqueParams(25.0, 25.0, 0.6))
    assert not is_fine_quantized(CliqueParams(25.0, 25.0, 0.98))
    assert is_fine_quantized(CliqueParams(4.0, 4.0, 0.0))
    assert not is_fine_quantized(CliqueParams(4.0, 4.0, 0.0, delta=2.0))


def test_moment_identities_tight():
    report = isserlis_check(CliqueParams(4.0, 25.0, -0.7))
    assert set(report) == {"m20", "m11", "m02", "m40", "m31", "m22", "m13", "m04"}
    for want, got, rel in report.values():
        assert rel < 1e-10
    assert report["m22"][0] == pytest.approx(4.0 * 25.0 + 2.0 * 49.0, rel=1e-15)


def test_quick_battery_passes():
    rep = run_verification(quick=True)
    assert rep.passed
    assert rep.elapsed < 60.0
    lines = rep.lines()
    assert lines[-1].startswith("battery passed")
    assert all(line.startswith("[ok ]") for line in lines[:-1])


def test_battery_rejects_perturbed_kernel():
    def skewed(params):
        f = fim_clique(params)
        return Fim2(f.i11, f.i12 * 1.05, f.i22)

    rep = run_verification(quick=True, fim_fn=skewed)
    assert not rep.passed
    failed = [c.name for c in rep.checks if not c.passed]
    assert "closed form vs defining integrals" in failed
