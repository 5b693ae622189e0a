"""Closed-form information kernels: exact values, symmetries, quadratics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmrfstego.fim import (
    LN2,
    CliqueParams,
    Fim2,
    fi_single,
    fim_clique,
    kl_clique,
    kl_tree,
)

variances = st.floats(min_value=0.05, max_value=200.0)
rhos = st.floats(min_value=-0.95, max_value=0.95)
betas = st.floats(min_value=0.0, max_value=1.0 / 3.0)


def test_unit_isotropic_entries():
    f = fim_clique(CliqueParams(1.0, 1.0, 0.0))
    assert f.i11 == pytest.approx(2.0, rel=1e-15)
    assert f.i12 == 0.0
    assert f.i22 == pytest.approx(2.0, rel=1e-15)


def test_correlated_unit_pair_entries():
    # 2 / (1 - 0.25)^2 and 2 * 0.25 / (1 - 0.25)^2, exact in binary.
    f = fim_clique(CliqueParams(1.0, 1.0, 0.5))
    assert f.i11 == pytest.approx(3.5555555555555554, rel=1e-15)
    assert f.i12 == pytest.approx(0.8888888888888888, rel=1e-15)
    assert f.i22 == f.i11


def test_anisotropic_entries_hand_computed():
    # shrink = (1 - 0.36)^2 = 0.4096; entries are exact decimals.
    f = fim_clique(CliqueParams(4.0, 25.0, -0.6))
    assert f.i11 == pytest.approx(2.0 / (16.0 * 0.4096), rel=1e-15)
    assert f.i12 == pytest.approx(2.0 * 0.36 / (100.0 * 0.4096), rel=1e-15)
    assert f.i22 == pytest.approx(2.0 / (625.0 * 0.4096), rel=1e-15)
    assert f.i11 == pytest.approx(0.30517578125, rel=1e-15)
    assert f.i12 == pytest.approx(0.017578125, rel=1e-15)
    assert f.i22 == pytest.approx(0.0078125, rel=1e-15)


def test_single_pixel_information():
    assert fi_single(1.0) == pytest.approx(2.0, rel=1e-15)
    assert fi_single(4.0) == pytest.approx(0.125, rel=1e-15)
    assert fi_single(2.0, delta=2.0) == pytest.approx(8.0, rel=1e-15)


@given(s1=variances, s2=variances, rho=rhos)
@settings(max_examples=200)
def test_entry_symmetries(s1, s2, rho):
    f = fim_clique(CliqueParams(s1, s2, rho))
    swapped = fim_clique(CliqueParams(s2, s1, rho))
    flipped = fim_clique(CliqueParams(s1, s2, -rho))
    assert swapped.i11 == pytest.approx(f.i22, rel=1e-12)
    assert swapped.i22 == pytest.approx(f.i11, rel=1e-12)
    assert swapped.i12 == pytest.approx(f.i12, rel=1e-12)
    # only rho^2 enters, so the sign of the correlation is irrelevant
    assert flipped.i11 == pytest.approx(f.i11, rel=1e-12)
    assert flipped.i12 == pytest.approx(f.i12, rel=1e-12)


@given(s1=variances, s2=variances, rho=rhos,
       k=st.floats(min_value=0.2, max_value=5.0))
@settings(max_examples=200)
def test_joint_scale_invariance(s1, s2, rho, k):
    # scaling both variances by k^2 and the step by k changes nothing
    f = fim_clique(CliqueParams(s1, s2, rho))
    g = fim_clique(CliqueParams(s1 * k * k, s2 * k * k, rho, delta=k))
    assert g.i11 == pytest.approx(f.i11, rel=1e-10)
    assert g.i12 == pytest.approx(f.i12, rel=1e-10)
    assert g.i22 == pytest.approx(f.i22, rel=1e-10)


def test_step_scaling_quartic():
    base = fim_clique(CliqueParams(3.0, 7.0, 0.4))
    doubled = fim_clique(CliqueParams(3.0, 7.0, 0.4, delta=2.0))
    assert doubled.i11 == pytest.approx(16.0 * base.i11, rel=1e-14)
    assert doubled.i12 == pytest.approx(16.0 * base.i12, rel=1e-14)
    assert doubled.i22 == pytest.approx(16.0 * base.i22, rel=1e-14)


@given(s1=variances, s2=variances, rho=rhos)
@settings(max_examples=200)
def test_matrix_positive_semidefinite(s1, s2, rho):
    f = fim_clique(CliqueParams(s1, s2, rho))
    m = f.as_matrix()
    assert m.shape == (2, 2)
    assert m[0, 1] == m[1, 0]
    assert f.i11 > 0.0 and f.i22 > 0.0 and f.i12 >= 0.0
    det = f.i11 * f.i22 - f.i12 * f.i12
    assert det >= -1e-12 * f.i11 * f.i22
    eig = np.linalg.eigvalsh(m)
    assert eig[0] >= -1e-12 * eig[1]


@pytest.mark.parametrize("bad", [
    dict(sigma1=0.0, sigma2=1.0, rho=0.0),
    dict(sigma1=1.0, sigma2=-2.0, rho=0.0),
    dict(sigma1=1.0, sigma2=1.0, rho=1.0),
    dict(sigma1=1.0, sigma2=1.0, rho=-1.5),
    dict(sigma1=1.0, sigma2=1.0, rho=0.0, delta=0.0),
])
def test_parameter_validation(bad):
    with pytest.raises(ValueError):
        CliqueParams(**bad)


def test_divergence_zero_at_zero_rate():
    f = fim_clique(CliqueParams(2.0, 5.0, 0.3))
    assert kl_clique(0.0, 0.0, f) == 0.0


def test_divergence_quadratic_value():
    # (2 * b^2 + 2 * b^2) / (2 ln 2) at the isotropic unit point
    val = kl_clique(0.01, 0.01, Fim2(2.0, 0.0, 2.0))
    assert val == pytest.approx(2e-4 / math.log(2.0), rel=1e-14)
    assert val == pytest.approx(2.885390081777927e-4, rel=1e-12)


def test_divergence_asymmetric_rates():
    f = Fim2(3.0, 1.0, 5.0)
    b1, b2 = 0.02, 0.01
    want = (3.0 * b1 * b1 + 2.0 * 1.0 * b1 * b2 + 5.0 * b2 * b2) / (2.0 * LN2)
    assert kl_clique(b1, b2, f) == pytest.approx(want, rel=1e-14)


@given(b1=betas, b2=betas, s1=variances, s2=variances, rho=rhos)
@settings(max_examples=200)
def test_divergence_nonnegative_and_monotone(b1, b2, s1, s2, rho):
    f = fim_clique(CliqueParams(s1, s2, rho))
    base = kl_clique(b1, b2, f)
    assert base >= 0.0
    if b1 <= 0.3:
        # i12 >= 0 for this family, so growth in either rate cannot help
        assert kl_clique(b1 + 0.01, b2, f) >= base - 1e-15


def test_divergence_rejects_out_of_range_rate():
    f = Fim2(2.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        kl_clique(0.4, 0.0, f)
    with pytest.raises(ValueError):
        kl_clique(0.0, -0.01, f)


def test_tree_single_active_clique_matches_pair():
    # one active edge: tree divergence is exactly the pair divergence
    f = fim_clique(CliqueParams(3.0, 2.0, 0.5))
    fi = fi_single(2.0)
    got = kl_tree(0.05, [0.04, 0.2, 0.0, 0.1],
                  [1, 0, 0, 0], [f, f, f, f], fi)
    assert got == pytest.approx(kl_clique(0.04, 0.05, f), rel=1e-14)


def test_tree_isolated_center_keeps_single_pixel_term():
    # with no active edges the center still pays its own information
    fi = fi_single(4.0)
    f = fim_clique(CliqueParams(4.0, 4.0, 0.0))
    beta = 0.08
    got = kl_tree(beta, [0.3, 0.3, 0.3, 0.3],
                  [0, 0, 0, 0], [f, f, f, f], fi)
    assert got == pytest.approx(fi * beta * beta / (2.0 * LN2), rel=1e-14)


def test_tree_overcount_correction():
    # n active edges count the center n times; n - 1 copies are removed
    s_center = 2.0
    fi = fi_single(s_center)
    fims = [fim_clique(CliqueParams(s, s_center, r))
            for s, r in ((1.0, 0.2), (3.0, -0.4), (2.0, 0.0), (5.0, 0.6))]
    beta = 0.06
    nbrs = [0.05, 0.11, 0.02, 0.09]
    want = sum(kl_clique(bn, beta, f) for bn, f in zip(nbrs, fims))
    want -= 3.0 * fi * beta * beta / (2.0 * LN2)
    got = kl_tree(beta, nbrs, [1, 1, 1, 1], fims, fi)
    assert got == pytest.approx(want, rel=1e-13)


@given(bc=betas,
       bn=st.lists(betas, min_size=4, max_size=4),
       th=st.lists(st.integers(min_value=0, max_value=1), min_size=4, max_size=4),
       sc=variances,
       sn=st.lists(variances, min_size=4, max_size=4),
       rh=st.lists(rhos, min_size=4, max_size=4))
@settings(max_examples=150)
def test_tree_nonnegative_for_consistent_cliques(bc, bn, th, sc, sn, rh):
    # each edge information must share the center's variance for the
    # overcount correction to stay dominated
    fims = [fim_clique(CliqueParams(s, sc, r)) for s, r in zip(sn, rh)]
    fi = fi_single(sc)
    got = kl_tree(bc, bn, th, fims, fi)
    assert got >= -1e-12 * max(fi, 1.0)
