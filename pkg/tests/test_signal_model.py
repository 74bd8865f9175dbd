import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noiseradar.exceptions import DomainError
from noiseradar.signal_model import (CovarianceSpec, IqBatch, Sign, build_covariance,
                                     diagonalized_form, quadratic_form_matrix, sample_batch,
                                     sample_channels, simplified_covariance, whitening_matrix)
from noiseradar.streams import CounterStream
from noiseradar.vgamma import c_plus_minus

RHOS = np.round(np.arange(10) * 0.1, 12)


@pytest.mark.parametrize("sign", list(Sign))
def test_uncorrelated_is_identity(sign):
    for phi in (0.0, 1.0, -2.5):
        assert np.array_equal(build_covariance(CovarianceSpec(1, 1, 0.0, phi, sign)), np.eye(4))


def test_qtms_pattern():
    cov = simplified_covariance(0.4, "qtms")
    assert cov[0, 2] == pytest.approx(0.4) and cov[1, 3] == pytest.approx(-0.4)
    assert cov[0, 3] == 0 and cov[1, 2] == 0
    np.testing.assert_array_equal(cov, cov.T)
    nr = simplified_covariance(0.4, "noise_radar")
    assert nr[1, 3] == pytest.approx(0.4)


@pytest.mark.parametrize("sign", list(Sign))
@given(phi=st.floats(-math.pi, math.pi), rho=st.floats(0, 0.99),
       s1=st.floats(0.1, 5), s2=st.floats(0.1, 5))
@settings(max_examples=40, deadline=None)
def test_determinant(sign, phi, rho, s1, s2):
    det = np.linalg.det(build_covariance(CovarianceSpec(s1, s2, rho, phi, sign)))
    assert det == pytest.approx(s1 ** 4 * s2 ** 4 * (1 - rho ** 2) ** 2, rel=1e-9)
    np.linalg.cholesky(build_covariance(CovarianceSpec(s1, s2, rho, phi, sign)))


def test_rho_one_rejected():
    with pytest.raises(DomainError):
        CovarianceSpec(rho=1.0)
    with pytest.raises(DomainError):
        CovarianceSpec(sigma1=0.0)
    with pytest.raises(DomainError):
        whitening_matrix(1.0)
    with pytest.raises(DomainError):
        quadratic_form_matrix(1.0)


def test_whitening_at_zero_and_half():
    b0 = whitening_matrix(0.0)
    want = np.array([[1, 0, 1, 0], [0, 1, 0, -1], [1, 0, -1, 0], [0, 1, 0, 1]]) / math.sqrt(2)
    np.testing.assert_allclose(b0, want, atol=1e-16)
    # entries are (1/sqrt 2)/sqrt(1 +/- rho): 1/sqrt 3 and 1 at rho = 0.5
    b = whitening_matrix(0.5)
    assert b[0, 0] == pytest.approx(0.57735, abs=1e-5) and b[1, 3] == pytest.approx(-0.57735, abs=1e-5)
    assert b[2, 0] == pytest.approx(1.0, abs=1e-15) and b[2, 2] == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("sign", list(Sign))
def test_whitening_identity(sign):
    for rho in RHOS:
        b = whitening_matrix(rho, sign)
        assert np.abs(b @ simplified_covariance(rho, sign) @ b.T - np.eye(4)).max() <= 1e-12


@pytest.mark.parametrize("sign", list(Sign))
def test_simultaneous_diagonalization(sign):
    for rho in RHOS:
        for kappa in RHOS:
            cp, cm = c_plus_minus(rho, kappa)
            d = diagonalized_form(rho, kappa, sign)
            assert np.abs(d - np.diag([cp, cp, -cm, -cm])).max() <= 1e-12


def test_transformed_eigenvalues():
    cp, cm = c_plus_minus(0.3, 0.2)
    assert (cp, cm) == pytest.approx((0.52, 0.42), abs=1e-15)
    eig = np.sort(np.linalg.eigvalsh(diagonalized_form(0.3, 0.2)))
    np.testing.assert_allclose(eig, [-0.42, -0.42, 0.52, 0.52], atol=1e-12)


def test_quadratic_form_examples():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    a = quadratic_form_matrix(0.0)
    assert np.all(np.diag(a) == 0)
    assert x @ a @ x == pytest.approx(1 * 3 - 2 * 4)
    assert x @ quadratic_form_matrix(0.0, "noise_radar") @ x == pytest.approx(1 * 3 + 2 * 4)
    ones = np.ones(4)
    assert ones @ quadratic_form_matrix(0.5, "noise_radar") @ ones == pytest.approx(1.0)


def test_sample_covariance_large():
    for sign in Sign:
        spec = CovarianceSpec(1.0, 2.0, 0.3, math.pi / 4, sign)
        x = sample_batch(spec, 1_000_000, CounterStream(3)).channels
        emp = x.T @ x / x.shape[0]
        # compare on the correlation scale, where each entry's sampling error is O(1e-3)
        scale = np.sqrt(np.outer(np.diag(build_covariance(spec)), np.diag(build_covariance(spec))))
        assert np.abs((emp - build_covariance(spec)) / scale).max() <= 5e-3


def test_independence_at_zero_correlation():
    x = sample_batch(CovarianceSpec(), 1_000_000, CounterStream(4)).channels
    for i, j in ((0, 2), (1, 3)):
        assert abs(np.mean(x[:, i] * x[:, j])) <= 4 / math.sqrt(1e6)


def test_sampling_is_deterministic():
    spec = CovarianceSpec(rho=0.6, phi=0.2)
    a = sample_batch(spec, 50, CounterStream(8).split(2))
    b = sample_batch(spec, 50, CounterStream(8).split(2))
    assert np.array_equal(a.channels, b.channels)


def test_sample_channels_matches_sample_batch():
    spec = CovarianceSpec(1.5, 0.5, 0.4, 0.3, "noise_radar")
    root = CounterStream(10).split(1)
    stack = sample_channels(spec, 6, root, [0, 4, 9])
    for r, i in enumerate([0, 4, 9]):
        np.testing.assert_array_equal(stack[r], sample_batch(spec, 6, root.split(i)).channels)


def test_iq_batch_validation():
    with pytest.raises(DomainError):
        IqBatch(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        IqBatch(np.zeros((0, 4)))
    with pytest.raises(DomainError):
        IqBatch(np.array([[0, 0, np.nan, 0]]))
    b = IqBatch(np.zeros((2, 4)))
    assert b.n == 2
    with pytest.raises(ValueError):
        b.channels[0, 0] = 1.0


def test_sign_parse():
    assert Sign.parse("QTMS") is Sign.QTMS
    assert Sign.parse("noise-radar") is Sign.NOISE_RADAR
    assert Sign.parse(1) is Sign.NOISE_RADAR
    with pytest.raises(DomainError):
        Sign.parse("x")
