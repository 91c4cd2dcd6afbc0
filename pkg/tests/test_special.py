import math
import warnings

import numpy as np
import pytest
from scipy import integrate, special

from first_crossing.special import (
    AIRY_SWITCH,
    SeriesCapError,
    airy_ai,
    _airy_asymptotic,
    _airy_maclaurin,
    airy_ai_prime0,
    gamma_lt,
    normal_cdf,
    phi1,
    psi1,
)


def airy_contour(z):
    """Ai(z) from the steepest-descent contour through the rays at +-60 degrees."""
    w = np.exp(1j * np.pi / 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda r: (w * np.exp(-r**3 / 3 - z * r * w)).imag, 0, np.inf,
                                epsabs=1e-15, epsrel=1e-13, limit=200)
    return val / np.pi


@pytest.mark.parametrize("z", np.linspace(0, 6, 25))
def test_airy_matches_integral_representation(z):
    assert abs(airy_ai(z) - airy_contour(z)) < 1e-10


@pytest.mark.parametrize("z", [0.0, 0.5, 2.0, 5.9, 6.1, 8.0, 12.0, 20.0])
def test_airy_relative_accuracy_against_scipy(z):
    ref = special.airy(z)[0]
    assert abs(airy_ai(z) - ref) <= 1e-10 * ref + 1e-14


def test_airy_branches_agree_at_the_seam():
    assert abs(_airy_maclaurin(AIRY_SWITCH) - _airy_asymptotic(AIRY_SWITCH)) < 1e-12


def test_airy_decreasing_convex_and_log_concave():
    # Ai'' = z Ai >= 0 makes Ai convex; (log Ai)'' = z - (Ai'/Ai)^2 < 0 on [0, inf)
    z = np.arange(0, 8.0001, 0.1)
    vals = np.array([airy_ai(v) for v in z])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)
    assert np.all(np.diff(vals, 2) > 0)
    assert np.all(np.diff(np.log(vals), 2) < 0)


def test_airy_edge_values():
    assert airy_ai(0.0) == pytest.approx(0.355028053887817, abs=1e-15)
    assert airy_ai_prime0() == pytest.approx(special.airy(0.0)[1], abs=1e-15)
    assert airy_ai(math.inf) == 0.0
    with pytest.raises(ValueError):
        airy_ai(-1.0)


@pytest.mark.parametrize("z", [-2.0, -0.3, 0.0, 0.1, 1.0, 2.5, 4.0])
def test_phi1_is_erfi_integral(z):
    ref = math.sqrt(math.pi) / 2 * special.erfi(z)
    res = phi1(z)
    assert res.value == pytest.approx(ref, rel=1e-13, abs=1e-15)
    assert res.truncation_bound <= 1e-14 * max(1.0, abs(res.value))


@pytest.mark.parametrize("z", [0.0, 0.4, 1.0, 2.0, 3.0])
def test_psi1_matches_nested_quadrature(z):
    inner = lambda u: math.exp(u * u) * math.sqrt(math.pi) / 2 * math.erf(u)
    ref = 2 * integrate.quad(inner, 0, z, epsrel=1e-13)[0]
    assert psi1(z).value == pytest.approx(ref, rel=1e-11, abs=1e-15)


def test_series_cap_is_an_error(monkeypatch):
    import first_crossing.special as sp

    monkeypatch.setattr(sp, "SERIES_CAP", 5)
    with pytest.raises(SeriesCapError):
        sp.phi1(3.0)


def test_series_domain():
    assert phi1(10.0).terms_used <= 500
    with pytest.raises(ValueError):
        psi1(10.5)


def test_series_symmetry():
    for z in (0.3, 1.7, 4.0):
        assert phi1(-z).value == -phi1(z).value
        assert psi1(-z).value == psi1(z).value
    assert phi1(0).value == 0 and psi1(0).value == 0


def test_normal_cdf_tails_without_cancellation():
    assert normal_cdf(-40.0) == pytest.approx(special.ndtr(-40.0), rel=1e-12)
    assert np.allclose(normal_cdf(np.array([-1.0, 0.0, 1.0])), special.ndtr([-1, 0, 1]))


def test_gamma_lt_examples():
    assert gamma_lt(1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert gamma_lt(1.5, 0.75, 2.0) == pytest.approx(0.125, abs=1e-15)
    shape, rate = 1.5**2 / 0.75, 1.5 / 0.75
    dens = lambda t: special.gdtr(rate, shape, t)  # CDF; transform via integration by parts
    ref = 2.0 * integrate.quad(lambda t: math.exp(-2.0 * t) * dens(t), 0, np.inf)[0]
    assert gamma_lt(1.5, 0.75, 2.0) == pytest.approx(ref, rel=1e-9)


def test_gamma_lt_completely_monotone():
    v = gamma_lt(1.0, 0.6, np.linspace(0, 10, 41))
    assert np.all(np.diff(v) < 0) and np.all(np.diff(v, 2) > 0)


def test_normal_cdf_examples():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(50.0) == 1.0
    ref = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), -np.inf, 1.0,
                         epsabs=1e-15)[0]
    assert abs(normal_cdf(1.0) - ref) < 1e-12


def test_gamma_lt_moments():
    lam = np.array([0.0, 1e-6])
    vals = gamma_lt(2.0, 3.0, lam)
    assert vals[0] == 1.0
    assert (1 - vals[1]) / 1e-6 == pytest.approx(2.0, rel=1e-5)
    with pytest.raises(ValueError):
        gamma_lt(-1.0, 1.0, 1.0)
