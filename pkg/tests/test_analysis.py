import numpy as np
import pytest

from casimir_gratings.analysis import peak_stats, power_law_fit, ratio_rho
from casimir_gratings.curves import Discontinuity, ForceCurve
from casimir_gratings.errors import DomainError, UnderdeterminedError


def test_exact_power_law():
    fit = power_law_fit([(1, 8), (2, 1), (4, 0.125)])
    assert fit.exponent == pytest.approx(-3.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(8.0, rel=1e-12, abs=0)
    assert fit.r_squared == 1.0
    assert fit.sigma_exponent == pytest.approx(0.0, abs=1e-12)
    assert fit(3.0) == pytest.approx(8.0 / 27, rel=1e-12, abs=0)


def test_noisy_power_law_monte_carlo():
    rng = np.random.default_rng(411)
    x = np.geomspace(60e-9, 600e-9, 10)
    slopes = []
    for _ in range(200):
        y = x**-4.11 * (1 + 0.01 * rng.standard_normal(x.size))
        fit = power_law_fit(zip(x, y))
        slopes.append(fit.exponent)
        assert 0 <= fit.r_squared <= 1
    slopes = np.array(slopes)
    assert np.all(np.abs(slopes + 4.11) < 0.05)
    assert abs(slopes.mean() + 4.11) < 0.005


def test_rescaling_invariance():
    x = np.array([1.0, 2.0, 3.5, 7.0])
    y = 2.0 * x**-1.7 * np.array([1.0, 1.02, 0.99, 1.01])
    a = power_law_fit(zip(x, y))
    b = power_law_fit(zip(1e-7 * x, 1e9 * y))
    assert b.exponent == pytest.approx(a.exponent, rel=1e-10, abs=0)
    assert b.r_squared == pytest.approx(a.r_squared, rel=1e-10, abs=0)
    assert b.prefactor == pytest.approx(a.prefactor * 1e9 * 1e-7 ** -a.exponent, rel=1e-9, abs=0)


def test_power_law_errors():
    with pytest.raises(DomainError):
        power_law_fit([(1, 1), (2, -1), (3, 1)])
    with pytest.raises(DomainError):
        power_law_fit([(0, 1), (2, 1), (3, 1)])
    with pytest.raises(UnderdeterminedError):
        power_law_fit([(1, 1), (2, 1)])
    with pytest.raises(UnderdeterminedError):
        power_law_fit([(2, 1), (2, 3), (2, 4)])


# --- ratio ------------------------------------------------------------------


def curve(d, F):
    return ForceCurve.from_arrays(d, F=F)


D = np.linspace(0, 1e-6, 11)


def test_rho_identity():
    c = curve(D, 1e-12 * (1 + D * 1e6))
    assert all(r == 1.0 for _, r in ratio_rho(c, c))


def test_rho_common_scale_invariance():
    m = curve(D, 3e-12 + 1e-6 * D)
    p = curve(D, 2e-12 * np.ones(11))
    a = ratio_rho(m, p)
    b = ratio_rho(m.scaled(7.5), p.scaled(7.5))
    assert [x for x, _ in a] == [x for x, _ in b]
    assert np.allclose([r for _, r in a], [r for _, r in b], rtol=1e-14, atol=0)


def test_rho_unbounded_below_floor():
    p = curve(D, np.where(D < 0.3e-6, 0.0, 2e-12))
    m = curve(D, np.full(11, 1e-12))
    out = ratio_rho(m, p)
    assert [r is None for _, r in out] == list(D < 0.3e-6)
    assert all(r == 0.5 for d, r in out if d >= 0.3e-6)
    explicit = ratio_rho(m, p, floor=5e-12)
    assert all(r is None for _, r in explicit)


def test_rho_grid_mismatch():
    with pytest.raises(DomainError):
        ratio_rho(curve(D, np.ones(11)), curve(D + 1e-9, np.ones(11)))
    with pytest.raises(DomainError):
        ratio_rho(curve(D, np.ones(11)), curve(D[:5], np.ones(5)))


# --- peaks ------------------------------------------------------------------


def gaussian_curve(center=0.43e-6, width=40e-9, n=301, lo=0.0, hi=0.9e-6, offset=0.0):
    d = np.linspace(lo, hi, n)
    g = 5.0 * np.exp(-0.5 * ((d - center) / width) ** 2) + offset
    return ForceCurve.from_arrays(d, F_grad=g)


def test_gaussian_peak():
    width = 40e-9
    st = peak_stats(gaussian_curve(width=width))
    assert st.asymmetry < 1e-3
    assert st.fwhm == pytest.approx(2 * np.sqrt(2 * np.log(2)) * width, rel=0.01, abs=0)
    assert st.location == pytest.approx(0.43e-6, abs=1e-10)
    assert st.height == pytest.approx(5.0, rel=1e-3, abs=0)


def test_off_grid_peak_location():
    st = peak_stats(gaussian_curve(center=0.4312e-6))
    assert st.location == pytest.approx(0.4312e-6, abs=0.2e-9)


def test_skewed_peak_is_asymmetric():
    d = np.linspace(0, 1e-6, 401)
    g = np.where(d < 0.5e-6, np.exp(-0.5 * ((d - 0.5e-6) / 20e-9) ** 2), np.exp(-0.5 * ((d - 0.5e-6) / 80e-9) ** 2))
    st = peak_stats(ForceCurve.from_arrays(d, F_grad=g))
    assert st.asymmetry > 0.3
    assert 0 <= st.asymmetry <= 1


def test_location_invariant_under_constant_shift():
    a = peak_stats(gaussian_curve(center=0.4312e-6))
    b = peak_stats(gaussian_curve(center=0.4312e-6, offset=0.7))
    assert b.location == pytest.approx(a.location, abs=1e-15)


def test_peak_errors():
    c = gaussian_curve()
    with pytest.raises(DomainError):
        peak_stats(c.with_(discontinuities=(Discontinuity(0.43e-6, 1e-12),)))
    with pytest.raises(DomainError, match="end"):
        peak_stats(gaussian_curve(center=0.9e-6))
    with pytest.raises(DomainError, match="half-maximum"):
        peak_stats(gaussian_curve(center=0.43e-6, width=400e-9))
    d = np.linspace(0, 1, 5)
    with pytest.raises(DomainError, match="unique"):
        peak_stats(ForceCurve.from_arrays(d, F_grad=[0, 1, 1, 0.5, 0]))
