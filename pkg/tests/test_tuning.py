"""Closed-form acceptance limits, efficiency curves, and their optima."""

import numpy as np
import pytest
from scipy.special import ndtr

from kinkhmc.tuning import acceptance_limit, efficiency_band, efficiency_curve


def test_acceptance_limit_values():
    assert acceptance_limit(1, 0.0) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(acceptance_limit(1, 1.0),
                               2.0 * ndtr(-0.5), rtol=1e-15)
    np.testing.assert_allclose(acceptance_limit(2, 1.5, sigma=4.0),
                               2.0 * ndtr(-0.5 * 1.5**2 * 2.0), rtol=1e-15)
    # vectorized and strictly decreasing
    l = np.linspace(0.0, 5.0, 50)
    a = acceptance_limit(1, l)
    assert a.shape == (50,)
    assert np.all(np.diff(a) < 0)


def test_acceptance_limit_validation():
    with pytest.raises(ValueError):
        acceptance_limit(3, 1.0)
    with pytest.raises(ValueError):
        acceptance_limit(1, 1.0, sigma=0.0)
    with pytest.raises(ValueError):
        acceptance_limit(1, -0.5)


def test_optimal_acceptance_rates():
    c1 = efficiency_curve(1)
    c2 = efficiency_curve(2)
    np.testing.assert_allclose(c1.a_opt, 0.452176, atol=2e-6)
    np.testing.assert_allclose(c2.a_opt, 0.651260, atol=2e-6)
    np.testing.assert_allclose(c1.l_opt, 1.503583, atol=2e-6)
    np.testing.assert_allclose(c2.l_opt, 0.950803, atol=2e-6)
    # the optimum beats every grid point
    assert c1.eff_opt >= c1.efficiency.max()
    assert c2.eff_opt >= c2.efficiency.max()


def test_optimum_invariant_under_sigma():
    for order in (1, 2):
        base = efficiency_curve(order, sigma=1.0)
        for sigma in (0.25, 25.0):
            c = efficiency_curve(order, sigma=sigma)
            np.testing.assert_allclose(c.a_opt, base.a_opt, atol=1e-8)
            # the optimal l rescales with sigma so that l**order sqrt(sigma)
            # stays put
            np.testing.assert_allclose(
                c.l_opt, base.l_opt * sigma**(-0.5 / order), rtol=1e-7)


def test_efficiency_unimodal_on_grid():
    for order in (1, 2):
        c = efficiency_curve(order, n_grid=2048)
        d = np.diff(c.efficiency)
        sign_changes = np.sum(np.diff(np.sign(d[d != 0])) != 0)
        assert sign_changes == 1


def test_efficiency_band_brackets_optimum():
    for order in (1, 2):
        c = efficiency_curve(order)
        lo, hi = efficiency_band(order, level=0.9)
        assert lo < c.a_opt < hi
        # tighter level gives a narrower band
        lo2, hi2 = efficiency_band(order, level=0.99)
        assert lo < lo2 < hi2 < hi
    with pytest.raises(ValueError):
        efficiency_band(1, level=1.5)


def test_seventy_percent_band_contains_recommended_ranges():
    """The loose tuning ranges sit inside the 70%-of-optimum band, with the
    upper endpoints nearly on it."""
    lo1, hi1 = efficiency_band(1, level=0.70)
    assert lo1 <= 0.4 and hi1 >= 0.75
    np.testing.assert_allclose((lo1, hi1), (0.1758, 0.7515), atol=2e-4)
    lo2, hi2 = efficiency_band(2, level=0.70)
    assert lo2 <= 0.6 and hi2 >= 0.9
    np.testing.assert_allclose((lo2, hi2), (0.3015, 0.9096), atol=2e-4)


@pytest.mark.xfail(strict=True, reason="the 95%-of-optimum band of l*a(l) is "
                   "narrower than the practical ranges [0.4, 0.75] and "
                   "[0.6, 0.9] often recommended; those match the ~70% level "
                   "instead (see the passing test above)")
def test_ninety_five_percent_band_contains_recommended_ranges():
    lo1, hi1 = efficiency_band(1, level=0.95)
    assert lo1 <= 0.4 and hi1 >= 0.75
    lo2, hi2 = efficiency_band(2, level=0.95)
    assert lo2 <= 0.6 and hi2 >= 0.9
