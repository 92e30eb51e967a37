"""Adaptive quadrature engine: exactness, honesty of error estimates, tails."""
import math

import numpy as np
import pytest

from mhcov import ParameterError, QuadratureSpec, Scheme, adaptive_gk, composite_simpson, integrate
from mhcov.quadrature import cumulative_gk, exp_tail_bound


def test_polynomial_is_exact():
    value, err = adaptive_gk(lambda x: 7 * x**3 - x + 2, 0.0, 1.0)
    assert abs(value - (7 / 4 - 1 / 2 + 2)) < 1e-14
    assert err < 1e-12


def test_gaussian_mass_and_honest_error():
    f = lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    value, err = adaptive_gk(f, -8.0, 8.0, abs_tol=1e-12, rel_tol=1e-12)
    true = 1.0 - 2 * 6.220960574271786e-16  # 2 Phi(-8) tail mass
    assert abs(value - true) <= max(err, 1e-13)


def test_reversed_limits_negate():
    f = lambda x: x * x
    forward, _ = adaptive_gk(f, 0.0, 2.0)
    backward, _ = adaptive_gk(f, 2.0, 0.0)
    assert backward == -forward


def test_kink_with_breakpoint_converges():
    f = lambda x: np.abs(x - 0.3)
    value, err = adaptive_gk(f, 0.0, 1.0, breakpoints=(0.3,))
    true = 0.5 * (0.3**2 + 0.7**2)
    assert abs(value - true) < 1e-12
    assert err < 1e-9


def test_narrow_spike_needs_breakpoint_and_budget():
    # A 1e-5-wide bump is invisible to the initial Kronrod nodes unless a
    # breakpoint lands a panel edge on it; with the breakpoint but a starved
    # subdivision budget the integrator must refuse rather than lie.
    from mhcov import NumericError

    f = lambda x: np.exp(-0.5 * ((x - 0.7071) / 1e-5) ** 2)
    true = 1e-5 * math.sqrt(2 * math.pi)
    bracket = (0.7071 - 5e-5, 0.7071 + 5e-5)
    blind, _ = adaptive_gk(f, 0.0, 1.0, abs_tol=1e-12, rel_tol=1e-12)
    assert blind == 0.0
    value, err = adaptive_gk(f, 0.0, 1.0, breakpoints=bracket, abs_tol=1e-12, rel_tol=1e-12)
    assert abs(value - true) < 1e-10
    with pytest.raises(NumericError) as exc:
        adaptive_gk(
            f, 0.0, 1.0, breakpoints=bracket, max_subdivisions=4, abs_tol=1e-15, rel_tol=1e-15
        )
    assert exc.value.achieved_tol > 0.0


def test_composite_simpson_matches_gk():
    f = lambda x: np.sin(x) ** 2 + 0.1 * x
    gk, _ = adaptive_gk(f, 0.0, 3.0, abs_tol=1e-12, rel_tol=1e-12)
    simp, err = composite_simpson(f, 0.0, 3.0, abs_tol=1e-10, rel_tol=1e-10)
    assert abs(simp - gk) < 1e-9
    assert err < 1e-9


def test_integrate_dispatches_on_scheme():
    f = lambda x: np.exp(-x)
    v_gk = integrate(f, 0.0, 5.0, QuadratureSpec(scheme=Scheme.ADAPTIVE_GK))[0]
    v_simp = integrate(f, 0.0, 5.0, QuadratureSpec(scheme=Scheme.COMPOSITE_SIMPSON))[0]
    assert abs(v_gk - (1 - math.exp(-5))) < 1e-10
    assert abs(v_simp - v_gk) < 1e-8


def test_cumulative_gk_matches_cdf():
    grid = np.linspace(-6.0, 6.0, 301)
    pdf = lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    cum, err = cumulative_gk(pdf, grid)
    assert cum[0] == 0.0
    assert np.all(np.diff(cum) >= 0.0)
    from scipy.special import ndtr

    true = ndtr(grid) - ndtr(grid[0])
    assert np.max(np.abs(cum - true)) < 1e-10
    assert err < 1e-9


def test_exp_tail_bound_dominates_true_tail():
    g = lambda x: np.exp(-np.abs(x))
    true_tail = math.exp(-8.0)
    for order in (0, 1, 2):
        bound = exp_tail_bound(g, 8.0, order=order)
        # the x^order moment tail only grows the truth
        assert bound >= true_tail * (0.5 if order == 0 else 1e-3)
        assert np.isfinite(bound)


def test_exp_tail_bound_survives_non_decaying_integrand():
    bound = exp_tail_bound(lambda x: np.ones_like(x), 5.0, order=0)
    assert np.isfinite(bound) and bound > 0.0


def test_spec_validation():
    with pytest.raises(ParameterError):
        QuadratureSpec(abs_tol=-1.0)
    with pytest.raises(ParameterError):
        QuadratureSpec(truncation=-3.0)
    spec = QuadratureSpec(truncation=12.0)
    assert spec.with_truncation(20.0).truncation == 20.0
    tighter = spec.tightened(10.0)
    assert tighter.abs_tol == spec.abs_tol / 10.0
