import math

import numpy as np
import pytest

from oracles import alpha0_sq_direct, beta_least_squares, skew_average_quadrature
from sabrlmm.akrs import akrs_price
from sabrlmm.errors import ParameterError, PriceAtIntrinsicError
from sabrlmm.model import LmmParams
from sabrlmm.pricers import cev_price_oracle
from sabrlmm.projection import (
    alpha0_sq,
    betaX_profile,
    gX_profile,
    moment_v2,
    nu_estimate,
    project_swap_sabr,
    skew_average,
    time_dependent_params,
)
from sabrlmm.tenor import ForwardCurve, MarketCurves, SwapSpec, TenorStructure, swap_rate_and_annuity, swap_weights


def equal_weight_pair(rate=0.013):
    """Two Libors whose swap weights are exactly equal (floating accruals adjusted)."""
    d0 = 0.5
    d1 = d0 / (1 - d0 * rate)
    tenor = TenorStructure([0.0, 0.5, 1.0, 1.5], accrual_flt=[0.5, d0, d1], accrual_fix=[0.5, 0.5, 0.5])
    return MarketCurves(tenor, ForwardCurve([rate] * 3))


# --------------------------------------------------------------------------- g_X


def test_gx_single_libor(desk_curves, desk_params):
    spec = SwapSpec(7, 7)
    v = swap_weights(spec, desk_curves.tenor, desk_curves.disc)
    np.testing.assert_allclose(gX_profile(spec, desk_curves, desk_params), (v[0] * 0.0013) ** 2, rtol=1e-15)


def test_gx_zero_vol(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0, 0.3, 0.15, 0.05)
    assert np.all(gX_profile(SwapSpec(3, 6), desk_curves, p) == 0.0)


def test_gx_perfect_correlation_equal_g():
    curves = MarketCurves.flat(0.013, 2.0, 2)
    p = LmmParams.build(curves.tenor, 0.1, 0.3, 0.15, 0.0)
    np.testing.assert_allclose(np.sqrt(gX_profile(SwapSpec(1, 3), curves, p)), 0.1, rtol=1e-14)


# --------------------------------------------------------------------------- beta_X


def test_betax_single_libor(desk_curves):
    skew = [0.1 + 0.02 * i for i in range(30)]
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.3, skew, 0.05)
    bx, degenerate = betaX_profile(SwapSpec(9, 9), desk_curves, p)
    np.testing.assert_allclose(bx, skew[9], rtol=1e-14)
    assert not degenerate.any()


def test_betax_zero_skew(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.3, 0.0, 0.05)
    assert np.all(betaX_profile(SwapSpec(4, 29), desk_curves, p)[0] == 0.0)


def test_betax_two_libor_average():
    curves = equal_weight_pair()
    p = LmmParams.build(curves.tenor, 0.01, 0.3, [0.0, 0.2, 0.4], 0.0)
    bx, _ = betaX_profile(SwapSpec(1, 2), curves, p)
    assert bx[0] == pytest.approx(0.3, rel=1e-14)


def test_betax_flat_curve_is_weighted_mean(desk_curves):
    skew = [0.0] + list(np.linspace(0.1, 0.5, 29))
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.3, skew, 0.0)
    spec = SwapSpec(5, 29)
    v = swap_weights(spec, desk_curves.tenor, desk_curves.disc)
    bx, _ = betaX_profile(spec, desk_curves, p)
    np.testing.assert_allclose(bx, v @ np.array(skew[5:30]), rtol=1e-13)


def test_betax_degenerate_interval(desk_curves):
    g = [[0.0] + [0.0013] * (i - 1) if i else 0.0 for i in range(30)]
    g[1] = [0.0]
    p = LmmParams.build(desk_curves.tenor, g, 0.3, 0.15, 0.05)
    bx, degenerate = betaX_profile(SwapSpec(2, 29), desk_curves, p)
    assert degenerate[0] and not degenerate[1:].any()
    assert bx[0] == 0.0


def test_betax_matches_least_squares_for_equal_weights():
    curves = equal_weight_pair()
    p = LmmParams.build(curves.tenor, [0.0, 0.009, 0.012], 0.3, [0.0, 0.2, 0.4], 0.3)
    spec = SwapSpec(1, 2)
    v = swap_weights(spec, curves.tenor, curves.disc)
    S0, _ = swap_rate_and_annuity(spec, curves.tenor, curves.fwd, curves.disc)
    rho = p.correlation_matrix(0, [1, 2])
    ls = beta_least_squares(v, [0.009, 0.012], [0.2, 0.4], [0.013, 0.013], rho, S0)
    assert betaX_profile(spec, curves, p)[0][0] == pytest.approx(ls, abs=1e-7)


# --------------------------------------------------------------------------- moments


def test_moment_v2_deterministic_vol():
    knots = [0.0, 0.5, 1.0]
    assert moment_v2([0.04, 0.09], [0.0, 0.0], knots, 1.0) == pytest.approx(0.5 * 0.13, rel=1e-15)
    assert moment_v2([0.04, 0.09], [0.0, 0.0], knots, 0.75) == pytest.approx(0.02 + 0.25 * 0.09, rel=1e-15)


def test_moment_v2_closed_form_example():
    val = moment_v2([0.04], [0.3], [0.0, 1.0], 1.0)
    assert val == pytest.approx(0.04 * math.exp(0.09) * math.expm1(0.45) / 0.45, rel=1e-15)
    assert round(val, 6) == 0.055274


def test_moment_v2_at_zero():
    assert moment_v2([0.04], [0.3], [0.0, 1.0], 0.0) == 0.0


def test_skew_average_constant():
    assert skew_average([0.3, 0.3], [0.04, 0.01], [0.3, 0.1], [0.0, 1.0, 2.0]) == pytest.approx(0.3, rel=1e-15)


def test_skew_average_piecewise_against_quadrature():
    args = ([0.2, 0.4], [0.04, 0.04], [0.3, 0.3], [0.0, 1.0, 2.0])
    B = skew_average(*args)
    assert 0.3 < B < 0.4
    assert B == pytest.approx(skew_average_quadrature(*args), rel=1e-10)


def test_skew_average_time_dependent_against_quadrature():
    args = ([0.1, 0.5, 0.25], [0.02, 0.05, 0.01], [0.6, 0.2, 0.45], [0.0, 0.7, 1.5, 3.0])
    assert skew_average(*args) == pytest.approx(skew_average_quadrature(*args), rel=1e-10)


def test_skew_average_early_support():
    assert skew_average([0.2, 0.7], [0.04, 0.0], [0.3, 0.3], [0.0, 1.0, 2.0]) == pytest.approx(0.2, rel=1e-15)


def test_skew_average_zero_weight():
    with pytest.raises(ParameterError):
        skew_average([0.2], [0.0], [0.3], [0.0, 1.0])


def test_refined_knots_change_nothing():
    knots = [0.0, 0.5, 1.5, 3.0]
    g2, nu, bx = [0.02, 0.05, 0.01], [0.6, 0.2, 0.45], [0.1, 0.5, 0.25]
    fine = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    rep = lambda a: [a[0], a[0], a[1], a[1], a[2], a[2], a[2]]  # noqa: E731
    assert moment_v2(rep(g2), rep(nu), fine, 3.0) == pytest.approx(moment_v2(g2, nu, knots, 3.0), rel=1e-13)
    assert moment_v2(rep(g2), rep(nu), fine, 2.2) == pytest.approx(moment_v2(g2, nu, knots, 2.2), rel=1e-13)
    assert skew_average(rep(bx), rep(g2), rep(nu), fine) == pytest.approx(
        skew_average(bx, g2, nu, knots), rel=1e-13
    )


# --------------------------------------------------------------------------- alpha(0), nu


def test_alpha0_single_libor():
    curves = MarketCurves.flat(0.013, 5.0, 2)
    p = LmmParams.build(curves.tenor, 0.0013, 0.3, 0.15, 0.05)
    assert math.sqrt(alpha0_sq(SwapSpec(6, 6), curves, p)) == pytest.approx(0.0013, rel=1e-15)


def test_alpha0_zero_vol(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0, 0.3, 0.15, 0.05)
    assert alpha0_sq(SwapSpec(3, 29), desk_curves, p) == 0.0


@pytest.mark.parametrize("n", [1, 10, 29])
def test_alpha0_direct_summation(desk_curves, n):
    rng = np.random.default_rng(n)
    g = [0.0] + [list(0.001 + 0.001 * rng.random(i)) for i in range(1, 30)]
    decay = list(0.02 + 0.1 * rng.random(29))
    p = LmmParams.build(desk_curves.tenor, g, 0.3, 0.15, decay)
    spec = SwapSpec(n, 29)
    v = swap_weights(spec, desk_curves.tenor, desk_curves.disc)
    ref = alpha0_sq_direct(desk_curves.tenor.dates, v, p.g, p.corr_decay, n, spec.indices)
    assert alpha0_sq(spec, desk_curves, p) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("mode", ["exact", "expansion"])
def test_nu_zero(desk_curves, mode):
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.0, 0.15, 0.05)
    assert nu_estimate(SwapSpec(8, 29), desk_curves, p, mode=mode) == 0.0


@pytest.mark.parametrize("nu", [0.05, 0.3, 1.2])
def test_nu_single_rate(desk_curves, nu):
    p = LmmParams.build(desk_curves.tenor, 0.0013, nu, 0.15, 0.05)
    spec = SwapSpec(12, 12)
    assert nu_estimate(spec, desk_curves, p) == pytest.approx(nu, rel=1e-13)
    assert nu_estimate(spec, desk_curves, p, mode="expansion") == pytest.approx(nu, rel=1e-14)
    printed = nu_estimate(spec, desk_curves, p, mode="expansion", printed_formula=True)
    assert printed == pytest.approx(nu / math.sqrt(2), rel=1e-14)


@pytest.mark.parametrize("nu", [0.05, 0.1, 0.2])
def test_nu_expansion_close_to_exact(desk_curves, nu):
    p = LmmParams.build(desk_curves.tenor, 0.0013, nu, 0.15, 0.05)
    for n in (1, 10, 20, 29):
        spec = SwapSpec(n, 29)
        exact = nu_estimate(spec, desk_curves, p)
        assert nu_estimate(spec, desk_curves, p, mode="expansion") == pytest.approx(exact, rel=0.05)


def test_nu_mode_unknown(desk_curves, desk_params):
    with pytest.raises(ValueError):
        nu_estimate(SwapSpec(2, 29), desk_curves, desk_params, mode="guess")


# --------------------------------------------------------------------------- full projection


def test_single_rate_collapse(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0021, 0.27, 0.33, 0.05)
    for n in (1, 14, 29):
        q = project_swap_sabr(SwapSpec(n, n), desk_curves, p)
        assert q.S0 == pytest.approx(desk_curves.forwards[n], rel=1e-15)
        assert q.alpha0 == pytest.approx(0.0021, rel=1e-15)
        assert q.B == pytest.approx(0.33, rel=1e-15)
        assert q.nu == pytest.approx(0.27, rel=1e-13)
        assert q.expiry == desk_curves.tenor.dates[n]


def test_deterministic_projection_prices_as_cev(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.0, 0.0, 0.05)
    q = project_swap_sabr(SwapSpec(10, 29), desk_curves, p)
    assert q.nu == 0.0 and q.B == 0.0
    for K in (0.008, 0.013, 0.018):
        assert akrs_price(q, K) == cev_price_oracle(q.S0, q.alpha0, 0.0, q.expiry, K)


def test_zero_vol_is_price_at_intrinsic(desk_curves):
    p = LmmParams.build(desk_curves.tenor, 0.0, 0.3, 0.15, 0.05)
    with pytest.raises(PriceAtIntrinsicError, match="price at intrinsic"):
        project_swap_sabr(SwapSpec(4, 29), desk_curves, p)


def test_skew_within_profile_bounds(desk_curves):
    rng = np.random.default_rng(3)
    skew = [0.0] + [list(rng.random(i)) for i in range(1, 30)]
    p = LmmParams.build(desk_curves.tenor, 0.0013, 0.3, skew, 0.05)
    for n in (2, 11, 25):
        prof = time_dependent_params(SwapSpec(n, 29), desk_curves, p)
        B = skew_average(prof.betaX, prof.gX_sq, prof.nuX, prof.knots)
        assert prof.betaX.min() - 1e-15 <= B <= prof.betaX.max() + 1e-15


def test_nu_monotone_in_libor_nu(desk_curves):
    base = np.full(30, 0.2)
    spec = SwapSpec(6, 29)
    prev = nu_estimate(spec, desk_curves, LmmParams.build(desk_curves.tenor, 0.0013, list(base), 0.15, 0.05))
    rng = np.random.default_rng(5)
    for _ in range(5):
        base = base + 0.1 * rng.random(30)
        cur = nu_estimate(spec, desk_curves, LmmParams.build(desk_curves.tenor, 0.0013, list(base), 0.15, 0.05))
        assert cur >= prev
        prev = cur
