import math

import numpy as np
import pytest

from sabrlmm.errors import ParameterError
from sabrlmm.model import (
    LmmParams,
    LocalVolKind,
    PiecewiseConstantParam,
    local_vol,
    param_at,
    rate_correlation,
)
from sabrlmm.tenor import TenorStructure


@pytest.fixture
def tenor():
    return TenorStructure.regular(15, 2)


def test_rate_correlation_examples(tenor):
    p = LmmParams.build(tenor, 0.01, 0.3, 0.5, 0.1)
    assert rate_correlation(p, 0.0, 3, 3) == 1.0
    # T_i - T_j = 2 years
    assert rate_correlation(p, 0.0, 2, 6) == pytest.approx(math.exp(-0.2), rel=1e-15)
    assert round(rate_correlation(p, 0.0, 2, 6), 6) == 0.818731
    flat = LmmParams.build(tenor, 0.01, 0.3, 0.5, 0.0)
    assert np.all(flat.correlation_matrix(0) == 1.0)


def test_correlation_positive_definite(tenor):
    p = LmmParams.build(tenor, 0.01, 0.3, 0.5, 0.05)
    rho = p.correlation_matrix(0)
    assert rho.shape == (30, 30)
    np.testing.assert_array_equal(rho, rho.T)
    assert np.linalg.eigvalsh(rho).min() > 0


@pytest.mark.parametrize("kind", list(LocalVolKind))
def test_local_vol_limits(tenor, kind):
    L = np.array([0.001, 0.013, 0.05])
    zero = LmmParams.build(tenor, 0.01, 0.3, 0.0, 0.05, kind)
    np.testing.assert_allclose(local_vol(zero, 0.0, 5, L, 0.013), 1.0, rtol=0, atol=1e-15)
    one = LmmParams.build(tenor, 0.01, 0.3, 1.0, 0.05, kind)
    np.testing.assert_allclose(local_vol(one, 0.0, 5, L, 0.013), L / 0.013, rtol=1e-15)
    mid = LmmParams.build(tenor, 0.01, 0.3, 0.37, 0.05, kind)
    assert local_vol(mid, 0.0, 5, 0.013, 0.013) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("kind", list(LocalVolKind))
def test_local_vol_atm_slope(tenor, kind):
    beta, L0, h = 0.37, 0.013, 1e-7
    p = LmmParams.build(tenor, 0.01, 0.3, beta, 0.05, kind)
    slope = (local_vol(p, 0.0, 5, L0 + h, L0) - local_vol(p, 0.0, 5, L0 - h, L0)) / (2 * h)
    assert slope == pytest.approx(beta / L0, rel=1e-6)


def test_param_at_left_closed():
    p = PiecewiseConstantParam([0.1], [0.0, 1.0])
    assert param_at(p, 0.0) == 0.1
    q = PiecewiseConstantParam([0.1, 0.2], [0.0, 1.0, 2.0])
    assert param_at(q, 1.0) == 0.2
    with pytest.raises(ParameterError):
        param_at(q, 2.0 + 1e-12)


def test_lookup_after_fixing_is_an_error(tenor):
    p = LmmParams.build(tenor, 0.01, 0.3, 0.5, 0.05)
    # Libor 2 fixes at T_2 = 1.0
    with pytest.raises(ParameterError):
        param_at(p.libor_param("g", 2), 1.0)


@pytest.mark.parametrize(
    "kw",
    [dict(g=-0.01), dict(nu=-0.1), dict(skew=1.5), dict(skew=-0.1), dict(corr_decay=-1.0)],
)
def test_bounds_rejected(tenor, kw):
    args = dict(g=0.01, nu=0.3, skew=0.5, corr_decay=0.05)
    args.update(kw)
    with pytest.raises(ParameterError):
        LmmParams.build(tenor, args["g"], args["nu"], args["skew"], args["corr_decay"])


def test_per_interval_input(tenor):
    g = [0.0] + [[0.01 + 0.001 * l for l in range(i)] for i in range(1, 30)]
    p = LmmParams.build(tenor, g, 0.3, 0.5, 0.05)
    assert p.g[5, 3] == pytest.approx(0.013)
    assert np.isnan(p.g[5, 5])
    with pytest.raises(ParameterError):
        LmmParams.build(tenor, [0.0, [0.1, 0.2]] + [0.1] * 28, 0.3, 0.5, 0.05)
