"""SABR-type Libor market model with time-dependent skew and smile.

Projection of the model onto uncorrelated swap-rate SABR, exact (AKRS) and
Hagan pricing, full Monte Carlo, CMS spread analytics and calibration.
"""

from ._backend import NAME as BACKEND
from .akrs import AkrsGeometry, akrs_implied_vol, akrs_kernel_G, akrs_price
from .calibration import (
    CoterminalTargets,
    calibrate_coterminal,
    calibrate_spread_corr,
    fit_uncorrelated_sabr,
)
from .cms import SpreadSpec, spread_atm_variance, spread_option_quote
from .errors import (
    CalibrationError,
    ConfigError,
    CurveError,
    ImpliedVolError,
    McError,
    ParameterError,
    PriceAtIntrinsicError,
    QuadratureError,
    SabrLmmError,
)
from .mc import McConfig, bond_martingale, correlation_factors, price_swaption_mc, simulate
from .model import LmmParams, LocalVolKind, local_vol, rate_correlation
from .pricers import (
    HaganSabrParams,
    UncorrelatedSabrParams,
    alpha_normalization_convert,
    bachelier_price,
    black_price,
    cev_price_oracle,
    hagan_implied_vol,
    implied_vol,
)
from .projection import (
    TimeDependentSwapSabr,
    alpha0_sq,
    betaX_profile,
    gX_profile,
    moment_v2,
    nu_estimate,
    project_swap_sabr,
    skew_average,
)
from .tenor import (
    DiscountCurve,
    ForwardCurve,
    MarketCurves,
    SwapSpec,
    TenorStructure,
    annuity,
    discounts_from_forwards,
    swap_rate_and_annuity,
    swap_weights,
)

__version__ = "0.1.0"
