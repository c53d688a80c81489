"""Optimal-growth economy on a 3-yr grid: output, abatement, damages, welfare.

Cobb-Douglas production with exogenous productivity and decarbonisation
trends, a power-law marginal abatement cost anchored to a declining
backstop price, quadratic damages, CRRA utility and discounted utilitarian
welfare.  Default parameter values follow the 2016R vintage of the DICE
model, recalibrated to a 2023 start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DAMAGE_FRACTION_CAP = 0.999
CAPITAL_FLOOR = 1e-6  # trillion $
CONSUMPTION_FLOOR = 1e-6  # thousand $ per person per year


@dataclass(frozen=True)
class ScenarioPreset:
    """Normative discounting choice paired with a non-CO2 forcing pathway."""

    name: str
    rho: float  # pure rate of time preference, yr^-1
    eta: float  # elasticity of marginal utility
    fext_id: str  # which fext_<id>.csv drives non-CO2 forcing


SCENARIO_PRESETS: dict[str, ScenarioPreset] = {
    "optimal": ScenarioPreset("optimal", 0.015, 1.45, "optimal"),
    "wb2c": ScenarioPreset("wb2c", 0.0035, 0.35, "wb2c"),
    "p15c": ScenarioPreset("p15c", 0.0012, 0.12, "p15c"),
    "rennert": ScenarioPreset("rennert", 0.002, 1.24, "rennert"),
}


@dataclass(frozen=True)
class EconParams:
    """Structural and calibration parameters of the growth economy."""

    rho: float
    eta: float
    gamma_out: float = 0.3
    depreciation: float = 0.10  # yr^-1
    psi: float = 0.00236  # damage fraction per K^2
    theta2: float = 2.6  # abatement cost exponent
    backstop0: float = 650.0  # $/tCO2 in period 1
    backstop_decline: float = 0.005051  # yr^-1 fractional price decline
    sigma0: float = 0.3237505528527201  # kgCO2 per $ of gross output, period 1
    sigma_growth0: float = -0.0152  # yr^-1 initial intensity decline
    sigma_growth_decline: float = 0.005  # yr^-1 acceleration of the decline rate
    tfp0: float = 5.0
    tfp_growth0: float = 0.0456  # per-period growth in period 1
    tfp_growth_decline: float = 0.005  # yr^-1 decay of productivity growth
    k0: float = 341.0  # trillion $
    mu0: float = 0.15
    mu_ramp_slope: float = 0.15  # per-period widening of the abatement cap
    mu_cap_late: float = 1.2
    afolu_base: float = 1.54
    afolu_slope: float = 0.0464
    afolu_decline: float = 0.189
    afolu_center: float = 35.0
    n_periods: int = 160
    dt: float = 3.0
    start_year: int = 2023
    savings_pin_periods: int = 10
    savings_upper: float = 0.95

    def __post_init__(self) -> None:
        if not 0 < self.gamma_out < 1:
            raise ValueError("gamma_out must lie in (0, 1)")
        if self.eta < 0 or self.rho <= -1:
            raise ValueError("invalid discounting parameters")
        if self.theta2 <= 1:
            raise ValueError("theta2 must exceed 1 for a convex abatement cost")
        if self.n_periods < 2 or self.dt <= 0:
            raise ValueError("need at least two periods of positive length")


def gross_output(tfp: float, capital: float, labour: float, gamma_out: float = 0.3):
    """Cobb-Douglas gross output A * K^gamma * L^(1-gamma) (trillion $/yr)."""
    return tfp * capital**gamma_out * labour ** (1.0 - gamma_out)


def calibrate_tfp(y0: float, k0: float, l0: float, gamma_out: float = 0.3) -> float:
    """Productivity level that reproduces first-period gross output exactly."""
    if min(y0, k0, l0) <= 0:
        raise ValueError("calibration inputs must be positive")
    return y0 / (k0**gamma_out * l0 ** (1.0 - gamma_out))


def calibrate_sigma0(e0: float, y0: float, mu0: float) -> float:
    """Emission intensity such that sigma0 * y0 * (1 - mu0) equals e0."""
    return e0 / (y0 * (1.0 - mu0))


def emissions_ffi(sigma_t: float, y_gross: float, mu: float):
    """Fossil-and-industry emissions sigma * Y_gross * (1 - mu), GtCO2/yr."""
    return sigma_t * y_gross * (1.0 - mu)


def afolu_emissions(
    e_ffi: float,
    period: int,
    *,
    base: float = 1.54,
    slope: float = 0.0464,
    decline: float = 0.189,
    center: float = 35.0,
):
    """Land-use CO2 emissions tied to industrial activity, phased out logistically.

    ``period`` is 1-based; the logistic window l(t) = 1 - 1/(1+exp(-(t-center)))
    retires the term around period ~35.
    """
    window = 1.0 - 1.0 / (1.0 + np.exp(-(period - center)))
    return (base + slope * e_ffi - decline * period) * window


def mu_bounds(
    period: int, *, slope: float = 0.15, cap: float = 1.2, mu0: float = 0.15
) -> tuple[float, float]:
    """Abatement-control box for one period: pinned in period 1, widening after.

    The cap follows min(slope * t, cap), reaching full net-negative headroom
    once slope * t crosses the late cap.
    """
    if period < 1:
        raise ValueError("periods are 1-based")
    if period == 1:
        return (mu0, mu0)
    return (0.0, min(slope * period, cap))


@lru_cache(maxsize=None)
def _exogenous_paths(params: EconParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-period TFP, emission intensity and backstop price (deterministic)."""
    n, dt = params.n_periods, params.dt
    periods = np.arange(n)
    tfp = np.empty(n)
    tfp[0] = params.tfp0
    growth = params.tfp_growth0 * np.exp(-params.tfp_growth_decline * dt * periods)
    for i in range(1, n):
        tfp[i] = tfp[i - 1] / (1.0 - growth[i - 1])
    gsig = params.sigma_growth0 * (1.0 + params.sigma_growth_decline) ** (dt * periods)
    sigma = params.sigma0 * np.exp(np.concatenate(([0.0], np.cumsum(gsig[:-1] * dt))))
    backstop = params.backstop0 * (1.0 - params.backstop_decline) ** (dt * periods)
    return tfp, sigma, backstop


def tfp_path(params: EconParams) -> np.ndarray:
    return _exogenous_paths(params)[0].copy()

def sigma_path(params: EconParams) -> np.ndarray:
    return _exogenous_paths(params)[1].copy()

def backstop_path(params: EconParams) -> np.ndarray:
    return _exogenous_paths(params)[2].copy()


def theta1_path(params: EconParams) -> np.ndarray:
    """Abatement cost coefficient backstop * sigma / (1000 * theta2) per period."""
    _, sigma, backstop = _exogenous_paths(params)
    return backstop * sigma / (1000.0 * params.theta2)


def abatement_cost_fraction(mu: float, period: int, params: EconParams):
    """Abatement spending as a fraction of gross output, theta1(t) * mu^theta2."""
    if period < 1 or period > params.n_periods:
        raise ValueError("period outside the model horizon")
    return theta1_path(params)[period - 1] * mu**params.theta2


def damage_fraction(t1: float, psi: float):
    """Quadratic damage share psi * T1^2, clamped below 1."""
    return np.minimum(psi * np.square(t1), DAMAGE_FRACTION_CAP)


def capital_step(capital: float, y_net: float, s: float, dt: float, depreciation: float):
    """Next-period capital (1-delta)^dt * K + dt * s * Y_net, floored above zero."""
    return np.maximum((1.0 - depreciation) ** dt * capital + dt * s * y_net, CAPITAL_FLOOR)


def period_utility(c_percap: float, eta: float):
    """CRRA utility of per-capita consumption; log branch at eta = 1."""
    c = np.asarray(c_percap, dtype=float)
    if np.any(c <= 0):
        raise ValueError("per-capita consumption must be positive")
    if eta == 1.0:
        out = np.log(c)
    else:
        out = (np.power(c, 1.0 - eta) - 1.0) / (1.0 - eta)
    return out if out.ndim else float(out)


def discount_factors(rho: float, n_periods: int, dt: float) -> np.ndarray:
    """Period weights (1+rho)^(-dt*(t-1)), t = 1..N."""
    return (1.0 + rho) ** (-dt * np.arange(n_periods))


def welfare(
    c_percap: np.ndarray, labour: np.ndarray, rho: float, eta: float, dt: float
) -> float:
    """Discounted utilitarian welfare sum_t L_t * u(c_t) * (1+rho)^(-dt(t-1))."""
    c = np.asarray(c_percap, dtype=float)
    lab = np.asarray(labour, dtype=float)
    if c.shape != lab.shape:
        raise ValueError("consumption and labour series must align")
    return float(np.sum(lab * period_utility(c, eta) * discount_factors(rho, len(c), dt)))


def ramsey_rate(rho_pct: float, eta: float, growth_pct: float) -> float:
    """Consumption discount rate rho + eta * g, all in percent per year."""
    return rho_pct + eta * growth_pct


def optimal_longrun_savings(params: EconParams) -> float:
    """Steady-state optimal savings rate used to pin the terminal periods."""
    return (
        (params.depreciation + 0.004)
        / (params.depreciation + 0.004 * params.eta + params.rho)
        * params.gamma_out
    )


def extend_population(years: np.ndarray, millions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extend a population series ending by 2300 out to 2500.

    The mean per-period growth rate over 2250-2300 tapers linearly to zero
    at 2500 and is compounded period by period.  Input already extending
    beyond 2300 is rejected.
    """
    years = np.asarray(years, dtype=float)
    millions = np.asarray(millions, dtype=float)
    if len(years) != len(millions) or len(years) < 3:
        raise ValueError("population series must pair years with values")
    steps = np.diff(years)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9:
        raise ValueError("population series must be on a uniform increasing grid")
    dt = float(steps[0])
    if years[-1] > 2300.0:
        raise ValueError("series already extends beyond 2300; nothing to extend")
    window = (years[:-1] >= 2250.0) & (years[:-1] < 2300.0)
    if not np.any(window):
        raise ValueError("series must cover the 2250-2300 window")
    growth = millions[1:] / millions[:-1] - 1.0
    g_star = float(np.mean(growth[window]))
    ext_years = np.arange(years[-1] + dt, 2500.0 + dt / 2, dt)
    values = [millions[-1]]
    for y in ext_years:
        taper = min(max((2500.0 - (y - dt)) / 200.0, 0.0), 1.0)
        values.append(values[-1] * (1.0 + g_star * taper))
    return np.concatenate([years, ext_years]), np.concatenate([millions, values[1:]])


def dice2016r_defaults(
    rho: float,
    eta: float,
    *,
    y0: float = 133.0,
    k0: float = 341.0,
    e0: float = 36.6,
    l0: float = 8045.0,
    n_periods: int = 160,
    dt: float = 3.0,
    start_year: int = 2023,
) -> EconParams:
    """Named preset: DICE-2016R structural defaults recalibrated to 2023 levels.

    Productivity and emission intensity are calibrated so that first-period
    gross output and industrial emissions reproduce (y0, e0) at the pinned
    mu0.  Growth and decay rates follow 2016R restated per year, except the
    intensity decline accelerates (rather than flattens) so the no-policy
    economy decarbonizes over the long run; 2016R's flattening tail leaves
    tens of GtCO2/yr of gross emissions after 2300, giving the planner an
    implausibly large standing carbon-removal capacity at mu > 1.
    """
    return EconParams(
        rho=rho,
        eta=eta,
        tfp0=calibrate_tfp(y0, k0, l0),
        sigma0=calibrate_sigma0(e0, y0, 0.15),
        k0=k0,
        n_periods=n_periods,
        dt=dt,
        start_year=start_year,
    )
