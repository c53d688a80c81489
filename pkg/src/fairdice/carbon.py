"""Four-pool impulse-response carbon cycle with state-dependent uptake timescales.

Atmospheric CO2 is tracked as four decaying pools (GtCO2 above the
pre-industrial reference).  Sink strength responds to cumulative emissions,
the airborne fraction and warming through the 100-yr integrated impulse
response (iIRF100), which is mapped onto a single lifetime scaling factor
alpha applied to all pools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

GTCO2_PER_GTC = 3.664
DEFAULT_PARTITION = (0.2173, 0.2240, 0.2824, 0.2763)
DEFAULT_LIFETIME = (1.0e9, 394.4, 36.54, 4.304)
DEFAULT_MASS_PER_PPM = 7.821  # GtCO2 per ppm of atmospheric CO2
AIRBORNE_FRACTION_CAP = 1.5


@dataclass(frozen=True)
class CarbonParams:
    """Pool structure, uptake-feedback coefficients and unit conventions.

    The feedback coefficients ``r_u``/``r_a`` are expressed per unit
    cumulative carbon in the convention named by ``cumulative_unit``
    (calibration tables are usually in GtC); state is always carried in
    GtCO2 and converted internally.
    """

    partition: tuple[float, float, float, float] = DEFAULT_PARTITION
    lifetime: tuple[float, float, float, float] = DEFAULT_LIFETIME
    r0: float = 35.0
    r_u: float = 0.019
    r_t: float = 3.5
    r_a: float = 0.0025
    c_ref: float = 278.3
    mass_per_ppm: float = DEFAULT_MASS_PER_PPM
    horizon: float = 100.0
    alpha_max: float = 100.0
    cumulative_unit: str = "GtC"

    def __post_init__(self) -> None:
        if len(self.partition) != 4 or len(self.lifetime) != 4:
            raise ValueError("carbon cycle uses exactly four pools")
        if abs(sum(self.partition) - 1.0) > 1e-6:
            raise ValueError(f"partition fractions sum to {sum(self.partition)}, expected 1")
        if any(tau <= 0 for tau in self.lifetime):
            raise ValueError("pool lifetimes must be positive")
        if self.c_ref <= 0 or self.mass_per_ppm <= 0:
            raise ValueError("c_ref and mass_per_ppm must be positive")
        if self.horizon <= 0 or self.alpha_max <= 1:
            raise ValueError("horizon must be positive and alpha_max > 1")
        if self.cumulative_unit not in ("GtC", "GtCO2"):
            raise ValueError(f"unknown cumulative unit {self.cumulative_unit!r}")

    @property
    def cumulative_scale(self) -> float:
        """GtCO2 -> coefficient unit conversion applied inside compute_iirf100."""
        return 1.0 / GTCO2_PER_GTC if self.cumulative_unit == "GtC" else 1.0


@dataclass(frozen=True)
class CarbonState:
    """Pool burdens (GtCO2) plus cumulative emissions since pre-industrial."""

    pools: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    cumulative: float = 0.0

    @property
    def airborne_fraction(self) -> float:
        """Share of cumulative emissions still in the atmosphere (0 when G = 0)."""
        if self.cumulative == 0.0:
            return 0.0
        return sum(self.pools) / self.cumulative


@dataclass
class ClampDiagnostics:
    """Counts silent clamps applied while evaluating the uptake feedback."""

    iirf_clamps: int = 0
    airborne_clamps: int = 0

    def reset(self) -> None:
        self.iirf_clamps = 0
        self.airborne_clamps = 0


@lru_cache(maxsize=None)
def _g_constants(partition: tuple, lifetime: tuple, horizon: float) -> tuple[float, float]:
    a = np.asarray(partition)
    tau = np.asarray(lifetime)
    x = horizon / tau
    g1 = float(np.sum(a * tau * (1.0 - (1.0 + x) * np.exp(-x))))
    iirf_at_unit_alpha = float(np.sum(a * tau * -np.expm1(-x)))
    g0 = math.exp(-iirf_at_unit_alpha / g1)
    return g0, g1


def compute_g_constants(params: CarbonParams) -> tuple[float, float]:
    """Return (g0, g1) of the alpha parameterisation alpha = g0*exp(iIRF/g1).

    g1 is the sensitivity of the integrated response to lifetime scaling and
    g0 normalises the map so alpha = 1 reproduces the unscaled pool response.
    """
    return _g_constants(params.partition, params.lifetime, params.horizon)


def compute_iirf100(
    params: CarbonParams,
    cumulative: float,
    airborne_fraction: float,
    t1: float,
    diagnostics: ClampDiagnostics | None = None,
) -> float:
    """Target 100-yr integrated airborne fraction (years) for the current state.

    Parameters
    ----------
    cumulative : float
        Cumulative CO2 emissions since pre-industrial, GtCO2.
    airborne_fraction : float
        Fraction of cumulative emissions currently airborne; clamped to
        [0, 1.5] for the feedback evaluation only.
    t1 : float
        Surface-layer warming (K) relative to the pre-industrial baseline.

    The result is clamped to [0, g1*ln(alpha_max/g0)] so the implied alpha
    stays within (0, alpha_max]; clamping is silent but counted when a
    diagnostics object is supplied.
    """
    f_a = airborne_fraction
    if f_a < 0.0 or f_a > AIRBORNE_FRACTION_CAP:
        f_a = min(max(f_a, 0.0), AIRBORNE_FRACTION_CAP)
        if diagnostics is not None:
            diagnostics.airborne_clamps += 1
    g_cum = cumulative * params.cumulative_scale
    value = (
        params.r0
        + params.r_u * (1.0 - f_a) * g_cum
        + params.r_t * t1
        + params.r_a * f_a * g_cum
    )
    g0, g1 = compute_g_constants(params)
    hi = g1 * math.log(params.alpha_max / g0)
    if value < 0.0 or value > hi:
        value = min(max(value, 0.0), hi)
        if diagnostics is not None:
            diagnostics.iirf_clamps += 1
    return value


def compute_alpha(params: CarbonParams, iirf100: float) -> float:
    """Lifetime scaling factor alpha = g0 * exp(iIRF100 / g1)."""
    g0, g1 = compute_g_constants(params)
    return g0 * math.exp(iirf100 / g1)


def step_carbon(
    state: CarbonState,
    params: CarbonParams,
    emissions: float,
    alpha: float,
    dt: float,
) -> CarbonState:
    """Advance the pools one step under a constant emission rate.

    Parameters
    ----------
    emissions : float
        Total CO2 emission rate over the step, GtCO2 / yr.
    alpha : float
        Lifetime scaling applied to every pool, held fixed over the step.
    dt : float
        Step length in years.

    Each pool follows dR_i/dt = a_i*E - R_i/(alpha*tau_i); the update is the
    exact solution of that linear ODE over the step.
    """
    if alpha <= 0.0 or dt <= 0.0:
        raise ValueError("alpha and dt must be positive")
    a = np.asarray(params.partition)
    tau = alpha * np.asarray(params.lifetime)
    decay = np.exp(-dt / tau)
    pools = a * emissions * tau * -np.expm1(-dt / tau) + np.asarray(state.pools) * decay
    return CarbonState(
        pools=tuple(float(r) for r in pools),
        cumulative=state.cumulative + emissions * dt,
    )


def concentration(state: CarbonState, params: CarbonParams) -> float:
    """Atmospheric CO2 concentration (ppm) implied by the pool burdens."""
    return params.c_ref + sum(state.pools) / params.mass_per_ppm


def iirf_analytic(params: CarbonParams, alpha: float) -> float:
    """Closed-form 100-yr integrated response sum(a_i*alpha*tau_i*(1-e^(-H/(alpha*tau_i))))."""
    a = np.asarray(params.partition)
    tau = alpha * np.asarray(params.lifetime)
    return float(np.sum(a * tau * -np.expm1(-params.horizon / tau)))


def iirf_quadrature_oracle(params: CarbonParams, alpha: float) -> float:
    """Integrate the pulse response sum(a_i e^(-t/(alpha tau_i))) over the horizon.

    Independent adaptive-quadrature route used to cross-check the closed
    form; not called by the simulation itself.
    """
    a = params.partition
    tau = [alpha * t for t in params.lifetime]

    def response(t: float) -> float:
        return sum(ai * math.exp(-t / ti) for ai, ti in zip(a, tau))

    value, _ = quad(response, 0.0, params.horizon, epsabs=1e-12, epsrel=1e-12, limit=200)
    return value
