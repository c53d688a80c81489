"""Coupled climate-economy trajectory simulation and social cost of carbon.

One period: start-of-period temperatures set damages, output determines
emissions, total CO2 (industry + land use) drives the carbon pools, the
implied forcing advances the layer temperatures, and savings split net
output into consumption and next-period capital.  The integration is
batched over control paths so finite-difference gradients cost a single
vectorised pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import econ as econ_mod
from .carbon import AIRBORNE_FRACTION_CAP, CarbonParams, CarbonState, compute_g_constants
from .climate import LOG2, DiscreteEBM
from .econ import (
    CAPITAL_FLOOR,
    CONSUMPTION_FLOOR,
    DAMAGE_FRACTION_CAP,
    EconParams,
    discount_factors,
)

MIN_CONCENTRATION_PPM = 1.0
DEFAULT_PULSE_GTCO2 = 1.0
DEFAULT_CONSUMPTION_DELTA = 0.1  # trillion $
USD_PER_TCO2_FACTOR = 1000.0  # trillion $ / GtCO2 -> $ / tCO2


@dataclass(frozen=True)
class InitialConditions:
    """Member state handed over from the historical run at the 2023 boundary."""

    pools: tuple[float, float, float, float]
    t_layers: tuple[float, float, float]
    cumulative: float
    f2x_eff: float
    c_ref: float

    def carbon_state(self) -> CarbonState:
        return CarbonState(pools=self.pools, cumulative=self.cumulative)


@dataclass(frozen=True)
class MemberClimate:
    """Carbon-cycle parameters plus the discretised energy balance model."""

    carbon: CarbonParams
    ebm: DiscreteEBM


@dataclass
class EconSetup:
    """Economy parameters paired with the labour (population) path, millions."""

    params: EconParams
    labour: np.ndarray

    def __post_init__(self) -> None:
        self.labour = np.asarray(self.labour, dtype=float)
        if self.labour.shape != (self.params.n_periods,):
            raise ValueError(
                f"labour path has {self.labour.shape} entries, "
                f"expected {self.params.n_periods}"
            )
        if np.any(self.labour <= 0):
            raise ValueError("labour path must be strictly positive")


@dataclass
class ControlPath:
    """Per-period abatement fraction mu and savings rate s."""

    mu: np.ndarray
    s: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        if self.mu.shape != self.s.shape or self.mu.ndim != 1:
            raise ValueError("mu and s must be 1-D arrays of equal length")


@dataclass
class Trajectory:
    """Per-period series for one member under one control path."""

    years: np.ndarray
    e_ffi: np.ndarray
    e_afolu: np.ndarray
    e_total: np.ndarray
    conc_ppm: np.ndarray
    f_co2: np.ndarray
    f_ext: np.ndarray
    f_total: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    y_gross: np.ndarray
    y_net: np.ndarray
    consumption: np.ndarray
    c_percap: np.ndarray
    abatement_frac: np.ndarray
    damage_frac: np.ndarray
    savings: np.ndarray
    mu: np.ndarray
    capital: np.ndarray
    utility_discounted: np.ndarray
    welfare: float
    floor_hits: int

    SERIES_FIELDS = (
        "e_ffi", "e_afolu", "e_total", "conc_ppm", "f_co2", "f_ext", "f_total",
        "t1", "t2", "t3", "y_gross", "y_net", "consumption", "c_percap",
        "abatement_frac", "damage_frac", "savings", "mu", "capital",
        "utility_discounted",
    )

    def percap_growth_pct(self) -> np.ndarray:
        """Annualised per-capita consumption growth (%/yr); last entry repeats."""
        dt_years = float(self.years[1] - self.years[0])
        ratio = self.c_percap[1:] / self.c_percap[:-1]
        growth = (ratio ** (1.0 / dt_years) - 1.0) * 100.0
        return np.concatenate([growth, growth[-1:]])


def _batch_run(
    climate: MemberClimate,
    econ: EconSetup,
    init: InitialConditions,
    f_ext: np.ndarray,
    mu: np.ndarray,
    s: np.ndarray,
    pulse_gtco2: float = 0.0,
    consumption_delta: float = 0.0,
    store: bool = True,
):
    """Advance B control paths jointly; returns (series dict | None, welfare, floors)."""
    p = econ.params
    cp = climate.carbon
    n = p.n_periods
    b = mu.shape[0]
    dt = p.dt

    tfp, sigma, _ = econ_mod._exogenous_paths(p)
    theta1 = econ_mod.theta1_path(p)
    labour = econ.labour
    lab_factor = labour ** (1.0 - p.gamma_out)
    disc = discount_factors(p.rho, n, dt)
    periods = np.arange(1, n + 1)
    afolu_window = 1.0 - 1.0 / (1.0 + np.exp(-(periods - p.afolu_center)))

    part = np.asarray(cp.partition)
    tau = np.asarray(cp.lifetime)
    g0, g1 = compute_g_constants(cp)
    iirf_hi = g1 * math.log(cp.alpha_max / g0)
    g_scale = cp.cumulative_scale
    a_d_t = climate.ebm.a_d.T.copy()
    b_d = climate.ebm.b_d

    capital = np.full(b, p.k0)
    pools = np.tile(np.asarray(init.pools, dtype=float), (b, 1))
    cum = np.full(b, float(init.cumulative))
    t_layers = np.tile(np.asarray(init.t_layers, dtype=float), (b, 1))

    keep = (
        {k: np.empty((b, n)) for k in Trajectory.SERIES_FIELDS if k not in ("f_ext", "mu", "savings")}
        if store
        else None
    )

    welfare_acc = np.zeros(b)
    floors = 0
    log_eta = p.eta == 1.0

    for i in range(n):
        t1 = t_layers[:, 0]
        y_gross = tfp[i] * capital**p.gamma_out * lab_factor[i]
        dam = np.minimum(p.psi * t1 * t1, DAMAGE_FRACTION_CAP)
        lam = theta1[i] * mu[:, i] ** p.theta2
        y_net = y_gross * (1.0 - dam - lam)
        e_ffi = sigma[i] * y_gross * (1.0 - mu[:, i])
        e_afolu = (p.afolu_base + p.afolu_slope * e_ffi - p.afolu_decline * periods[i]) * afolu_window[i]
        e_total = e_ffi + e_afolu
        if i == 0 and pulse_gtco2 != 0.0:
            e_total = e_total + pulse_gtco2 / dt

        conc = np.maximum(init.c_ref + pools.sum(axis=1) / cp.mass_per_ppm, MIN_CONCENTRATION_PPM)
        f_co2 = init.f2x_eff * np.log(conc / init.c_ref) / LOG2
        f_tot = f_co2 + f_ext[i]

        f_a = np.clip(np.divide(pools.sum(axis=1), cum, out=np.zeros(b), where=cum != 0.0), 0.0, AIRBORNE_FRACTION_CAP)
        g_cum = cum * g_scale
        iirf = np.clip(
            cp.r0 + cp.r_u * (1.0 - f_a) * g_cum + cp.r_t * t1 + cp.r_a * f_a * g_cum,
            0.0,
            iirf_hi,
        )
        alpha = g0 * np.exp(iirf / g1)

        cons = y_net * (1.0 - s[:, i])
        if i == 0 and consumption_delta != 0.0:
            cons = cons + consumption_delta / dt
        c_pc = 1000.0 * cons / labour[i]
        low = c_pc < CONSUMPTION_FLOOR
        if np.any(low):
            floors += int(np.count_nonzero(low))
            c_pc = np.maximum(c_pc, CONSUMPTION_FLOOR)
        util = np.log(c_pc) if log_eta else (c_pc ** (1.0 - p.eta) - 1.0) / (1.0 - p.eta)
        u_disc = labour[i] * util * disc[i]
        welfare_acc += u_disc

        if store:
            keep["e_ffi"][:, i] = e_ffi
            keep["e_afolu"][:, i] = e_afolu
            keep["e_total"][:, i] = e_total
            keep["conc_ppm"][:, i] = conc
            keep["f_co2"][:, i] = f_co2
            keep["f_total"][:, i] = f_tot
            keep["t1"][:, i] = t_layers[:, 0]
            keep["t2"][:, i] = t_layers[:, 1]
            keep["t3"][:, i] = t_layers[:, 2]
            keep["y_gross"][:, i] = y_gross
            keep["y_net"][:, i] = y_net
            keep["consumption"][:, i] = cons
            keep["c_percap"][:, i] = c_pc
            keep["abatement_frac"][:, i] = lam
            keep["damage_frac"][:, i] = dam
            keep["capital"][:, i] = capital
            keep["utility_discounted"][:, i] = u_disc

        # state updates (forcing and uptake evaluated at start-of-period state)
        t_layers = t_layers @ a_d_t + np.outer(f_tot, b_d)
        x = dt / (alpha[:, None] * tau[None, :])
        pools = part[None, :] * (e_total * alpha)[:, None] * tau[None, :] * -np.expm1(-x) + pools * np.exp(-x)
        cum = cum + e_total * dt
        capital = np.maximum((1.0 - p.depreciation) ** dt * capital + dt * s[:, i] * y_net, CAPITAL_FLOOR)

    return keep, welfare_acc, floors


def simulate(
    climate: MemberClimate,
    econ: EconSetup,
    init: InitialConditions,
    f_ext: np.ndarray,
    controls: ControlPath,
    *,
    pulse_gtco2: float = 0.0,
    consumption_delta: float = 0.0,
) -> Trajectory:
    """Run one member forward over the full horizon under the given controls.

    ``pulse_gtco2`` adds an emission pulse (GtCO2, spread over period 1) to
    total CO2 only; ``consumption_delta`` adds to period-1 aggregate
    consumption (trillion $, also spread over the period so the total
    matches) without touching investment.  Both exist for marginal
    valuation and default to zero.
    """
    p = econ.params
    if abs(init.c_ref - climate.carbon.c_ref) > 1e-9:
        raise ValueError("initial-condition c_ref disagrees with the carbon parameters")
    f_ext = np.asarray(f_ext, dtype=float)
    if f_ext.shape != (p.n_periods,):
        raise ValueError(f"f_ext must have {p.n_periods} entries")
    if controls.mu.shape != (p.n_periods,):
        raise ValueError(f"controls must have {p.n_periods} periods")
    keep, welfare_acc, floors = _batch_run(
        climate,
        econ,
        init,
        f_ext,
        controls.mu[None, :],
        controls.s[None, :],
        pulse_gtco2=pulse_gtco2,
        consumption_delta=consumption_delta,
        store=True,
    )
    years = p.start_year + p.dt * np.arange(p.n_periods)
    series = {k: v[0].copy() for k, v in keep.items()}
    return Trajectory(
        years=years,
        f_ext=f_ext.copy(),
        mu=controls.mu.copy(),
        savings=controls.s.copy(),
        welfare=float(welfare_acc[0]),
        floor_hits=floors,
        **series,
    )


def welfare_of_controls(
    climate: MemberClimate,
    econ: EconSetup,
    init: InitialConditions,
    f_ext: np.ndarray,
    mu: np.ndarray,
    s: np.ndarray,
) -> np.ndarray:
    """Welfare for a batch of control paths (B, N) -> (B,); the optimizer hook."""
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    s = np.atleast_2d(np.asarray(s, dtype=float))
    _, welfare_acc, _ = _batch_run(
        climate, econ, init, np.asarray(f_ext, dtype=float), mu, s, store=False
    )
    return welfare_acc


def social_cost_of_carbon(
    climate: MemberClimate,
    econ: EconSetup,
    init: InitialConditions,
    f_ext: np.ndarray,
    controls: ControlPath,
    *,
    pulse_gtco2: float = DEFAULT_PULSE_GTCO2,
    consumption_delta: float = DEFAULT_CONSUMPTION_DELTA,
) -> float:
    """SCC in $/tCO2 from two fixed-control finite-difference runs.

    The controls are held at the supplied (typically optimised) path while
    welfare is differenced against a period-1 emissions pulse and a
    period-1 consumption increment; the envelope theorem makes the ratio a
    marginal valuation at an optimum.
    """
    if pulse_gtco2 <= 0 or consumption_delta <= 0:
        raise ValueError("perturbation sizes must be positive")
    base = simulate(climate, econ, init, f_ext, controls)
    pulsed = simulate(climate, econ, init, f_ext, controls, pulse_gtco2=pulse_gtco2)
    bumped = simulate(climate, econ, init, f_ext, controls, consumption_delta=consumption_delta)
    dw_de = (pulsed.welfare - base.welfare) / pulse_gtco2
    dw_dc = (bumped.welfare - base.welfare) / consumption_delta
    if dw_dc <= 0:
        raise ValueError("marginal welfare of consumption is not positive")
    return -dw_de / dw_dc * USD_PER_TCO2_FACTOR


def value_at_year(years: np.ndarray, series: np.ndarray, year: float) -> float:
    """Linear interpolation of a per-period series at an off-grid year."""
    years = np.asarray(years, dtype=float)
    if year < years[0] or year > years[-1]:
        raise ValueError(f"year {year} outside the simulated horizon")
    return float(np.interp(year, years, np.asarray(series, dtype=float)))


def net_zero_year(trajectory: Trajectory) -> float | None:
    """First zero crossing of total CO2 emissions, linearly interpolated.

    Returns None when emissions stay positive over the whole horizon.
    """
    e = trajectory.e_total
    if e[0] <= 0.0:
        return float(trajectory.years[0])
    below = np.nonzero(e <= 0.0)[0]
    if len(below) == 0:
        return None
    j = int(below[0])
    y0, y1 = trajectory.years[j - 1], trajectory.years[j]
    e0, e1 = e[j - 1], e[j]
    return float(y0 + (y1 - y0) * e0 / (e0 - e1))


def peak_warming(trajectory: Trajectory) -> float:
    return float(np.max(trajectory.t1))


def trajectory_diagnostics(trajectory: Trajectory, econ: EconSetup) -> dict[str, float | None]:
    """Headline scenario metrics reported for each member."""
    growth = trajectory.percap_growth_pct()
    near_term_growth = float(growth[0])
    rate = econ_mod.ramsey_rate(100.0 * econ.params.rho, econ.params.eta, near_term_growth)
    return {
        "emissions_2050": value_at_year(trajectory.years, trajectory.e_total, 2050.0),
        "emissions_2100": value_at_year(trajectory.years, trajectory.e_total, 2100.0),
        "net_zero_year": net_zero_year(trajectory),
        "peak_warming": peak_warming(trajectory),
        "warming_2100": value_at_year(trajectory.years, trajectory.t1, 2100.0),
        "erf_2100": value_at_year(trajectory.years, trajectory.f_total, 2100.0),
        "near_term_growth_pct": near_term_growth,
        "near_term_discount_rate_pct": rate,
        "welfare": trajectory.welfare,
    }
