"""Offline historical (1750-2023) ensemble runs for calibration and constraining.

Every parameter draw is integrated at once over prescribed CO2 emissions and
non-CO2 forcing components, mirroring the per-member stepping of the coupled
simulator (start-of-year states feed forcing and the carbon lifetime).  The
resulting temperature series, concentration metrics and 2023 states drive the
RMSE filter, the reweighting metrics and the initial conditions of the
economic runs.

Emissions, pools and cumulative totals are in GtCO2 throughout, matching the
carbon module's bookkeeping (the GtC conversion lives inside the IIRF terms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy.linalg import expm

from .carbon import CarbonParams, compute_g_constants
from .climate import LOG2, rebaseline_temperatures
from .ensemble import ScalingSpec, sample_kde, sample_scaling

HIST_START = 1750.0
HIST_END = 2023.0
HIST_DT = 3.0

EBM_COLUMNS = ["kappa1", "kappa2", "kappa3", "C1", "C2", "C3", "epsilon", "gamma", "f2x"]
CARBON_COLUMNS = ["r0", "rU", "rT", "rA"]
COMPONENT_COLUMNS = ["ghg", "aerosol", "natural"]

# parameter table columns a posterior row must carry to be re-runnable
PRIOR_COLUMNS = [
    "kappa1", "kappa2", "kappa3", "C1", "C2", "C3", "epsilon", "gamma",
    "f2x_eff", "r0", "rU", "rT", "rA", "cPre", "s_ghg", "s_aerosol", "s_natural",
]

# metrics the desk-scale reweighting step can compute and therefore constrain on
CONSTRAINABLE_METRICS = [
    "ecs", "tcr", "hist_warming_1995_2014", "erf_aerosol_2005_2014", "co2_2014",
]


def historical_years(start: float = HIST_START, end: float = HIST_END, dt: float = HIST_DT) -> np.ndarray:
    return np.arange(start, end + dt / 2, dt)


def _physical_mask(frame: pd.DataFrame) -> np.ndarray:
    """Keep draws the emulator can integrate: positive capacities and feedbacks."""
    ok = np.ones(len(frame), dtype=bool)
    for col, lo in (
        ("kappa1", 0.25), ("kappa2", 0.05), ("kappa3", 0.05),
        ("C1", 1.0), ("C2", 2.0), ("C3", 5.0),
        ("epsilon", 0.1), ("gamma", 0.1), ("f2x", 1.5),
        ("r0", 5.0), ("rU", 0.0), ("rT", -2.0), ("rA", 0.0),
    ):
        if col in frame.columns:
            ok &= frame[col].to_numpy() > lo
    if "r0" in frame.columns:
        ok &= frame["r0"].to_numpy() < 60.0
    return ok


def sample_prior(
    ebm_table: pd.DataFrame,
    carbon_table: pd.DataFrame,
    scalings: dict[str, ScalingSpec],
    aerosol_base: float,
    n: int,
    seed: int,
) -> pd.DataFrame:
    """Draw a joint prior: KDE over each calibration table plus forcing scales.

    ``scalings`` must provide "co2", "ghg", "aerosol", "natural" and "c_ref"
    descriptors; the aerosol descriptor is a 2005-2014 mean forcing target
    (W m-2) converted to a multiplier on the base component, whose 2005-2014
    mean is ``aerosol_base``.  Unphysical KDE tail draws are rejected and
    redrawn, so the output always has exactly n rows.
    """
    for key in ("co2", "ghg", "aerosol", "natural", "c_ref"):
        if key not in scalings:
            raise ValueError(f"missing scaling descriptor {key!r}")
    if abs(aerosol_base) < 1e-12:
        raise ValueError("aerosol base mean must be nonzero to scale against")
    pieces: list[pd.DataFrame] = []
    got = 0
    attempt = 0
    while got < n:
        m = max(2 * (n - got), 256)
        sub = seed + 104729 * attempt
        ebm = sample_kde(ebm_table[EBM_COLUMNS], m, seed=sub)
        carb = sample_kde(carbon_table[CARBON_COLUMNS], m, seed=sub + 1)
        draw = pd.concat([ebm, carb], axis=1)
        draw["s_co2"] = sample_scaling(scalings["co2"], m, seed=sub + 2)
        draw["s_ghg"] = sample_scaling(scalings["ghg"], m, seed=sub + 3)
        draw["aer_target"] = sample_scaling(scalings["aerosol"], m, seed=sub + 4)
        draw["s_natural"] = sample_scaling(scalings["natural"], m, seed=sub + 5)
        draw["cPre"] = sample_scaling(scalings["c_ref"], m, seed=sub + 6)
        keep = _physical_mask(draw) & (draw["s_co2"].to_numpy() > 0.1) & (draw["cPre"].to_numpy() > 100.0)
        draw = draw.loc[keep]
        pieces.append(draw)
        got += len(draw)
        attempt += 1
        if attempt > 50:
            raise RuntimeError("prior sampling keeps rejecting draws; check calibration tables")
    prior = pd.concat(pieces, ignore_index=True).iloc[:n].copy()
    prior["f2x_eff"] = prior["f2x"] * prior["s_co2"]
    prior["s_aerosol"] = prior["aer_target"] / aerosol_base
    prior = prior.drop(columns=["f2x", "s_co2", "aer_target"])
    prior.index = pd.RangeIndex(n)
    return prior[PRIOR_COLUMNS]


def _batch_discretize(frame: pd.DataFrame, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Constant-forcing discretisation of the layer dynamics for every row.

    Stacks the augmented [F, T1, T2, T3] rate matrices and exponentiates them
    in one call; slice results agree with climate.discretize per member.
    """
    k1 = frame["kappa1"].to_numpy(dtype=float)
    k2 = frame["kappa2"].to_numpy(dtype=float)
    k3 = frame["kappa3"].to_numpy(dtype=float)
    c1 = frame["C1"].to_numpy(dtype=float)
    c2 = frame["C2"].to_numpy(dtype=float)
    c3 = frame["C3"].to_numpy(dtype=float)
    eps = frame["epsilon"].to_numpy(dtype=float)
    n = len(frame)
    aug = np.zeros((n, 4, 4))
    aug[:, 1, 0] = 1.0 / c1
    aug[:, 1, 1] = -(k1 + k2) / c1
    aug[:, 1, 2] = k2 / c1
    aug[:, 2, 1] = k2 / c2
    aug[:, 2, 2] = -(k2 + eps * k3) / c2
    aug[:, 2, 3] = eps * k3 / c2
    aug[:, 3, 2] = k3 / c3
    aug[:, 3, 3] = -k3 / c3
    full = expm(aug * dt)
    return np.ascontiguousarray(full[:, 1:, 1:]), np.ascontiguousarray(full[:, 1:, 0])


def batch_tcr(frame: pd.DataFrame) -> np.ndarray:
    """Transient climate response of every row: year-70 warming on a 1 %/yr ramp."""
    a_d, b_d = _batch_discretize(frame, 1.0)
    f2x = frame["f2x_eff"].to_numpy(dtype=float)
    ramp = math.log1p(0.01) / LOG2
    t = np.zeros((len(frame), 3))
    for year in range(70):
        t = np.einsum("nij,nj->ni", a_d, t) + b_d * (f2x * ramp * year)[:, None]
    return t[:, 0].copy()


@dataclass
class HistoryResult:
    """Vectorised historical run: per-year states plus the 2023 snapshot."""

    years: np.ndarray          # (ny,)
    t1: np.ndarray             # (n, ny) start-of-year surface warming, K
    conc: np.ndarray           # (n, ny) start-of-year CO2, ppm
    forcing: np.ndarray        # (n, ny) total ERF applied over the year, W m-2
    pools_2023: np.ndarray     # (n, 4) GtCO2
    t_layers_2023: np.ndarray  # (n, 3) K above 1750
    cumulative_2023: np.ndarray  # (n,) GtCO2


def run_history(
    frame: pd.DataFrame,
    years: np.ndarray,
    emissions: np.ndarray,
    components: pd.DataFrame,
    dt: float = HIST_DT,
) -> HistoryResult:
    """Integrate all rows over prescribed emissions and forcing components.

    ``emissions`` is total CO2 in GtCO2/yr on the same grid as ``years``;
    ``components`` carries the unit-scale ghg/aerosol/natural ERF series that
    each member rescales with its own factors.  The final grid year's update
    is still applied but the returned 2023 snapshot is taken before it, so
    coupled runs starting in 2023 see that year's emissions exactly once.
    """
    years = np.asarray(years, dtype=float)
    emissions = np.asarray(emissions, dtype=float)
    if len(emissions) != len(years) or len(components) != len(years):
        raise ValueError("emissions and components must align with the year grid")
    defaults = CarbonParams()
    g0, g1 = compute_g_constants(defaults)
    iirf_cap = g1 * math.log(defaults.alpha_max / g0)
    part = np.asarray(defaults.partition)
    life = np.asarray(defaults.lifetime)
    gtc = defaults.cumulative_scale

    n = len(frame)
    a_d, b_d = _batch_discretize(frame, dt)
    f2x = frame["f2x_eff"].to_numpy(dtype=float)
    c_pre = frame["cPre"].to_numpy(dtype=float)
    r0 = frame["r0"].to_numpy(dtype=float)
    r_u = frame["rU"].to_numpy(dtype=float)
    r_t = frame["rT"].to_numpy(dtype=float)
    r_a = frame["rA"].to_numpy(dtype=float)
    s_ghg = frame["s_ghg"].to_numpy(dtype=float)
    s_aer = frame["s_aerosol"].to_numpy(dtype=float)
    s_nat = frame["s_natural"].to_numpy(dtype=float)
    ghg = components["ghg"].to_numpy(dtype=float)
    aer = components["aerosol"].to_numpy(dtype=float)
    nat = components["natural"].to_numpy(dtype=float)

    ny = len(years)
    pools = np.zeros((n, 4))
    cum = np.zeros(n)
    t_layers = np.zeros((n, 3))
    t1 = np.empty((n, ny))
    conc = np.empty((n, ny))
    forcing = np.empty((n, ny))
    snap: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    for i in range(ny):
        if i == ny - 1:
            snap = (pools.copy(), t_layers.copy(), cum.copy())
        t1[:, i] = t_layers[:, 0]
        burden = pools.sum(axis=1)
        c_now = c_pre + burden / defaults.mass_per_ppm
        conc[:, i] = c_now
        f = (
            f2x * np.log(np.maximum(c_now, 1.0) / c_pre) / LOG2
            + s_ghg * ghg[i] + s_aer * aer[i] + s_nat * nat[i]
        )
        forcing[:, i] = f

        f_a = np.clip(np.divide(burden, cum, out=np.zeros(n), where=cum > 0), 0.0, 1.5)
        g_cum = cum * gtc
        iirf = np.clip(
            r0 + r_u * (1.0 - f_a) * g_cum + r_t * t_layers[:, 0] + r_a * f_a * g_cum,
            0.0,
            iirf_cap,
        )
        alpha = g0 * np.exp(iirf / g1)

        t_layers = np.einsum("nij,nj->ni", a_d, t_layers) + b_d * f[:, None]
        atau = alpha[:, None] * life[None, :]
        pools = part[None, :] * emissions[i] * atau * (-np.expm1(-dt / atau)) + pools * np.exp(-dt / atau)
        cum = cum + emissions[i] * dt

    assert snap is not None
    return HistoryResult(
        years=years, t1=t1, conc=conc, forcing=forcing,
        pools_2023=snap[0], t_layers_2023=snap[1], cumulative_2023=snap[2],
    )


def ensemble_metrics(frame: pd.DataFrame, result: HistoryResult, aerosol_base: float) -> pd.DataFrame:
    """Constraining metrics per row: sensitivities, warming and concentration."""
    years = result.years
    early = (years >= 1850.0) & (years <= 1900.0)
    recent = (years >= 1995.0) & (years <= 2014.0)
    if not early.any() or not recent.any():
        raise ValueError("history grid must cover 1850-1900 and 1995-2014")
    if 2014.0 not in years:
        raise ValueError("history grid must include 2014 for the CO2 metric")
    warming = result.t1[:, recent].mean(axis=1) - result.t1[:, early].mean(axis=1)
    return pd.DataFrame(
        {
            "ecs": frame["f2x_eff"].to_numpy() / frame["kappa1"].to_numpy(),
            "tcr": batch_tcr(frame),
            "hist_warming_1995_2014": warming,
            "erf_aerosol_2005_2014": frame["s_aerosol"].to_numpy() * aerosol_base,
            "co2_2014": result.conc[:, years == 2014.0][:, 0],
        },
        index=frame.index,
    )


def history_hook(
    frame: pd.DataFrame, result: HistoryResult, metrics: pd.DataFrame
) -> Callable[[pd.Series], tuple[np.ndarray, np.ndarray, dict[str, float]]]:
    """Adapt precomputed vectorised results to the pipeline's per-row hook."""
    position = {idx: i for i, idx in enumerate(frame.index)}

    def hook(row: pd.Series) -> tuple[np.ndarray, np.ndarray, dict[str, float]]:
        i = position[row.name]
        return result.years, result.t1[i], metrics.iloc[i].to_dict()

    return hook


def initial_conditions_frame(
    frame: pd.DataFrame,
    result: HistoryResult,
    chosen: list,
    assessed_warming: float = 0.85,
) -> pd.DataFrame:
    """2023 carbon pools and re-anchored layer temperatures for chosen rows.

    Layer temperatures are shifted so each member's own 1995-2014 mean equals
    the assessed warming, preserving inter-layer differences.
    """
    years = result.years
    recent = (years >= 1995.0) & (years <= 2014.0)
    rows = []
    position = {idx: i for i, idx in enumerate(frame.index)}
    for idx in chosen:
        i = position[idx]
        hist_mean = float(result.t1[i, recent].mean())
        t_shifted = rebaseline_temperatures(result.t_layers_2023[i], hist_mean, assessed_warming)
        rows.append(
            {
                "R1": result.pools_2023[i, 0], "R2": result.pools_2023[i, 1],
                "R3": result.pools_2023[i, 2], "R4": result.pools_2023[i, 3],
                "T1": t_shifted[0], "T2": t_shifted[1], "T3": t_shifted[2],
                "f2x_eff": float(frame.loc[idx, "f2x_eff"]),
                "c_ref": float(frame.loc[idx, "cPre"]),
                "G": float(result.cumulative_2023[i]),
            }
        )
    return pd.DataFrame(rows)
