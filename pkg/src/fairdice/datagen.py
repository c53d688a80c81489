"""Build the shipped desk-scale data tables under data/.

Everything here is synthetic but self-consistent: calibration tables are
drawn from plausible distributions, historical emissions and non-CO2 forcing
follow smooth anchor curves, observations are a median-parameter model run
plus weather noise, and the posterior parameter table is produced by the same
RMSE-filter + reweighting pipeline the CLI exposes.  The observation series
and the posterior are iterated to a fixed point so the shipped median
parameters reproduce the shipped observations by construction.

Run as ``python3 -m fairdice.datagen [--out data] [--prior-n N] [--seed N]``.
Regenerating with the same seed reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats
from scipy.interpolate import PchipInterpolator

from . import history
from .climate import EBMParams, discretize
from .econ import extend_population
from .ensemble import (
    ScalingSpec,
    fit_skew_normal,
    rebaseline,
    rmse,
    run_constraining_pipeline,
)
from .io import RunConfig, write_csv

OBS_NOISE_K = 0.045
OBS_START = 1850.0
ASSESSED_WARMING = 0.85

# (year, GtCO2/yr) total CO2 emissions before global rescaling
EMISSION_ANCHORS = [
    (1750, 0.7), (1800, 1.2), (1850, 2.6), (1900, 5.0), (1925, 7.0),
    (1950, 9.0), (1975, 22.0), (2000, 32.0), (2010, 38.5), (2023, 41.5),
]

# unit-scale non-CO2 forcing components, W m-2 relative to 1750; the ghg
# curve includes ozone and stratospheric water vapour alongside CH4/N2O/halos
GHG_ANCHORS = [
    (1750, 0.0), (1800, 0.03), (1850, 0.13), (1900, 0.32), (1950, 0.67),
    (1980, 1.14), (2000, 1.50), (2011, 1.68), (2023, 1.84),
]
AEROSOL_ANCHORS = [
    (1750, 0.0), (1800, -0.02), (1850, -0.11), (1900, -0.26), (1950, -0.40),
    (1980, -0.78), (1995, -0.93), (2005, -0.92), (2014, -0.85), (2023, -0.75),
]
NATURAL_ANCHORS = [
    (1750, 0.0), (1850, 0.02), (1910, -0.02), (1950, 0.03), (1990, -0.01), (2023, 0.05),
]

# future total non-CO2 forcing shapes; first anchor is filled with the
# historical 2023 value so every member hands over continuously
FUTURE_FEXT_ANCHORS = {
    "optimal": [(2023, None), (2050, 1.10), (2100, 1.20), (2150, 1.15), (2250, 1.05), (2500, 0.95)],
    "wb2c": [(2023, None), (2050, 0.85), (2100, 0.65), (2200, 0.55), (2500, 0.50)],
    "p15c": [(2023, None), (2050, 0.70), (2100, 0.45), (2200, 0.35), (2500, 0.30)],
}
FEXT_FILE_BASES = {"optimal": "optimal", "rennert": "optimal", "wb2c": "wb2c", "p15c": "p15c"}

# member forcing anomalies relax toward the scenario median going forward
ANOMALY_DECAY_ANCHORS = [(2023, 1.0), (2050, 0.55), (2100, 0.25), (2200, 0.12), (2500, 0.10)]

# world population, millions; peaks 11.2bn near 2116, 7.3bn by 2300
POPULATION_ANCHORS = [
    (2023, 8045.0), (2050, 9700.0), (2100, 11100.0), (2116, 11200.0),
    (2150, 10800.0), (2200, 9800.0), (2250, 8800.0), (2299, 7300.0),
]

# assessed 5/50/95 target distributions for the constraining step
TARGET_ROWS = [
    ("ecs", 2.0, 3.0, 5.0),
    ("tcr", 1.2, 1.8, 2.4),
    ("hist_warming_1995_2014", 0.67, 0.85, 0.98),
    ("erfari_2005_2014", -0.6, -0.3, 0.0),
    ("erfaci_2005_2014", -1.7, -1.0, -0.3),
    ("erf_aerosol_2005_2014", -2.0, -1.3, -0.6),
    ("co2_2014", 396.95, 397.55, 398.15),
    ("ohc_1971_2018", 286.0, 396.0, 506.0),
    ("ssp245_warming_2081_2100", 1.24, 1.81, 2.59),
]

SCALING_ROWS = [
    ("co2", "gaussian", 0.88, 1.12, ""),
    ("ghg", "gaussian", 0.84, 1.16, ""),
    ("aerosol", "uniform", -2.0, 0.0, ""),
    ("natural", "half_gaussian", 0.4, 1.8, 1.0),
    ("c_ref", "gaussian", 276.85, 279.75, ""),
]


def _curve(anchors: list[tuple[float, float]], years: np.ndarray) -> np.ndarray:
    xs = np.array([a[0] for a in anchors], dtype=float)
    ys = np.array([a[1] for a in anchors], dtype=float)
    return PchipInterpolator(xs, ys)(years)


def scaling_specs(table: pd.DataFrame) -> dict[str, ScalingSpec]:
    specs = {}
    for row in table.itertuples(index=False):
        mode = None if (pd.isna(row.mode) or row.mode == "") else float(row.mode)
        specs[row.name] = ScalingSpec(kind=row.kind, lo=float(row.lo), hi=float(row.hi), mode=mode)
    return specs


def make_calibration_tables(seed: int) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Synthetic stand-ins for model-fit calibration tables (49 + 41 rows)."""

    def trunc(rng, mean, sd, lo, hi, n):
        a, b = (lo - mean) / sd, (hi - mean) / sd
        return stats.truncnorm.rvs(a, b, loc=mean, scale=sd, size=n, random_state=rng)

    rng = np.random.default_rng(seed)
    n = 49
    ebm = pd.DataFrame(
        {
            "gamma": np.exp(rng.normal(math.log(2.6), 0.35, n)),
            "C1": trunc(rng, 4.8, 0.9, 2.6, 8.0, n),
            "C2": trunc(rng, 12.0, 4.0, 4.0, 26.0, n),
            "C3": trunc(rng, 72.0, 20.0, 18.0, 140.0, n),
            "kappa1": trunc(rng, 1.35, 0.42, 0.45, 2.8, n),
            "kappa2": trunc(rng, 1.9, 0.55, 0.7, 3.8, n),
            "kappa3": trunc(rng, 0.85, 0.30, 0.30, 1.9, n),
            "epsilon": trunc(rng, 1.10, 0.18, 0.55, 1.7, n),
            "f2x": trunc(rng, 3.93, 0.32, 2.8, 5.1, n),
        }
    )
    m = 41
    carbon = pd.DataFrame(
        {
            "r0": trunc(rng, 34.5, 2.8, 26.0, 44.0, m),
            "rU": trunc(rng, 0.019, 0.004, 0.003, 0.036, m),
            "rT": trunc(rng, 3.2, 1.6, -1.5, 8.5, m),
            "rA": trunc(rng, 0.0025, 0.0012, 0.0001, 0.0065, m),
        }
    )
    return ebm, carbon


def median_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """One-row frame of column medians, usable by the history runner."""
    return frame[history.PRIOR_COLUMNS].median().to_frame().T


def pinned_ecs_series(
    median_row: pd.Series, years: np.ndarray, erf: np.ndarray, ecs: float
) -> np.ndarray:
    """Layer-model rerun with kappa1 pinned to f2x/ecs, re-baselined to 1850-1900."""
    params = EBMParams(
        kappa=(float(median_row["f2x_eff"]) / ecs, float(median_row["kappa2"]), float(median_row["kappa3"])),
        capacity=(float(median_row["C1"]), float(median_row["C2"]), float(median_row["C3"])),
        epsilon=float(median_row["epsilon"]),
        gamma_autocorr=float(median_row["gamma"]),
        f2x=float(median_row["f2x_eff"]),
        dt=float(years[1] - years[0]),
    )
    ebm = discretize(params)
    t = np.zeros(3)
    out = np.empty(len(years))
    for i in range(len(years)):
        out[i] = t[0]
        t = ebm.a_d @ t + ebm.b_d * erf[i]
    return rebaseline(years, out, (1850.0, 1900.0))


def build_observations(
    median_row: pd.Series,
    years: np.ndarray,
    emissions: np.ndarray,
    components: pd.DataFrame,
    noise: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Median-member rerun -> (obs years, obs anomalies, full ERF series)."""
    run = history.run_history(median_row.to_frame().T, years, emissions, components)
    erf = run.forcing[0]
    series = pinned_ecs_series(median_row, years, erf, 3.0)
    mask = years >= OBS_START
    return years[mask], series[mask] + noise, erf


def calibrate_emission_scale(
    median_row: pd.Series,
    years: np.ndarray,
    raw_emissions: np.ndarray,
    components: pd.DataFrame,
    target_ppm: float = 397.55,
) -> float:
    """Rescale the emissions curve so the median member hits the 2014 CO2 target."""
    col = years == 2014.0

    def conc_2014(scale: float) -> float:
        run = history.run_history(median_row.to_frame().T, years, scale * raw_emissions, components)
        return float(run.conc[0, col][0])

    lo, hi = 0.5, 1.8
    if not conc_2014(lo) < target_ppm < conc_2014(hi):
        raise RuntimeError("emission anchors cannot bracket the 2014 concentration target")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if conc_2014(mid) < target_ppm:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def future_fext_tables(
    posterior: pd.DataFrame,
    member_ids: np.ndarray,
    components: pd.DataFrame,
    hist_years: np.ndarray,
) -> dict[str, pd.DataFrame]:
    """Per-scenario member forcing files on the 2023-2500 grid (long format)."""
    last = hist_years == hist_years[-1]
    base_2023 = float(
        components.loc[last, "ghg"].iloc[0]
        + components.loc[last, "aerosol"].iloc[0]
        + components.loc[last, "natural"].iloc[0]
    )
    member_2023 = (
        posterior["s_ghg"].to_numpy() * float(components.loc[last, "ghg"].iloc[0])
        + posterior["s_aerosol"].to_numpy() * float(components.loc[last, "aerosol"].iloc[0])
        + posterior["s_natural"].to_numpy() * float(components.loc[last, "natural"].iloc[0])
    )
    delta = member_2023 - base_2023
    grid = np.arange(2023.0, 2500.0 + 1.5, 3.0)
    weight = _curve(ANOMALY_DECAY_ANCHORS, grid)
    tables = {}
    for scenario, base_name in FEXT_FILE_BASES.items():
        anchors = [(y, base_2023 if v is None else v) for y, v in FUTURE_FEXT_ANCHORS[base_name]]
        base = _curve(anchors, grid)
        rows = {
            "member_id": np.repeat(member_ids, len(grid)),
            "year": np.tile(grid, len(member_ids)),
            "wm2": (base[None, :] + delta[:, None] * weight[None, :]).ravel(),
        }
        tables[scenario] = pd.DataFrame(rows)
    return tables


def population_tables() -> tuple[pd.DataFrame, pd.DataFrame]:
    years = np.arange(2023.0, 2299.0 + 1.5, 3.0)
    millions = _curve(POPULATION_ANCHORS, years)
    full_years, full_values = extend_population(years, millions)
    to2300 = pd.DataFrame({"year": years, "millions": millions})
    full = pd.DataFrame({"year": full_years, "millions": full_values})
    return to2300, full


def generate(out_dir: Path, prior_n: int = 20000, posterior_n: int = 101, seed: int = 7261) -> dict:
    """Produce every shipped data file; returns headline diagnostics."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = RunConfig(scenario="optimal", seed=seed, data_dir=str(out_dir), out_dir=str(out_dir))

    years = history.historical_years()
    ghg = _curve(GHG_ANCHORS, years)
    aerosol = _curve(AEROSOL_ANCHORS, years)
    natural = _curve(NATURAL_ANCHORS, years)
    components = pd.DataFrame({"ghg": ghg, "aerosol": aerosol, "natural": natural})
    aer_window = (years >= 2005.0) & (years <= 2014.0)
    aerosol_base = float(aerosol[aer_window].mean())
    raw_emissions = _curve(EMISSION_ANCHORS, years)

    ebm_table, carbon_table = make_calibration_tables(seed)
    scalings_frame = pd.DataFrame(SCALING_ROWS, columns=["name", "kind", "lo", "hi", "mode"])
    specs = scaling_specs(scalings_frame)
    prior = history.sample_prior(ebm_table, carbon_table, specs, aerosol_base, prior_n, seed + 1)

    scale = calibrate_emission_scale(median_frame(prior).iloc[0], years, raw_emissions, components)
    emissions = scale * raw_emissions

    run = history.run_history(prior, years, emissions, components)
    metrics = history.ensemble_metrics(prior, run, aerosol_base)
    hook = history.history_hook(prior, run, metrics)

    targets_frame = pd.DataFrame(TARGET_ROWS, columns=["name", "p5", "p50", "p95"])
    usable = [n for n in history.CONSTRAINABLE_METRICS if n in set(targets_frame["name"])]
    targets = {
        row.name: fit_skew_normal(row.p5, row.p50, row.p95)
        for row in targets_frame.itertuples(index=False)
        if row.name in usable
    }

    noise = np.random.default_rng(seed + 2).normal(0.0, OBS_NOISE_K, int((years >= OBS_START).sum()))

    # two fixed-point rounds: observations from the posterior median, then re-constrain
    obs_years, obs_values, erf = build_observations(
        median_frame(prior).iloc[0], years, emissions, components, noise
    )
    posterior = None
    for _ in range(2):
        posterior, post_metrics, report = run_constraining_pipeline(
            prior, hook, obs_years, obs_values, targets, posterior_n, seed + 3
        )
        obs_years, obs_values, erf = build_observations(
            median_frame(posterior).iloc[0], years, emissions, components, noise
        )

    chosen = list(posterior.index)
    member_ids = np.arange(len(chosen))
    climate_out = posterior.reset_index(drop=True).copy()
    climate_out.insert(0, "member_id", member_ids)

    init = history.initial_conditions_frame(prior, run, chosen, ASSESSED_WARMING)
    init.insert(0, "member_id", member_ids)

    metrics_out = post_metrics.reset_index(drop=True).copy()
    metrics_out.insert(0, "member_id", member_ids)

    fext_tables = future_fext_tables(posterior, member_ids, components, years)
    pop_to2300, pop_full = population_tables()

    diag = verify_consistency(
        climate_out, years, erf, obs_years, obs_values, metrics_out, pop_full, run, chosen, prior
    )

    write_csv(ebm_table, out_dir / "ebm_calibration.csv", stamp)
    write_csv(carbon_table, out_dir / "carbon_calibration.csv", stamp, float_format="%.8g")
    write_csv(scalings_frame, out_dir / "scalings.csv", stamp)
    write_csv(pd.DataFrame({"year": years, "gtco2": emissions}), out_dir / "hist_emissions.csv", stamp)
    comp_out = components.copy()
    comp_out.insert(0, "year", years)
    write_csv(comp_out, out_dir / "hist_fext_components.csv", stamp)
    write_csv(pd.DataFrame({"year": obs_years, "K": obs_values}), out_dir / "observations.csv", stamp)
    write_csv(targets_frame, out_dir / "targets.csv", stamp)
    write_csv(pd.DataFrame({"year": years, "wm2": erf}), out_dir / "hist_erf.csv", stamp)
    write_csv(climate_out, out_dir / "climate_params.csv", stamp, float_format="%.8g")
    write_csv(init, out_dir / "init_conditions.csv", stamp, float_format="%.8g")
    write_csv(metrics_out, out_dir / "member_metrics.csv", stamp, float_format="%.6g")
    write_csv(report, out_dir / "constraining_report.csv", stamp, float_format="%.5g")
    for scenario, table in fext_tables.items():
        write_csv(table, out_dir / f"fext_{scenario}.csv", stamp, float_format="%.6g")
    write_csv(pop_to2300, out_dir / "population_to2300.csv", stamp, float_format="%.8g")
    write_csv(pop_full, out_dir / "population.csv", stamp, float_format="%.8g")
    return diag


def verify_consistency(
    climate_out: pd.DataFrame,
    years: np.ndarray,
    erf: np.ndarray,
    obs_years: np.ndarray,
    obs_values: np.ndarray,
    metrics_out: pd.DataFrame,
    pop_full: pd.DataFrame,
    run: history.HistoryResult,
    chosen: list,
    prior: pd.DataFrame,
) -> dict:
    """Assert the shipped tables reproduce their own headline behaviours."""
    median_row = climate_out[history.PRIOR_COLUMNS].median()
    scores = {}
    series = {}
    for ecs in (2.0, 3.0, 5.0):
        model = pinned_ecs_series(median_row, years, erf, ecs)
        series[ecs] = model
        mask = np.isin(years, obs_years)
        scores[ecs] = rmse(model[mask], rebaseline(obs_years, obs_values, (1850.0, 1900.0)))
    if not scores[3.0] <= 0.12:
        raise AssertionError(f"median-parameter rerun drifted from observations: {scores[3.0]:.3f} K")
    if not scores[5.0] > 0.17:
        raise AssertionError(f"high-sensitivity rerun too close to observations: {scores[5.0]:.3f} K")
    if not scores[2.0] > scores[3.0]:
        raise AssertionError("low-sensitivity rerun should fit worse than the median")
    late = years > 1900.0
    if not (np.all(series[2.0][late] < series[3.0][late]) and np.all(series[3.0][late] < series[5.0][late])):
        raise AssertionError("pinned-sensitivity runs lost their pointwise ordering after 1900")

    pos = {idx: i for i, idx in enumerate(prior.index)}
    rows = [pos[c] for c in chosen]
    conc_2023 = run.conc[rows, -1]
    med_2023 = float(np.median(conc_2023))
    if not 410.0 <= med_2023 <= 428.0:
        raise AssertionError(f"posterior 2023 CO2 median off: {med_2023:.1f} ppm")
    if not metrics_out["rmse_hist"].max() <= 0.16:
        raise AssertionError("a shipped member fails the historical filter it was selected by")
    ecs_med = float(metrics_out["ecs"].median())
    if not 2.6 <= ecs_med <= 3.4:
        raise AssertionError(f"posterior ECS median off: {ecs_med:.2f} K")
    pop_2500 = float(pop_full["millions"].iloc[-1])
    if not 4700.0 <= pop_2500 <= 5100.0:
        raise AssertionError(f"extended population misses ~4.9bn in 2500: {pop_2500:.0f}")
    return {
        "rmse_ecs2": scores[2.0], "rmse_ecs3": scores[3.0], "rmse_ecs5": scores[5.0],
        "co2_2023_median": med_2023, "ecs_median": ecs_med,
        "tcr_median": float(metrics_out["tcr"].median()),
        "warming_median": float(metrics_out["hist_warming_1995_2014"].median()),
        "co2_2014_median": float(metrics_out["co2_2014"].median()),
        "population_2500": pop_2500,
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--prior-n", type=int, default=20000)
    parser.add_argument("--posterior-n", type=int, default=101)
    parser.add_argument("--seed", type=int, default=7261)
    args = parser.parse_args(argv)
    diag = generate(Path(args.out), args.prior_n, args.posterior_n, args.seed)
    for key, value in diag.items():
        print(f"{key}: {value:.4g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
