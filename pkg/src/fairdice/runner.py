"""Scenario execution: per-member welfare optimisation, SCC and summaries."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import io as io_mod
from .climate import diagnose_ecs, discretize
from .coupled import (
    ControlPath,
    EconSetup,
    MemberClimate,
    Trajectory,
    simulate,
    social_cost_of_carbon,
    trajectory_diagnostics,
    welfare_of_controls,
)
from .econ import (
    SCENARIO_PRESETS,
    EconParams,
    ScenarioPreset,
    dice2016r_defaults,
    mu_bounds,
    optimal_longrun_savings,
)
from .optimize import OptimizerConfig, OptimResult, default_initial_guess, optimize


@dataclass
class MemberTask:
    """Everything needed to optimise one ensemble member under one preset."""

    member_id: int
    climate_row: pd.Series
    init_row: pd.Series
    f_ext: np.ndarray
    preset: ScenarioPreset
    econ: EconParams
    labour: np.ndarray
    opt_config: OptimizerConfig
    scc_pulse: float = 1.0


@dataclass
class MemberResult:
    member_id: int
    scenario: str
    controls: ControlPath
    trajectory: Trajectory
    welfare: float
    scc: float
    ecs: float
    converged: bool
    iterations: int
    kkt_residual: float
    diagnostics: dict


def control_bounds(econ: EconParams) -> tuple[np.ndarray, np.ndarray]:
    """Packed [mu | s] box: ramped mu caps, savings in [0, cap] with pinned tail."""
    n = econ.n_periods
    mu_lo = np.empty(n)
    mu_hi = np.empty(n)
    for t in range(1, n + 1):
        mu_lo[t - 1], mu_hi[t - 1] = mu_bounds(
            t, slope=econ.mu_ramp_slope, cap=econ.mu_cap_late, mu0=econ.mu0
        )
    s_lo = np.zeros(n)
    s_hi = np.full(n, econ.savings_upper)
    pin = optimal_longrun_savings(econ)
    s_lo[-econ.savings_pin_periods:] = pin
    s_hi[-econ.savings_pin_periods:] = pin
    return np.concatenate([mu_lo, s_lo]), np.concatenate([mu_hi, s_hi])


def pack_controls(controls: ControlPath) -> np.ndarray:
    return np.concatenate([controls.mu, controls.s])


def unpack_controls(x: np.ndarray) -> ControlPath:
    n = len(x) // 2
    return ControlPath(mu=x[:n].copy(), s=x[n:].copy())


def optimize_member_controls(
    climate: MemberClimate,
    econ_setup: EconSetup,
    init,
    f_ext: np.ndarray,
    opt_config: OptimizerConfig,
) -> OptimResult:
    """Maximise welfare over the packed control box for one member."""
    econ = econ_setup.params
    lo, hi = control_bounds(econ)
    n = econ.n_periods

    def objective(x: np.ndarray) -> float:
        return float(
            welfare_of_controls(
                climate, econ_setup, init, f_ext, x[None, :n], x[None, n:]
            )[0]
        )

    def batch_objective(pts: np.ndarray) -> np.ndarray:
        return welfare_of_controls(
            climate, econ_setup, init, f_ext, pts[:, :n], pts[:, n:]
        )

    mu0, s0 = default_initial_guess(
        hi[:n],
        cap=econ.mu_cap_late,
        terminal_savings=optimal_longrun_savings(econ),
        pinned_tail=econ.savings_pin_periods,
    )
    x0 = np.clip(np.concatenate([mu0, s0]), lo, hi)
    return optimize(objective, (lo, hi), x0, opt_config, batch_objective=batch_objective)


def run_member(task: MemberTask) -> MemberResult:
    """Optimise, simulate and value one member; pure function of the task."""
    carbon = io_mod.member_carbon_params(task.climate_row)
    ebm_params = io_mod.member_ebm_params(task.climate_row, dt=task.econ.dt)
    climate = MemberClimate(carbon=carbon, ebm=discretize(ebm_params))
    init = io_mod.member_init_conditions(task.init_row)
    econ_setup = EconSetup(params=task.econ, labour=task.labour)

    result = optimize_member_controls(climate, econ_setup, init, task.f_ext, task.opt_config)
    controls = unpack_controls(result.x)
    trajectory = simulate(climate, econ_setup, init, task.f_ext, controls)
    scc = social_cost_of_carbon(
        climate, econ_setup, init, task.f_ext, controls, pulse_gtco2=task.scc_pulse
    )
    diag = trajectory_diagnostics(trajectory, econ_setup)
    diag["scc"] = scc
    return MemberResult(
        member_id=task.member_id,
        scenario=task.preset.name,
        controls=controls,
        trajectory=trajectory,
        welfare=result.welfare,
        scc=scc,
        ecs=diagnose_ecs(ebm_params),
        converged=result.converged,
        iterations=result.iterations,
        kkt_residual=result.kkt_residual,
        diagnostics=diag,
    )


def select_members(climate_table: pd.DataFrame, spec: str) -> list[int]:
    """Member selection: 'all', 'median' (median-ECS member) or id list '1,4,9'."""
    ids = list(climate_table["member_id"].astype(int))
    if spec == "all":
        return ids
    if spec == "median":
        ecs = climate_table["f2x_eff"] / climate_table["kappa1"]
        order = ecs.sort_values().index
        return [int(climate_table.loc[order[(len(order) - 1) // 2], "member_id"])]
    try:
        chosen = [int(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise io_mod.DataError(f"bad --members spec {spec!r}: {exc}") from exc
    unknown = [m for m in chosen if m not in ids]
    if unknown:
        raise io_mod.DataError(f"member id(s) {unknown} not present in the ensemble")
    return chosen


def build_tasks(
    data_dir: Path,
    preset: ScenarioPreset,
    member_ids: list[int],
    opt_config: OptimizerConfig,
    scc_pulse: float = 1.0,
) -> list[MemberTask]:
    data_dir = Path(data_dir)
    climate_table = io_mod.load_climate_params(data_dir / "climate_params.csv")
    init_table = io_mod.load_init_conditions(data_dir / "init_conditions.csv")
    fext = io_mod.load_fext(data_dir / f"fext_{preset.fext_id}.csv")
    pop_years, pop_values = io_mod.load_population(data_dir / "population.csv")

    econ = dice2016r_defaults(preset.rho, preset.eta, l0=float(pop_values[0]))
    expect_years = econ.start_year + econ.dt * np.arange(econ.n_periods)
    if len(pop_years) < econ.n_periods or np.any(pop_years[: econ.n_periods] != expect_years):
        raise io_mod.DataError(
            "population.csv does not cover the model grid "
            f"({econ.start_year}..{expect_years[-1]:.0f} step {econ.dt:g})"
        )
    labour = pop_values[: econ.n_periods]

    tasks = []
    for mid in member_ids:
        if mid not in fext.index:
            raise io_mod.DataError(f"member {mid} missing from fext_{preset.fext_id}.csv")
        series = fext.loc[mid]
        years = series.index.to_numpy(dtype=float)
        if len(years) < econ.n_periods or np.any(years[: econ.n_periods] != expect_years):
            raise io_mod.DataError(f"fext_{preset.fext_id}.csv years do not match the model grid")
        tasks.append(
            MemberTask(
                member_id=mid,
                climate_row=climate_table.loc[mid],
                init_row=init_table.loc[mid],
                f_ext=series.to_numpy(dtype=float)[: econ.n_periods],
                preset=preset,
                econ=econ,
                labour=labour,
                opt_config=opt_config,
                scc_pulse=scc_pulse,
            )
        )
    return tasks


def run_scenario_members(tasks: list[MemberTask], workers: int = 1) -> list[MemberResult]:
    """Run member tasks (optionally in a process pool); results ordered by id."""
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_member, tasks))
    else:
        results = [run_member(t) for t in tasks]
    return sorted(results, key=lambda r: r.member_id)


def member_table(results: list[MemberResult]) -> pd.DataFrame:
    rows = []
    for res in results:
        row = {"member_id": res.member_id, "scenario": res.scenario, "ecs": res.ecs,
               "converged": res.converged, "iterations": res.iterations,
               "kkt_residual": res.kkt_residual}
        row.update(res.diagnostics)
        rows.append(row)
    return pd.DataFrame(rows)


def summary_table(results: list[MemberResult], metrics_path: Path | None = None) -> pd.DataFrame:
    """Headline medians and 5-95 % ranges plus ensemble correlations."""
    members = member_table(results)
    rows = []
    for name in (
        "emissions_2050", "emissions_2100", "net_zero_year", "scc",
        "peak_warming", "warming_2100", "erf_2100", "near_term_discount_rate_pct",
    ):
        values = members[name].astype(float)
        finite = values.dropna()
        rows.append(
            {
                "metric": name,
                "median": float(finite.median()) if len(finite) else np.nan,
                "p5": float(np.percentile(finite, 5)) if len(finite) else np.nan,
                "p95": float(np.percentile(finite, 95)) if len(finite) else np.nan,
                "n": int(len(finite)),
            }
        )

    def corr(a: pd.Series, b: pd.Series) -> float:
        if len(a) < 3 or a.std() == 0 or b.std() == 0:
            return np.nan
        return float(np.corrcoef(a, b)[0, 1])

    correlations = {
        "corr_ecs_scc": corr(members["ecs"], members["scc"]),
        "corr_ecs_emissions_2050": corr(members["ecs"], members["emissions_2050"]),
    }
    if metrics_path is not None and Path(metrics_path).exists():
        extra = pd.read_csv(metrics_path, comment="#").set_index("member_id")
        if "erf_aerosol_2005_2014" in extra.columns:
            joined = members.join(extra["erf_aerosol_2005_2014"], on="member_id").dropna(
                subset=["erf_aerosol_2005_2014"]
            )
            correlations["corr_aerosol_scc"] = corr(
                joined["erf_aerosol_2005_2014"], joined["scc"]
            )
    for name, value in correlations.items():
        rows.append({"metric": name, "median": value, "p5": np.nan, "p95": np.nan,
                     "n": len(members)})
    return pd.DataFrame(rows)


def band_table(results: list[MemberResult], field: str) -> pd.DataFrame:
    """Per-year ensemble quantile bands of one trajectory series."""
    years = results[0].trajectory.years
    data = np.stack([getattr(r.trajectory, field) for r in results])
    q = np.percentile(data, [5, 16, 50, 84, 95], axis=0)
    return pd.DataFrame(
        {
            "scenario": results[0].scenario,
            "year": years,
            "p5": q[0], "p16": q[1], "p50": q[2], "p84": q[3], "p95": q[4],
        }
    )


def get_preset(name: str) -> ScenarioPreset:
    if name not in SCENARIO_PRESETS:
        raise io_mod.DataError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIO_PRESETS)}"
        )
    return SCENARIO_PRESETS[name]
