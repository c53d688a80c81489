"""Shared fixtures: shipped data tables and an assembled median ensemble member."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fairdice import io as io_mod
from fairdice.climate import discretize
from fairdice.coupled import ControlPath, EconSetup, InitialConditions, MemberClimate
from fairdice.econ import EconParams, dice2016r_defaults, optimal_longrun_savings
from fairdice.runner import control_bounds, get_preset, select_members

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def climate_table(data_dir: Path) -> pd.DataFrame:
    return io_mod.load_climate_params(data_dir / "climate_params.csv")


@pytest.fixture(scope="session")
def init_table(data_dir: Path) -> pd.DataFrame:
    return io_mod.load_init_conditions(data_dir / "init_conditions.csv")


@pytest.fixture(scope="session")
def population(data_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    return io_mod.load_population(data_dir / "population.csv")


@pytest.fixture(scope="session")
def median_row(climate_table: pd.DataFrame) -> pd.Series:
    return io_mod.median_member_params(climate_table)


@dataclass
class MemberFixture:
    """One shipped member wired up for coupled simulation under one preset."""

    member_id: int
    row: pd.Series
    climate: MemberClimate
    econ: EconSetup
    init: InitialConditions
    f_ext: np.ndarray

    def params(self) -> EconParams:
        return self.econ.params


def assemble_member(
    data_dir: Path,
    climate_table: pd.DataFrame,
    init_table: pd.DataFrame,
    population: tuple[np.ndarray, np.ndarray],
    member_id: int,
    scenario: str,
) -> MemberFixture:
    preset = get_preset(scenario)
    row = climate_table.loc[member_id]
    econ = dice2016r_defaults(preset.rho, preset.eta, l0=float(population[1][0]))
    climate = MemberClimate(
        carbon=io_mod.member_carbon_params(row),
        ebm=discretize(io_mod.member_ebm_params(row, dt=econ.dt)),
    )
    fext_series = io_mod.load_fext(data_dir / f"fext_{preset.fext_id}.csv").loc[member_id]
    return MemberFixture(
        member_id=member_id,
        row=row,
        climate=climate,
        econ=EconSetup(params=econ, labour=population[1][: econ.n_periods]),
        init=io_mod.member_init_conditions(init_table.loc[member_id]),
        f_ext=fext_series.to_numpy(dtype=float)[: econ.n_periods],
    )


@pytest.fixture(scope="session")
def median_member(
    data_dir: Path,
    climate_table: pd.DataFrame,
    init_table: pd.DataFrame,
    population: tuple[np.ndarray, np.ndarray],
) -> MemberFixture:
    """Median-ECS shipped member under the 'optimal' preset."""
    member_id = select_members(climate_table, "median")[0]
    return assemble_member(data_dir, climate_table, init_table, population, member_id, "optimal")


def feasible_controls(econ: EconParams, mu_level: float = 0.5, s_level: float = 0.25) -> ControlPath:
    """A fixed control path strictly inside the box (period-1 pin respected)."""
    lo, hi = control_bounds(econ)
    n = econ.n_periods
    mu = np.clip(np.full(n, mu_level), lo[:n], hi[:n])
    s = np.clip(np.full(n, s_level), lo[n:], hi[n:])
    s[-econ.savings_pin_periods :] = optimal_longrun_savings(econ)
    return ControlPath(mu=mu, s=s)
