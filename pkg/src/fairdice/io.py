"""Data-table ingestion, stamped atomic CSV output and run configuration."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd

from .carbon import CarbonParams
from .climate import EBMParams
from .coupled import InitialConditions

try:
    ARTIFACT_VERSION = version("fairdice")
except PackageNotFoundError:  # pragma: no cover - running from a checkout
    ARTIFACT_VERSION = "0+unknown"

CLIMATE_COLUMNS = [
    "member_id", "kappa1", "kappa2", "kappa3", "C1", "C2", "C3",
    "epsilon", "gamma", "f2x_eff", "r0", "rU", "rT", "rA", "cPre",
]
INIT_COLUMNS = [
    "member_id", "R1", "R2", "R3", "R4", "T1", "T2", "T3", "f2x_eff", "c_ref", "G",
]


class DataError(RuntimeError):
    """A required input table is missing or malformed."""


def _read_csv(path: Path, required: list[str]) -> pd.DataFrame:
    if not path.exists():
        raise DataError(f"required data file not found: {path}")
    try:
        frame = pd.read_csv(path, comment="#")
    except Exception as exc:  # noqa: BLE001 - surface the file name
        raise DataError(f"could not parse {path}: {exc}") from exc
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataError(f"{path} lacks required column(s) {missing}")
    return frame


def load_climate_params(path: Path) -> pd.DataFrame:
    frame = _read_csv(path, CLIMATE_COLUMNS)
    return frame.set_index("member_id", drop=False)


def load_init_conditions(path: Path) -> pd.DataFrame:
    frame = _read_csv(path, INIT_COLUMNS)
    return frame.set_index("member_id", drop=False)


def load_fext(path: Path) -> pd.DataFrame:
    """Wide (member rows x year columns) non-CO2 forcing from the tidy file."""
    frame = _read_csv(path, ["member_id", "year", "wm2"])
    wide = frame.pivot(index="member_id", columns="year", values="wm2")
    if wide.isna().any().any():
        raise DataError(f"{path} has missing member/year combinations")
    return wide


def load_population(path: Path) -> tuple[np.ndarray, np.ndarray]:
    frame = _read_csv(path, ["year", "millions"])
    years = frame["year"].to_numpy(dtype=float)
    values = frame["millions"].to_numpy(dtype=float)
    if np.any(np.diff(years) <= 0):
        raise DataError(f"{path} years must increase")
    return years, values


def load_observations(path: Path) -> tuple[np.ndarray, np.ndarray]:
    frame = _read_csv(path, ["year", "K"])
    return frame["year"].to_numpy(dtype=float), frame["K"].to_numpy(dtype=float)


def load_series(path: Path, value_col: str) -> tuple[np.ndarray, np.ndarray]:
    frame = _read_csv(path, ["year", value_col])
    return frame["year"].to_numpy(dtype=float), frame[value_col].to_numpy(dtype=float)


def load_targets(path: Path) -> pd.DataFrame:
    frame = _read_csv(path, ["name", "p5", "p50", "p95"])
    return frame.set_index("name", drop=False)


def member_carbon_params(row: pd.Series) -> CarbonParams:
    return CarbonParams(
        r0=float(row["r0"]), r_u=float(row["rU"]), r_t=float(row["rT"]),
        r_a=float(row["rA"]), c_ref=float(row["cPre"]),
    )


def member_ebm_params(row: pd.Series, dt: float = 3.0) -> EBMParams:
    return EBMParams(
        kappa=(float(row["kappa1"]), float(row["kappa2"]), float(row["kappa3"])),
        capacity=(float(row["C1"]), float(row["C2"]), float(row["C3"])),
        epsilon=float(row["epsilon"]),
        gamma_autocorr=float(row["gamma"]),
        f2x=float(row["f2x_eff"]),
        dt=dt,
    )


def member_init_conditions(row: pd.Series) -> InitialConditions:
    return InitialConditions(
        pools=(float(row["R1"]), float(row["R2"]), float(row["R3"]), float(row["R4"])),
        t_layers=(float(row["T1"]), float(row["T2"]), float(row["T3"])),
        cumulative=float(row["G"]),
        f2x_eff=float(row["f2x_eff"]),
        c_ref=float(row["c_ref"]),
    )


def median_member_params(climate_table: pd.DataFrame) -> pd.Series:
    """Column-wise median of the posterior parameter table."""
    cols = [c for c in climate_table.columns if c != "member_id"]
    med = climate_table[cols].median()
    med["member_id"] = -1
    return med


@dataclass
class RunConfig:
    """Effective configuration of one CLI invocation (file merged with flags)."""

    scenario: str = "optimal"
    members: str = "all"
    seed: int = 0
    workers: int = 1
    data_dir: str = "data"
    out_dir: str = "out"
    scc_pulse_gtco2: float = 1.0
    optimizer: dict = field(default_factory=dict)
    constrain: dict = field(default_factory=dict)

    def canonical_json(self) -> str:
        payload = {k: getattr(self, k) for k in (
            "scenario", "members", "seed", "workers", "data_dir", "out_dir",
            "scc_pulse_gtco2", "optimizer", "constrain",
        )}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def load_config(path: Path | None, overrides: dict) -> RunConfig:
    """Build the effective config: defaults, then file, then non-None flags."""
    cfg = RunConfig()
    if path is not None:
        if not Path(path).exists():
            raise DataError(f"config file not found: {path}")
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"config file {path} is not valid JSON: {exc}") from exc
        unknown = [k for k in data if not hasattr(cfg, k)]
        if unknown:
            raise DataError(f"config file {path} has unknown key(s) {unknown}")
        for key, value in data.items():
            setattr(cfg, key, value)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def stamp_header(config: RunConfig) -> str:
    return (
        f"# fairdice v{ARTIFACT_VERSION} | config_sha256={config.config_hash()} "
        f"| seed={config.seed}\n"
    )


def write_csv(frame: pd.DataFrame, path: Path, config: RunConfig, float_format: str = "%.10g") -> None:
    """Write a stamped CSV atomically: temp file in place, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(stamp_header(config))
            frame.to_csv(handle, index=False, float_format=float_format)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def tidy_trajectories(results: list) -> pd.DataFrame:
    """Long-format (member_id, scenario, year, variable, value) trajectory table."""
    chunks = []
    for res in results:
        traj = res.trajectory
        n = len(traj.years)
        for name in traj.SERIES_FIELDS:
            chunks.append(
                pd.DataFrame(
                    {
                        "member_id": res.member_id,
                        "scenario": res.scenario,
                        "year": traj.years,
                        "variable": name,
                        "value": getattr(traj, name),
                    }
                )
            )
    return pd.concat(chunks, ignore_index=True)
