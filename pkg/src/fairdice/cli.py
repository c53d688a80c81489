"""Command-line entry points.

Four subcommands share a JSON-config-plus-flags convention where explicit
flags override file values:

* ``run``: optimize and simulate one scenario across ensemble members,
  exporting trajectory, summary and plot-data tables.
* ``constrain``: rebuild the constrained climate-parameter ensemble from
  the calibration tables, historical forcing and observed warming.
* ``demo-ecs``: integrate the historical record with climate sensitivity
  pinned to 2/3/5 K and report each variant's misfit to observations.
* ``extend-population``: carry a population series ending by 2300 out to
  2500 with a tapered growth rate.

Every output CSV carries a header recording the package version, config
hash and seed, and is promoted into place atomically so an interrupted
run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import history
from . import io as io_mod
from .datagen import scaling_specs
from .econ import SCENARIO_PRESETS, extend_population
from .ensemble import (
    RMSE_THRESHOLD_K,
    ecs_variation_demo,
    fit_skew_normal,
    run_constraining_pipeline,
)
from .optimize import OptimizerConfig
from .runner import (
    band_table,
    build_tasks,
    get_preset,
    member_table,
    run_scenario_members,
    select_members,
    summary_table,
)

# trajectory field -> plot-data file, one per reproduced figure
FIGURE_FIELDS = [
    ("e_total", "fig_emissions.csv"),
    ("t1", "fig_temperature.csv"),
    ("f_total", "fig_forcing.csv"),
]

CONSTRAIN_DEFAULTS = {
    "prior_n": 20000,
    "posterior_n": 101,
    "rmse_threshold": RMSE_THRESHOLD_K,
    "assessed_warming": 0.85,
}


def _optimizer_config(cfg: io_mod.RunConfig) -> OptimizerConfig:
    known = {f.name for f in dataclasses.fields(OptimizerConfig)}
    unknown = sorted(set(cfg.optimizer) - known)
    if unknown:
        raise io_mod.DataError(f"unknown optimizer option(s) {unknown}")
    return OptimizerConfig(**{"seed": cfg.seed, **cfg.optimizer})


def cmd_run_scenario(cfg: io_mod.RunConfig) -> int:
    data_dir = Path(cfg.data_dir)
    out_dir = Path(cfg.out_dir)
    preset = get_preset(cfg.scenario)
    climate = io_mod.load_climate_params(data_dir / "climate_params.csv")
    member_ids = select_members(climate, cfg.members)
    if not member_ids:
        raise io_mod.DataError(
            f"member selection {cfg.members!r} matches no ensemble member"
        )
    tasks = build_tasks(
        data_dir, preset, member_ids, _optimizer_config(cfg), scc_pulse=cfg.scc_pulse_gtco2
    )
    results = run_scenario_members(tasks, workers=cfg.workers)
    stalled = [r.member_id for r in results if not r.converged]
    if stalled:
        print(
            f"warning: optimizer stopped at its iteration cap for member(s) "
            f"{stalled}; results written anyway",
            file=sys.stderr,
        )
    io_mod.write_csv(
        io_mod.tidy_trajectories(results), out_dir / "trajectories.csv", cfg,
        float_format="%.8g",
    )
    io_mod.write_csv(member_table(results), out_dir / "members.csv", cfg, float_format="%.8g")
    io_mod.write_csv(
        summary_table(results, data_dir / "member_metrics.csv"),
        out_dir / "summary.csv", cfg, float_format="%.6g",
    )
    for field_name, file_name in FIGURE_FIELDS:
        io_mod.write_csv(
            band_table(results, field_name), out_dir / file_name, cfg, float_format="%.6g"
        )
    scc_frame = pd.DataFrame(
        {
            "member_id": [r.member_id for r in results],
            "scenario": [r.scenario for r in results],
            "scc": [r.scc for r in results],
        }
    )
    io_mod.write_csv(scc_frame, out_dir / "fig_scc.csv", cfg, float_format="%.6g")
    print(f"scenario {preset.name}: {len(results)} member(s) written to {out_dir}")
    return 0


def _constrain_options(cfg: io_mod.RunConfig) -> dict:
    opts = dict(CONSTRAIN_DEFAULTS)
    unknown = sorted(set(cfg.constrain) - set(opts))
    if unknown:
        raise io_mod.DataError(f"unknown constrain option(s) {unknown}")
    opts.update({k: v for k, v in cfg.constrain.items() if v is not None})
    return opts


def cmd_constrain(cfg: io_mod.RunConfig) -> int:
    """Prior sampling -> historical integration -> observation/assessment reweighting."""
    data_dir = Path(cfg.data_dir)
    out_dir = Path(cfg.out_dir)
    opts = _constrain_options(cfg)

    ebm_table = io_mod._read_csv(data_dir / "ebm_calibration.csv", history.EBM_COLUMNS)
    carbon_table = io_mod._read_csv(data_dir / "carbon_calibration.csv", history.CARBON_COLUMNS)
    scalings_frame = io_mod._read_csv(
        data_dir / "scalings.csv", ["name", "kind", "lo", "hi", "mode"]
    )
    emis_years, emissions = io_mod.load_series(data_dir / "hist_emissions.csv", "gtco2")
    comp_frame = io_mod._read_csv(
        data_dir / "hist_fext_components.csv", ["year", "ghg", "aerosol", "natural"]
    )
    comp_years = comp_frame["year"].to_numpy(dtype=float)
    if len(emis_years) != len(comp_years) or not np.allclose(emis_years, comp_years):
        raise io_mod.DataError(
            "hist_emissions.csv and hist_fext_components.csv must share one year grid"
        )
    years = emis_years
    components = comp_frame[["ghg", "aerosol", "natural"]].reset_index(drop=True)
    window = (years >= 2005.0) & (years <= 2014.0)
    if not np.any(window):
        raise io_mod.DataError("hist_fext_components.csv must cover 2005-2014")
    aerosol_base = float(components["aerosol"].to_numpy()[window].mean())

    obs_years, obs_values = io_mod.load_observations(data_dir / "observations.csv")
    targets_frame = io_mod.load_targets(data_dir / "targets.csv")
    usable = set(history.CONSTRAINABLE_METRICS)
    targets = {
        row.name: fit_skew_normal(row.p5, row.p50, row.p95)
        for row in targets_frame.itertuples(index=False)
        if row.name in usable
    }
    if not targets:
        raise io_mod.DataError(
            f"{data_dir / 'targets.csv'} provides no usable constraining target"
        )

    prior = history.sample_prior(
        ebm_table, carbon_table, scaling_specs(scalings_frame), aerosol_base,
        int(opts["prior_n"]), cfg.seed,
    )
    run = history.run_history(prior, years, emissions, components)
    metrics = history.ensemble_metrics(prior, run, aerosol_base)
    hook = history.history_hook(prior, run, metrics)
    posterior, post_metrics, report = run_constraining_pipeline(
        prior, hook, obs_years, obs_values, targets,
        int(opts["posterior_n"]), cfg.seed + 1, threshold=float(opts["rmse_threshold"]),
    )

    member_ids = np.arange(len(posterior))
    climate_out = posterior.reset_index(drop=True).copy()
    climate_out.insert(0, "member_id", member_ids)
    init = history.initial_conditions_frame(
        prior, run, list(posterior.index), float(opts["assessed_warming"])
    )
    init.insert(0, "member_id", member_ids)
    metrics_out = post_metrics.reset_index(drop=True).copy()
    metrics_out.insert(0, "member_id", member_ids)

    io_mod.write_csv(climate_out, out_dir / "climate_params.csv", cfg, float_format="%.8g")
    io_mod.write_csv(init, out_dir / "init_conditions.csv", cfg, float_format="%.8g")
    io_mod.write_csv(metrics_out, out_dir / "member_metrics.csv", cfg, float_format="%.6g")
    io_mod.write_csv(report, out_dir / "constraining_report.csv", cfg, float_format="%.5g")
    print(
        f"constrained {int(opts['prior_n'])} prior draws to {len(posterior)} "
        f"members, written to {out_dir}"
    )
    return 0


def cmd_demo_ecs(cfg: io_mod.RunConfig) -> int:
    data_dir = Path(cfg.data_dir)
    out_dir = Path(cfg.out_dir)
    erf_years, erf = io_mod.load_series(data_dir / "hist_erf.csv", "wm2")
    obs_years, obs_values = io_mod.load_observations(data_dir / "observations.csv")
    climate = io_mod.load_climate_params(data_dir / "climate_params.csv")
    median_row = io_mod.median_member_params(climate)
    ebm = io_mod.member_ebm_params(median_row)
    table, scores = ecs_variation_demo(ebm, erf_years, erf, obs_years, obs_values)
    io_mod.write_csv(table, out_dir / "demo_ecs.csv", cfg, float_format="%.6g")
    rmse = pd.DataFrame(
        {"ecs": list(scores), "rmse_K": [scores[key] for key in scores]}
    )
    io_mod.write_csv(rmse, out_dir / "demo_ecs_rmse.csv", cfg, float_format="%.6g")
    for ecs, value in scores.items():
        print(f"ECS {ecs:g} K: RMSE {value:.3f} K against observations")
    return 0


def cmd_extend_population(cfg: io_mod.RunConfig, in_path: Path, out_path: Path) -> int:
    years, millions = io_mod.load_population(Path(in_path))
    out_years, out_values = extend_population(years, millions)
    frame = pd.DataFrame({"year": out_years, "millions": out_values})
    io_mod.write_csv(frame, Path(out_path), cfg, float_format="%.8g")
    print(
        f"extended {Path(in_path).name} from {years[-1]:g} to {out_years[-1]:g}, "
        f"written to {out_path}"
    )
    return 0


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--config", type=Path, default=None,
        help="JSON config file; explicit flags override its values",
    )
    sub.add_argument("--data", dest="data_dir", default=None, metavar="DIR",
                     help="input data directory")
    sub.add_argument("--out", dest="out_dir", default=None, metavar="DIR",
                     help="output directory")
    sub.add_argument("--seed", type=int, default=None,
                     help="random seed, recorded in every output header")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairdice",
        description="Coupled climate-economy scenario runner and ensemble tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="optimize and simulate a scenario over ensemble members")
    _common_flags(run_p)
    run_p.add_argument("--scenario", choices=sorted(SCENARIO_PRESETS), default=None,
                       help="scenario preset")
    run_p.add_argument("--members", default=None, metavar="SPEC",
                       help='"all", "median", or comma-separated member ids')
    run_p.add_argument("--workers", type=int, default=None,
                       help="parallel worker processes")

    con_p = sub.add_parser("constrain", help="rebuild the constrained parameter ensemble")
    _common_flags(con_p)
    con_p.add_argument("--prior-n", dest="prior_n", type=int, default=None,
                       help="prior sample size")
    con_p.add_argument("--posterior-n", dest="posterior_n", type=int, default=None,
                       help="constrained ensemble size")
    con_p.add_argument("--rmse-threshold", dest="rmse_threshold", type=float, default=None,
                       help="historical-fit RMSE cut in K")

    demo_p = sub.add_parser("demo-ecs",
                            help="historical warming at ECS 2/3/5 K versus observations")
    _common_flags(demo_p)

    ext_p = sub.add_parser("extend-population",
                           help="extend a population series through 2500")
    ext_p.add_argument("--in", dest="in_path", required=True, metavar="CSV",
                       help="input population series (year,millions), ending by 2300")
    ext_p.add_argument("--out", dest="out_path", required=True, metavar="CSV",
                       help="output file")
    ext_p.add_argument("--config", type=Path, default=None,
                       help="JSON config file, used only for the output stamp")
    ext_p.add_argument("--seed", type=int, default=None,
                       help="seed recorded in the output header")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key)
        for key in ("scenario", "members", "seed", "workers", "data_dir", "out_dir")
        if getattr(args, key, None) is not None
    }
    try:
        cfg = io_mod.load_config(args.config, overrides)
        if args.command == "run":
            return cmd_run_scenario(cfg)
        if args.command == "constrain":
            for key in ("prior_n", "posterior_n", "rmse_threshold"):
                value = getattr(args, key)
                if value is not None:
                    cfg.constrain[key] = value
            return cmd_constrain(cfg)
        if args.command == "demo-ecs":
            return cmd_demo_ecs(cfg)
        return cmd_extend_population(cfg, args.in_path, args.out_path)
    except (io_mod.DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
