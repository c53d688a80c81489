"""Probabilistic ensemble construction: prior sampling and observational constraining.

Priors come from Gaussian kernel density estimates over calibration tables
plus scaled forcing uncertainties; members are filtered by historical
temperature RMSE and reweighted toward assessed-range targets expressed as
three quantiles of a skew-normal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy import optimize as sciopt
from scipy import stats

NINETY_TO_SIGMA = 2.0 * stats.norm.ppf(0.95)  # 90 % range width in sigmas
RMSE_THRESHOLD_K = 0.16
BASELINE_WINDOW = (1850.0, 1900.0)


@dataclass(frozen=True)
class ScalingSpec:
    """Sampling descriptor for one forcing-uncertainty category.

    kind = "gaussian": 90 % range [lo, hi], symmetric about the midpoint.
    kind = "half_gaussian": mode plus asymmetric 90 % range [lo, hi]; each
    side is a half-Gaussian chosen with probability 1/2, which makes the
    requested quantiles exact and reduces to the Gaussian when symmetric.
    kind = "uniform": hard bounds [lo, hi].
    """

    kind: str
    lo: float
    hi: float
    mode: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "half_gaussian", "uniform"):
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        if not self.hi > self.lo:
            raise ValueError("scaling range must have hi > lo")
        if self.kind == "half_gaussian":
            m = self.best_estimate
            if not self.lo < m < self.hi:
                raise ValueError("half_gaussian mode must lie inside (lo, hi)")

    @property
    def best_estimate(self) -> float:
        return 0.5 * (self.lo + self.hi) if self.mode is None else self.mode


def sample_scaling(spec: ScalingSpec, n: int, seed: int) -> np.ndarray:
    """Draw n scale factors with the descriptor's 90 % range (or hard bounds)."""
    rng = np.random.default_rng(seed)
    if spec.kind == "uniform":
        return rng.uniform(spec.lo, spec.hi, size=n)
    if spec.kind == "gaussian":
        sigma = (spec.hi - spec.lo) / NINETY_TO_SIGMA
        return rng.normal(spec.best_estimate, sigma, size=n)
    mode = spec.best_estimate
    sig_lo = (mode - spec.lo) / (NINETY_TO_SIGMA / 2.0)
    sig_hi = (spec.hi - mode) / (NINETY_TO_SIGMA / 2.0)
    side = rng.random(n) < 0.5
    mag = np.abs(rng.standard_normal(n))
    return np.where(side, mode - sig_lo * mag, mode + sig_hi * mag)


def sample_kde(
    table: pd.DataFrame | np.ndarray, n: int, seed: int, bw_method: str | float = "scott"
) -> pd.DataFrame | np.ndarray:
    """Sample from a Gaussian KDE fitted over the rows of a calibration table.

    Zero-variance columns are widened by a tiny jitter (with a warning) so
    the kernel covariance stays positive definite.
    """
    frame = isinstance(table, pd.DataFrame)
    data = np.asarray(table, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("calibration table needs at least two rows")
    rng = np.random.default_rng(seed)
    spread = data.std(axis=0)
    flat = spread == 0.0
    if np.any(flat):
        warnings.warn(
            f"{int(flat.sum())} zero-variance column(s) widened by epsilon for KDE sampling",
            stacklevel=2,
        )
        jitter_scale = np.where(flat, 1e-9 * np.maximum(1.0, np.abs(data).max(axis=0)), 0.0)
        data = data + rng.standard_normal(data.shape) * jitter_scale
    kde = stats.gaussian_kde(data.T, bw_method=bw_method)
    draws = kde.resample(n, seed=rng).T
    if frame:
        return pd.DataFrame(draws, columns=table.columns)
    return draws


def align_series(
    years_a: np.ndarray, values_a: np.ndarray, years_b: np.ndarray, values_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Restrict two (year, value) series to their common years."""
    years_a = np.asarray(years_a, dtype=float)
    years_b = np.asarray(years_b, dtype=float)
    common, ia, ib = np.intersect1d(years_a, years_b, return_indices=True)
    if len(common) == 0:
        raise ValueError("series have no overlapping years")
    return common, np.asarray(values_a, dtype=float)[ia], np.asarray(values_b, dtype=float)[ib]


def rmse(series_a: np.ndarray, series_b: np.ndarray) -> float:
    """Root-mean-square difference of two aligned series."""
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise ValueError("rmse needs two non-empty aligned series")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def rebaseline(years: np.ndarray, values: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    """Subtract the series mean over [window]; errors if the window is empty."""
    years = np.asarray(years, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (years >= window[0]) & (years <= window[1])
    if not np.any(mask):
        raise ValueError(f"no points inside the baseline window {window}")
    return values - values[mask].mean()


def rmse_filter(
    member_series: Sequence[tuple[int, np.ndarray, np.ndarray]],
    obs_years: np.ndarray,
    obs_values: np.ndarray,
    threshold: float = RMSE_THRESHOLD_K,
    baseline: tuple[float, float] | None = BASELINE_WINDOW,
) -> tuple[list[int], dict[int, float]]:
    """Keep members whose historical series matches observations within threshold.

    Each member entry is (member_id, years, values).  Both series are
    re-baselined to their own mean over the baseline window of the common
    years before the RMSE is taken; pass baseline=None to compare raw.
    Returns (surviving ids in input order, rmse per member).
    """
    survivors: list[int] = []
    scores: dict[int, float] = {}
    for member_id, years, values in member_series:
        common, model, obs = align_series(years, values, obs_years, obs_values)
        if baseline is not None:
            model = rebaseline(common, model, baseline)
            obs = rebaseline(common, obs, baseline)
        score = rmse(model, obs)
        scores[member_id] = score
        if score <= threshold:
            survivors.append(member_id)
    return survivors, scores


@dataclass(frozen=True)
class SkewNormal:
    """Location-scale skew-normal with shape alpha (alpha = 0 is Gaussian)."""

    xi: float
    omega: float
    alpha: float

    def pdf(self, x):
        return stats.skewnorm.pdf(x, self.alpha, loc=self.xi, scale=self.omega)

    def cdf(self, x):
        return stats.skewnorm.cdf(x, self.alpha, loc=self.xi, scale=self.omega)

    def ppf(self, q):
        return stats.skewnorm.ppf(q, self.alpha, loc=self.xi, scale=self.omega)


class SkewNormalFitError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (max quantile residual {residual:.3e})")
        self.residual = residual


def fit_skew_normal(p5: float, p50: float, p95: float, tol: float = 1e-6) -> SkewNormal:
    """Fit (xi, omega, alpha) so the 5/50/95 quantiles match exactly.

    Symmetric inputs short-circuit to the Gaussian solution; otherwise the
    three-parameter system is root-found and verified to ``tol``.
    """
    if not p5 < p50 < p95:
        raise ValueError("quantiles must be strictly increasing")
    lo_gap, hi_gap = p50 - p5, p95 - p50
    if abs(hi_gap - lo_gap) <= 1e-12 * (hi_gap + lo_gap):
        return SkewNormal(xi=p50, omega=(p95 - p5) / NINETY_TO_SIGMA, alpha=0.0)

    target = np.array([p5, p50, p95])

    def residuals(params: np.ndarray) -> np.ndarray:
        alpha, xi, omega = params
        return stats.skewnorm.ppf((0.05, 0.50, 0.95), alpha, loc=xi, scale=abs(omega)) - target

    guess = np.array([1.0 if hi_gap > lo_gap else -1.0, p50, (p95 - p5) / NINETY_TO_SIGMA])
    sol = sciopt.root(residuals, guess, method="hybr", tol=1e-12)
    alpha, xi, omega = sol.x
    omega = abs(omega)
    fit = SkewNormal(xi=float(xi), omega=float(omega), alpha=float(alpha))
    residual = float(np.max(np.abs(fit.ppf((0.05, 0.50, 0.95)) - target)))
    if not np.isfinite(residual) or residual > tol * max(1.0, float(np.max(np.abs(target)))):
        raise SkewNormalFitError(
            "requested quantiles are not attainable by a skew-normal", residual
        )
    return fit


def reweight_resample(
    metrics: pd.DataFrame,
    targets: dict[str, SkewNormal],
    n_out: int,
    seed: int,
) -> tuple[pd.Index, np.ndarray]:
    """Resample members toward target distributions by density-ratio weighting.

    Each target metric contributes target_pdf(x) / prior_pdf(x) to a
    member's weight, with the prior density taken from a 1-D Gaussian KDE of
    that metric across members (naive-Bayes treatment of the joint).
    Members are drawn sequentially without replacement.  Returns the
    selected index labels and the normalised weights.
    """
    missing = [name for name in targets if name not in metrics.columns]
    if missing:
        raise ValueError(f"metrics table lacks target column(s): {missing}")
    if n_out > len(metrics):
        raise ValueError(f"cannot draw {n_out} members from {len(metrics)}")
    weights = np.ones(len(metrics))
    for name, dist in targets.items():
        x = metrics[name].to_numpy(dtype=float)
        prior = stats.gaussian_kde(x)(x)
        weights *= dist.pdf(x) / prior
    if not np.all(np.isfinite(weights)) or weights.sum() <= 0:
        raise ValueError("reweighting produced degenerate weights")
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(metrics), size=n_out, replace=False, p=weights)
    return metrics.index[chosen], weights


def constraining_report(
    metrics: pd.DataFrame, targets: dict[str, SkewNormal]
) -> pd.DataFrame:
    """Achieved 5/50/95 quantiles next to their targets, one row per metric."""
    rows = []
    for name, dist in targets.items():
        q = np.percentile(metrics[name].to_numpy(dtype=float), [5, 50, 95])
        t = dist.ppf((0.05, 0.50, 0.95))
        rows.append(
            {
                "name": name,
                "target_p5": t[0], "target_p50": t[1], "target_p95": t[2],
                "achieved_p5": q[0], "achieved_p50": q[1], "achieved_p95": q[2],
            }
        )
    return pd.DataFrame(rows)


def run_constraining_pipeline(
    prior: pd.DataFrame,
    historical_hook: Callable[[pd.Series], tuple[np.ndarray, np.ndarray, dict[str, float]]],
    obs_years: np.ndarray,
    obs_values: np.ndarray,
    targets: dict[str, SkewNormal],
    n_out: int,
    seed: int,
    threshold: float = RMSE_THRESHOLD_K,
    baseline: tuple[float, float] | None = BASELINE_WINDOW,
) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """RMSE-filter a prior ensemble then reweight the survivors to targets.

    ``historical_hook`` maps a prior row to (years, T1 series, metrics dict).
    Returns (posterior rows, posterior metrics, report table).  Raises if
    fewer than ``n_out`` members survive the filter.
    """
    series = []
    metric_rows = []
    for idx, row in prior.iterrows():
        years, values, extra = historical_hook(row)
        series.append((idx, years, values))
        metric_rows.append(extra)
    metrics = pd.DataFrame(metric_rows, index=prior.index)
    survivors, scores = rmse_filter(series, obs_years, obs_values, threshold, baseline)
    if len(survivors) < n_out:
        raise ValueError(
            f"only {len(survivors)} members pass the {threshold} K filter, need {n_out}"
        )
    kept = metrics.loc[survivors]
    chosen, _ = reweight_resample(kept, targets, n_out, seed)
    posterior_metrics = metrics.loc[chosen].copy()
    posterior_metrics["rmse_hist"] = [scores[i] for i in chosen]
    return prior.loc[chosen].copy(), posterior_metrics, constraining_report(posterior_metrics, targets)


def ecs_variation_demo(
    ebm_params,
    hist_years: np.ndarray,
    hist_erf: np.ndarray,
    obs_years: np.ndarray,
    obs_values: np.ndarray,
    ecs_values: Sequence[float] = (2.0, 3.0, 5.0),
    baseline: tuple[float, float] = BASELINE_WINDOW,
) -> tuple[pd.DataFrame, dict[float, float]]:
    """Historical reruns with kappa1 pinned to chosen sensitivities.

    Drives the energy balance model with a total-forcing series, re-baselines
    model and observations to the baseline window, and reports the RMSE per
    ECS case plus a plot-ready table (year, one column per case, obs).
    """
    from dataclasses import replace

    from .climate import discretize

    hist_years = np.asarray(hist_years, dtype=float)
    hist_erf = np.asarray(hist_erf, dtype=float)
    step = float(hist_years[1] - hist_years[0])
    table = pd.DataFrame({"year": hist_years})
    scores: dict[float, float] = {}
    for ecs in ecs_values:
        params = replace(
            ebm_params,
            kappa=(ebm_params.f2x / ecs, ebm_params.kappa[1], ebm_params.kappa[2]),
            dt=step,
        )
        ebm = discretize(params)
        t = np.zeros(3)
        t1 = np.empty(len(hist_years))
        for i in range(len(hist_years)):
            t1[i] = t[0]
            t = ebm.a_d @ t + ebm.b_d * hist_erf[i]
        rebased = rebaseline(hist_years, t1, baseline)
        table[f"ecs{ecs:g}"] = rebased
        common, model_c, obs_c = align_series(hist_years, rebased, obs_years, obs_values)
        scores[float(ecs)] = rmse(model_c, rebaseline(common, obs_c, baseline))
    obs_frame = pd.DataFrame({"year": np.asarray(obs_years, dtype=float), "obs": obs_values})
    table = table.merge(obs_frame, on="year", how="left")
    return table, scores
