"""Growth-economy tests: calibration identities, exogenous paths, welfare."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fairdice import io as io_mod
from fairdice.econ import (
    DAMAGE_FRACTION_CAP,
    SCENARIO_PRESETS,
    EconParams,
    abatement_cost_fraction,
    afolu_emissions,
    backstop_path,
    calibrate_sigma0,
    calibrate_tfp,
    capital_step,
    damage_fraction,
    dice2016r_defaults,
    discount_factors,
    emissions_ffi,
    extend_population,
    gross_output,
    mu_bounds,
    optimal_longrun_savings,
    period_utility,
    ramsey_rate,
    sigma_path,
    tfp_path,
    theta1_path,
    welfare,
)


class TestOutputAndCalibration:
    def test_cobb_douglas_homogeneity(self):
        y = gross_output(5.0, 100.0, 7000.0)
        assert gross_output(5.0, 200.0, 7000.0) == pytest.approx(y * 2**0.3, rel=1e-14)
        assert gross_output(5.0, 100.0, 14000.0) == pytest.approx(y * 2**0.7, rel=1e-14)
        assert gross_output(10.0, 100.0, 7000.0) == pytest.approx(2.0 * y, rel=1e-14)

    def test_tfp_calibration_round_trip(self):
        tfp = calibrate_tfp(133.0, 341.0, 8045.0)
        assert gross_output(tfp, 341.0, 8045.0) == pytest.approx(133.0, rel=1e-12)

    def test_tfp_calibration_zero_capital_share(self):
        assert calibrate_tfp(133.0, 341.0, 8045.0, gamma_out=0.0) == pytest.approx(
            133.0 / 8045.0, rel=1e-14
        )

    def test_tfp_calibration_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            calibrate_tfp(0.0, 341.0, 8045.0)
        with pytest.raises(ValueError):
            calibrate_tfp(133.0, -1.0, 8045.0)

    def test_sigma_calibration(self):
        sigma0 = calibrate_sigma0(36.6, 133.0, 0.15)
        assert sigma0 * 133.0 * (1.0 - 0.15) == pytest.approx(36.6, rel=1e-14)
        assert sigma0 == pytest.approx(EconParams(rho=0.015, eta=1.45).sigma0, rel=1e-14)


class TestEmissions:
    def test_ffi_formula(self):
        assert emissions_ffi(0.3, 100.0, 0.25) == pytest.approx(22.5, rel=1e-14)
        assert emissions_ffi(0.0, 100.0, 0.2) == 0.0
        assert emissions_ffi(0.3, 100.0, 1.0) == 0.0
        assert emissions_ffi(0.3, 100.0, 1.2) < 0.0

    def test_afolu_logistic_midpoint(self):
        # at the centre period the logistic window is exactly one half
        assert afolu_emissions(10.0, 35) == pytest.approx(
            0.5 * (1.54 + 0.0464 * 10.0 - 0.189 * 35), rel=1e-12
        )

    def test_afolu_first_period_hand_value(self):
        assert afolu_emissions(36.6, 1) == pytest.approx(
            1.54 + 0.0464 * 36.6 - 0.189, rel=1e-9
        )

    def test_afolu_vanishes_late(self):
        assert abs(afolu_emissions(36.6, 160)) < 1e-30

    def test_afolu_increases_with_industrial_emissions(self):
        assert afolu_emissions(40.0, 10) > afolu_emissions(10.0, 10)


class TestMuBounds:
    def test_first_period_pinned(self):
        assert mu_bounds(1) == (0.15, 0.15)

    def test_ramp_values(self):
        assert mu_bounds(4) == (0.0, pytest.approx(0.6))
        assert mu_bounds(7) == (0.0, pytest.approx(1.05))
        assert mu_bounds(8) == (0.0, pytest.approx(1.2))

    def test_cap_binds_from_period_eight(self):
        for t in range(2, 161):
            lo, hi = mu_bounds(t)
            assert lo == 0.0
            assert hi == pytest.approx(min(0.15 * t, 1.2), rel=1e-14)

    def test_rejects_period_zero(self):
        with pytest.raises(ValueError, match="1-based"):
            mu_bounds(0)


class TestExogenousPaths:
    PARAMS = EconParams(rho=0.015, eta=1.45)

    def test_tfp_recursion(self):
        tfp = tfp_path(self.PARAMS)
        assert tfp[0] == self.PARAMS.tfp0
        for i in range(1, 6):
            growth = self.PARAMS.tfp_growth0 * math.exp(
                -self.PARAMS.tfp_growth_decline * self.PARAMS.dt * (i - 1)
            )
            assert tfp[i] == pytest.approx(tfp[i - 1] / (1.0 - growth), rel=1e-12)
        assert np.all(np.diff(tfp) > 0)

    def test_sigma_starts_at_sigma0_and_accelerates_downward(self):
        sigma = sigma_path(self.PARAMS)
        assert sigma[0] == self.PARAMS.sigma0
        assert sigma[1] == pytest.approx(
            self.PARAMS.sigma0 * math.exp(self.PARAMS.sigma_growth0 * self.PARAMS.dt),
            rel=1e-12,
        )
        assert np.all(np.diff(sigma) < 0)
        # per-period log decline strengthens over time
        log_steps = np.diff(np.log(sigma))
        assert np.all(np.diff(log_steps) < 0)

    def test_backstop_declines_geometrically(self):
        backstop = backstop_path(self.PARAMS)
        assert backstop[0] == self.PARAMS.backstop0
        for t in (1, 10, 100):
            assert backstop[t] == pytest.approx(
                650.0 * (1.0 - 0.005051) ** (3.0 * t), rel=1e-12
            )

    def test_theta1_combines_backstop_and_intensity(self):
        theta1 = theta1_path(self.PARAMS)
        np.testing.assert_allclose(
            theta1,
            backstop_path(self.PARAMS) * sigma_path(self.PARAMS) / (1000.0 * 2.6),
            rtol=1e-14,
        )

    def test_paths_return_copies(self):
        first = sigma_path(self.PARAMS)
        first[0] = -99.0
        assert sigma_path(self.PARAMS)[0] == self.PARAMS.sigma0


class TestCostsAndDamages:
    PARAMS = EconParams(rho=0.015, eta=1.45)

    def test_zero_abatement_costs_nothing(self):
        assert abatement_cost_fraction(0.0, 1, self.PARAMS) == 0.0

    def test_power_law_exponent(self):
        ratio = abatement_cost_fraction(1.0, 5, self.PARAMS) / abatement_cost_fraction(
            0.5, 5, self.PARAMS
        )
        assert ratio == pytest.approx(2.0**2.6, rel=1e-12)

    def test_first_period_full_abatement_cost(self):
        assert abatement_cost_fraction(1.0, 1, self.PARAMS) == pytest.approx(
            650.0 * self.PARAMS.sigma0 / (1000.0 * 2.6), rel=1e-12
        )

    def test_period_outside_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            abatement_cost_fraction(0.5, 0, self.PARAMS)
        with pytest.raises(ValueError, match="horizon"):
            abatement_cost_fraction(0.5, 161, self.PARAMS)

    def test_damage_quadratic(self):
        assert damage_fraction(0.0, 0.00236) == 0.0
        assert damage_fraction(3.0, 0.00236) == pytest.approx(0.02124, rel=1e-12)

    def test_damage_cap(self):
        assert damage_fraction(30.0, 0.00236) == DAMAGE_FRACTION_CAP
        np.testing.assert_allclose(
            damage_fraction(np.array([0.0, 3.0, 50.0]), 0.00236),
            [0.0, 0.02124, DAMAGE_FRACTION_CAP],
        )


class TestCapitalAndUtility:
    def test_capital_step_formula(self):
        assert capital_step(100.0, 10.0, 0.2, 3.0, 0.1) == pytest.approx(
            0.9**3 * 100.0 + 3.0 * 0.2 * 10.0, rel=1e-14
        )
        assert capital_step(100.0, 10.0, 0.0, 3.0, 0.0) == pytest.approx(100.0)

    def test_capital_floor(self):
        assert capital_step(1.0, -1e6, 0.9, 3.0, 0.1) == pytest.approx(1e-6)

    def test_utility_is_zero_at_unit_consumption(self):
        assert period_utility(1.0, 1.0) == 0.0
        assert period_utility(1.0, 1.45) == 0.0
        assert period_utility(1.0, 0.12) == 0.0

    def test_log_branch(self):
        assert period_utility(math.e, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_crra_hand_value(self):
        assert period_utility(2.0, 1.45) == pytest.approx(
            (2.0**-0.45 - 1.0) / -0.45, rel=1e-14
        )

    def test_continuity_at_log_branch(self):
        for eta in (1.0 - 1e-6, 1.0 + 1e-6):
            assert period_utility(2.0, eta) == pytest.approx(math.log(2.0), abs=1e-5)

    def test_rejects_nonpositive_consumption(self):
        with pytest.raises(ValueError, match="positive"):
            period_utility(0.0, 1.45)
        with pytest.raises(ValueError, match="positive"):
            period_utility(np.array([1.0, -0.5]), 1.0)

    def test_array_shape_preserved(self):
        out = period_utility(np.array([1.0, 2.0, 4.0]), 1.0)
        assert out.shape == (3,)
        assert isinstance(period_utility(2.0, 1.0), float)


class TestWelfare:
    def test_discount_factors(self):
        np.testing.assert_allclose(
            discount_factors(0.015, 3, 3.0),
            [1.0, 1.015**-3, 1.015**-6],
            rtol=1e-14,
        )
        assert discount_factors(0.5, 1, 3.0)[0] == 1.0

    def test_single_period(self):
        c = np.array([2.0])
        lab = np.array([7000.0])
        assert welfare(c, lab, 0.015, 1.0, 3.0) == pytest.approx(
            7000.0 * math.log(2.0), rel=1e-14
        )

    def test_two_period_hand_example(self):
        c = np.array([math.e, math.e**2])
        lab = np.array([10.0, 20.0])
        assert welfare(c, lab, 0.0, 1.0, 3.0) == pytest.approx(50.0, rel=1e-12)
        assert welfare(c, lab, 1.0, 1.0, 1.0) == pytest.approx(10.0 + 20.0, rel=1e-12)

    def test_decreasing_in_discount_rate_for_positive_utilities(self):
        c = np.array([2.0, 3.0, 4.0])
        lab = np.ones(3)
        values = [welfare(c, lab, rho, 1.45, 3.0) for rho in (0.0, 0.01, 0.05)]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="align"):
            welfare(np.ones(3), np.ones(4), 0.015, 1.0, 3.0)

    def test_ramsey_rate(self):
        assert ramsey_rate(1.5, 0.0, 2.0) == pytest.approx(1.5)
        assert ramsey_rate(0.2, 1.24, 1.84) == pytest.approx(2.4816, rel=1e-12)
        assert ramsey_rate(1.5, 1.45, 1.10) == pytest.approx(3.095, rel=1e-12)

    def test_longrun_savings_plausible(self):
        for preset in SCENARIO_PRESETS.values():
            params = EconParams(rho=preset.rho, eta=preset.eta)
            assert 0.0 < optimal_longrun_savings(params) < 0.5

    def test_longrun_savings_hand_value(self):
        params = EconParams(rho=0.015, eta=1.45)
        assert optimal_longrun_savings(params) == pytest.approx(
            0.104 / (0.1 + 0.004 * 1.45 + 0.015) * 0.3, rel=1e-12
        )


class TestExtendPopulation:
    def test_flat_series_stays_flat(self):
        years = np.arange(2100.0, 2301.0, 10.0)
        millions = np.full(years.shape, 1000.0)
        ext_years, ext_values = extend_population(years, millions)
        assert ext_years[-1] == 2500.0
        np.testing.assert_allclose(np.diff(ext_years), 10.0)
        np.testing.assert_allclose(ext_values, 1000.0)

    def test_constant_growth_tapers_linearly(self):
        years = np.arange(2100.0, 2301.0, 10.0)
        millions = 1000.0 * 1.01 ** np.arange(len(years))
        ext_years, ext_values = extend_population(years, millions)
        # growth fraction applied on the 10-yr grid: 1.00, 0.95, ..., 0.05
        tapers = [1.0 - 0.05 * k for k in range(20)]
        expected = [millions[-1]]
        for taper in tapers:
            expected.append(expected[-1] * (1.0 + 0.01 * taper))
        np.testing.assert_allclose(ext_values[len(years) - 1 :], expected, rtol=1e-9)
        assert ext_years[-1] == 2500.0

    def test_shipped_series_reaches_published_level(self, data_dir):
        years, millions = io_mod.load_population(data_dir / "population_to2300.csv")
        ext_years, ext_values = extend_population(years, millions)
        assert ext_years[-1] == 2500.0
        assert ext_values[-1] == pytest.approx(4931.0, abs=0.5)

    def test_extension_matches_shipped_full_grid(self, data_dir):
        years, millions = io_mod.load_population(data_dir / "population_to2300.csv")
        full_years, full_values = io_mod.load_population(data_dir / "population.csv")
        ext_years, ext_values = extend_population(years, millions)
        np.testing.assert_allclose(ext_years, full_years)
        np.testing.assert_allclose(ext_values, full_values, rtol=1e-6)

    def test_rejects_short_or_misaligned_series(self):
        with pytest.raises(ValueError, match="pair"):
            extend_population(np.array([2100.0, 2110.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="pair"):
            extend_population(np.arange(2100.0, 2301.0, 10.0), np.ones(3))

    def test_rejects_nonuniform_grid(self):
        years = np.array([2250.0, 2260.0, 2275.0, 2300.0])
        with pytest.raises(ValueError, match="uniform"):
            extend_population(years, np.ones(4))

    def test_rejects_already_extended(self):
        years = np.arange(2100.0, 2401.0, 10.0)
        with pytest.raises(ValueError, match="already extends"):
            extend_population(years, np.ones(len(years)))

    def test_rejects_missing_growth_window(self):
        years = np.arange(2000.0, 2201.0, 10.0)
        with pytest.raises(ValueError, match="2250-2300"):
            extend_population(years, np.ones(len(years)))


class TestDefaultsAndPresets:
    def test_calibrated_output_and_emissions(self):
        p = dice2016r_defaults(0.015, 1.45)
        assert gross_output(p.tfp0, p.k0, 8045.0) == pytest.approx(133.0, rel=1e-12)
        assert p.sigma0 * 133.0 * (1.0 - p.mu0) == pytest.approx(36.6, rel=1e-12)

    def test_grid_spans_2023_to_2500(self):
        p = dice2016r_defaults(0.015, 1.45)
        assert p.start_year == 2023
        assert p.n_periods == 160
        assert p.start_year + p.dt * (p.n_periods - 1) == 2500

    def test_discounting_plumbed_through(self):
        p = dice2016r_defaults(0.0012, 0.12)
        assert p.rho == 0.0012
        assert p.eta == 0.12

    def test_param_validation(self):
        with pytest.raises(ValueError, match="gamma_out"):
            EconParams(rho=0.015, eta=1.45, gamma_out=1.0)
        with pytest.raises(ValueError, match="discounting"):
            EconParams(rho=0.015, eta=-0.1)
        with pytest.raises(ValueError, match="discounting"):
            EconParams(rho=-1.0, eta=1.45)
        with pytest.raises(ValueError, match="convex"):
            EconParams(rho=0.015, eta=1.45, theta2=1.0)
        with pytest.raises(ValueError, match="periods"):
            EconParams(rho=0.015, eta=1.45, n_periods=1)

    def test_scenario_presets(self):
        assert set(SCENARIO_PRESETS) == {"optimal", "wb2c", "p15c", "rennert"}
        assert SCENARIO_PRESETS["optimal"].rho == 0.015
        assert SCENARIO_PRESETS["optimal"].eta == 1.45
        assert SCENARIO_PRESETS["wb2c"].rho == 0.0035
        assert SCENARIO_PRESETS["wb2c"].eta == 0.35
        assert SCENARIO_PRESETS["p15c"].rho == 0.0012
        assert SCENARIO_PRESETS["p15c"].eta == 0.12
        assert SCENARIO_PRESETS["rennert"].rho == 0.002
        assert SCENARIO_PRESETS["rennert"].eta == 1.24
        for name, preset in SCENARIO_PRESETS.items():
            assert preset.name == name
            assert preset.fext_id == name
