import math

import numpy as np
import pytest

from conftest import truth_dataset
from priorsketch.dataset import Dataset
from priorsketch.formula import parse_model
from priorsketch.predictive import (EmptyMarginal, InvalidCheckConfig, PredictiveConfig,
                                    PriorsModelMismatch, dump_check_csv, kde,
                                    resolve_grid, run_check, sample_predictors,
                                    simulate_response, trapezoid_integral)
from priorsketch.priors import (SCALE_FLOOR, BootstrapConfig, PriorDistribution,
                                derive_priors, ols_fit)

MODEL = parse_model("y ~ 0 + x1 + x2")


def degenerate_priors(c1=2.0, c2=3.0, log_sigma=-20.0):
    return [
        PriorDistribution("coef_x1", "normal", {"mean": c1, "scale": SCALE_FLOOR}),
        PriorDistribution("coef_x2", "normal", {"mean": c2, "scale": SCALE_FLOOR}),
        PriorDistribution("sigma", "lognormal",
                          {"log_mean": log_sigma, "log_scale": SCALE_FLOOR}),
    ]


class TestConfig:
    def test_defaults(self):
        cfg = PredictiveConfig(seed=0)
        assert cfg.predictor_sample_count == 100
        assert cfg.parameter_draw_count == 10
        assert cfg.grid is None and cfg.include_noise

    @pytest.mark.parametrize("kwargs", [
        dict(predictor_sample_count=0), dict(parameter_draw_count=0),
        dict(seed=-1), dict(grid=(5.0, 5.0, 64)), dict(grid=(0.0, 1.0, 8)),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(InvalidCheckConfig):
            PredictiveConfig(**{"seed": 0, **kwargs})

    def test_default_grid_pads_response_range(self):
        dataset = Dataset.for_model(MODEL)
        grid = resolve_grid(PredictiveConfig(seed=0), dataset, MODEL)
        assert grid[0] == -25.0 and grid[-1] == 125.0 and grid.size == 256

    def test_explicit_grid(self):
        dataset = Dataset.for_model(MODEL)
        grid = resolve_grid(PredictiveConfig(seed=0, grid=(0.0, 10.0, 32)), dataset, MODEL)
        assert grid[0] == 0.0 and grid[-1] == 10.0 and grid.size == 32


class TestSamplePredictors:
    def test_singleton_marginal_gives_constant_column(self):
        dataset = Dataset.for_model(MODEL)
        dataset.add_value("x1", 7.0)
        dataset.add_value("x2", 9.0)
        rows = sample_predictors(dataset, MODEL, 25, seed=1)
        assert rows.shape == (25, 2)
        assert np.all(rows[:, 0] == 7.0)
        assert np.all(rows[:, 1] == 9.0)

    def test_same_seed_identical(self):
        _, dataset = truth_dataset(rows=30, seed=2)
        a = sample_predictors(dataset, MODEL, 40, seed=9)
        b = sample_predictors(dataset, MODEL, 40, seed=9)
        assert np.array_equal(a, b)

    def test_two_value_marginal_is_balanced(self):
        # binomial bound: each value's frequency within 3*sqrt(N/4) of N/2
        dataset = Dataset.for_model(MODEL)
        dataset.add_value("x1", 0.0)
        dataset.add_value("x1", 10.0)
        dataset.add_value("x2", 1.0)
        n = 10_000
        rows = sample_predictors(dataset, MODEL, n, seed=5)
        zeros = int(np.sum(rows[:, 0] == 0.0))
        assert abs(zeros - n / 2) <= 3 * math.sqrt(n * 0.25)
        assert np.all(np.isin(rows[:, 0], (0.0, 10.0)))

    def test_incomplete_entities_feed_marginals(self):
        dataset = Dataset.for_model(MODEL)
        dataset.add_value("x1", 10.0)   # incomplete: no x2, no y anywhere
        dataset.add_value("x1", 90.0)
        dataset.add_value("x2", 5.0)
        rows = sample_predictors(dataset, MODEL, 200, seed=3)
        assert set(np.unique(rows[:, 0])) == {10.0, 90.0}

    def test_empty_marginal_names_variable(self):
        dataset = Dataset.for_model(MODEL)
        dataset.add_value("x1", 10.0)
        with pytest.raises(EmptyMarginal, match="'x2'") as err:
            sample_predictors(dataset, MODEL, 10, seed=1)
        assert err.value.details["variable"] == "x2"

    def test_columns_keyed_by_position_not_other_marginals(self):
        a = Dataset.for_model(MODEL)
        b = Dataset.for_model(MODEL)
        for ds in (a, b):
            for v in (10.0, 20.0, 30.0):
                ds.add_value("x1", v)
        b.add_value("x2", 99.0)  # extra values elsewhere must not shift x1 draws
        b.add_value("x2", 1.0)
        a.add_value("x2", 50.0)
        rows_a = sample_predictors(a, MODEL, 50, seed=7)
        rows_b = sample_predictors(b, MODEL, 50, seed=7)
        assert np.array_equal(rows_a[:, 0], rows_b[:, 0])


class TestSimulateResponse:
    def test_noise_free_linear_combination(self):
        rows = np.array([[10.0, 5.0]])
        params = np.array([2.0, 3.0, 1e-9])
        got = simulate_response(rows, params, MODEL, seed=1)
        assert got[0] == pytest.approx(35.0, abs=1e-6)

    def test_intercept_included(self):
        model = parse_model("y ~ x")
        got = simulate_response(np.array([[4.0]]), np.array([1.0, 2.0, 0.0]),
                                model, seed=1, include_noise=False)
        assert got[0] == 9.0

    def test_zero_predictors_without_intercept_are_pure_noise(self):
        rows = np.zeros((100_000, 2))
        params = np.array([2.0, 3.0, 1.0])
        got = simulate_response(rows, params, MODEL, seed=8)
        assert abs(float(np.mean(got))) < 0.02
        assert abs(float(np.std(got)) - 1.0) < 0.02

    def test_noise_scale_controls_spread(self):
        rng = np.random.default_rng(2)
        rows = rng.uniform(0, 10, size=(100_000, 2))
        base = simulate_response(rows, np.array([2.0, 3.0, 0.0]), MODEL, seed=4)
        noisy = simulate_response(rows, np.array([2.0, 3.0, 1.0]), MODEL, seed=4)
        assert abs(float(np.std(noisy - base)) - 1.0) < 0.02

    def test_draw_index_separates_noise_streams(self):
        rows = np.zeros((50, 2))
        params = np.array([0.0, 0.0, 1.0])
        a = simulate_response(rows, params, MODEL, seed=6, draw_index=0)
        b = simulate_response(rows, params, MODEL, seed=6, draw_index=1)
        assert not np.array_equal(a, b)

    def test_parameter_count_must_match(self):
        with pytest.raises(PriorsModelMismatch):
            simulate_response(np.zeros((3, 2)), np.array([1.0, 2.0]), MODEL, seed=1)


def kde_oracle(samples, grid):
    """Independent reference: direct formula, per-sample loop, renormalized."""
    n = len(samples)
    std = float(np.std(samples))
    iqr = float(np.percentile(samples, 75) - np.percentile(samples, 25))
    h = 0.9 * min(std, iqr / 1.34) * n ** (-0.2)
    h = max(h, 1e-3 * float(grid[-1] - grid[0]))
    density = np.zeros(grid.size)
    for s in samples:
        density += np.exp(-0.5 * ((grid - s) / h) ** 2)
    density /= n * h * math.sqrt(2 * math.pi)
    steps = np.diff(grid)
    integral = float(np.sum((density[1:] + density[:-1]) * steps) / 2)
    return density / integral, h


class TestKde:
    def test_matches_direct_formula_oracle(self):
        rng = np.random.default_rng(31)
        grid = np.linspace(-10, 10, 200)
        for _ in range(5):
            samples = rng.normal(0, 2, size=int(rng.integers(20, 200)))
            expected, _ = kde_oracle(samples, grid)
            got = kde(samples, grid)
            assert np.allclose(got, expected, rtol=1e-10, atol=1e-12)

    def test_silverman_bandwidth_value(self):
        # standardized to population std 1; for this seed IQR/1.34 > 1, so
        # h = 0.9 * 1 * 100^(-1/5) which evaluates to about 0.35830
        rng = np.random.default_rng(12)
        samples = rng.normal(0, 1, size=100)
        samples = (samples - samples.mean()) / np.std(samples)
        iqr = float(np.percentile(samples, 75) - np.percentile(samples, 25))
        assert iqr / 1.34 > 1.0
        _, h = kde_oracle(samples, np.linspace(-6, 6, 100))
        assert h == pytest.approx(0.35830, abs=5e-5)
        assert np.allclose(kde(samples, np.linspace(-6, 6, 100)),
                           kde_oracle(samples, np.linspace(-6, 6, 100))[0],
                           rtol=1e-10, atol=1e-12)

    def test_symmetric_samples_give_mirror_curve(self):
        grid = np.linspace(-5, 5, 201)
        density = kde(np.array([-2.0, 2.0]), grid)
        assert np.max(np.abs(density - density[::-1])) < 1e-12

    def test_unit_integral(self):
        rng = np.random.default_rng(77)
        grid = np.linspace(-50, 50, 256)
        for _ in range(10):
            samples = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 5),
                                 size=int(rng.integers(1, 300)))
            density = kde(samples, grid)
            assert trapezoid_integral(density, grid) == pytest.approx(1.0, abs=1e-6)
            assert np.all(density >= 0)

    def test_constant_samples_use_floor_bandwidth(self):
        grid = np.linspace(0, 100, 256)
        density = kde(np.full(50, 35.0), grid)
        assert trapezoid_integral(density, grid) == pytest.approx(1.0, abs=1e-6)
        assert abs(grid[int(np.argmax(density))] - 35.0) <= grid[1] - grid[0]

    def test_samples_far_outside_grid_still_unit_mass(self):
        grid = np.linspace(0, 1, 64)
        density = kde(np.full(10, 1e6), grid)
        assert trapezoid_integral(density, grid) == pytest.approx(1.0, abs=1e-6)


class TestRunCheck:
    def spike_dataset(self):
        dataset = Dataset.for_model(MODEL)
        dataset.add_value("x1", 10.0)
        dataset.add_value("x2", 5.0)
        return dataset

    def test_degenerate_spike_at_analytic_value(self):
        result = run_check(self.spike_dataset(), MODEL, degenerate_priors(),
                           PredictiveConfig(seed=3))
        step = result.grid[1] - result.grid[0]
        for draw in result.draws:
            assert abs(result.grid[int(np.argmax(draw.density))] - 35.0) <= step
        assert abs(result.grid[int(np.argmax(result.average_density))] - 35.0) <= step

    def test_every_density_integrates_to_one(self):
        model, dataset = truth_dataset(rows=80, seed=4)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=6))
        result = run_check(dataset, model, priors, PredictiveConfig(seed=6))
        for draw in result.draws:
            assert trapezoid_integral(draw.density, result.grid) == pytest.approx(1.0, abs=1e-6)
        assert trapezoid_integral(result.average_density, result.grid) == \
            pytest.approx(1.0, abs=1e-6)

    def test_average_is_exact_pointwise_mean(self):
        model, dataset = truth_dataset(rows=80, seed=4)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=6))
        result = run_check(dataset, model, priors, PredictiveConfig(seed=6))
        stacked = np.array([draw.density for draw in result.draws])
        assert np.array_equal(result.average_density, stacked.mean(axis=0))

    def test_bit_identical_under_same_seed(self):
        model, dataset = truth_dataset(rows=60, seed=10)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=11))
        a = run_check(dataset, model, priors, PredictiveConfig(seed=12))
        b = run_check(dataset, model, priors, PredictiveConfig(seed=12))
        assert np.array_equal(a.grid, b.grid)
        for da, db in zip(a.draws, b.draws):
            assert da.parameters == db.parameters
            assert np.array_equal(da.responses, db.responses)
            assert np.array_equal(da.density, db.density)
        assert np.array_equal(a.average_density, b.average_density)

    def test_shared_predictor_matrix_across_draws(self):
        # zero noise: per-draw responses must be affine in one shared matrix,
        # so ratios across draws are constant when priors are degenerate
        dataset = self.spike_dataset()
        dataset.add_value("x1", 20.0)
        result = run_check(dataset, MODEL, degenerate_priors(),
                           PredictiveConfig(seed=5, include_noise=False))
        base = result.draws[0].responses
        for draw in result.draws[1:]:
            assert np.allclose(draw.responses, base, rtol=1e-3)

    def test_response_histogram_normalized(self):
        model, dataset = truth_dataset(rows=50, seed=8)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=9))
        result = run_check(dataset, model, priors, PredictiveConfig(seed=9))
        widths = [hi - lo for lo, hi in result.response_bins]
        area = float(np.sum(np.array(widths) * result.response_normalized_counts))
        assert area == pytest.approx(1.0, abs=1e-9)

    def test_response_histogram_zero_when_no_response_values(self):
        dataset = self.spike_dataset()
        result = run_check(dataset, MODEL, degenerate_priors(), PredictiveConfig(seed=3))
        assert np.all(result.response_normalized_counts == 0)
        assert len(result.response_bins) == 10

    def test_priors_mismatch_rejected(self):
        dataset = self.spike_dataset()
        priors = degenerate_priors()[:2]  # missing the noise scale
        with pytest.raises(PriorsModelMismatch):
            run_check(dataset, MODEL, priors, PredictiveConfig(seed=1))
        renamed = degenerate_priors()
        renamed[0] = PriorDistribution("coef_other", "normal",
                                       {"mean": 2.0, "scale": 1.0})
        with pytest.raises(PriorsModelMismatch):
            run_check(dataset, MODEL, renamed, PredictiveConfig(seed=1))

    def test_fixed_point_predictive_mean_matches_data_mean(self):
        # priors pinned at the least-squares fit, predictors resampled from
        # the same rows: the simulated response mean must sit within two
        # standard errors of the constructed response mean
        model, dataset = truth_dataset(rows=100, sigma=3.0, seed=14)
        rows = dataset.complete_rows(model.variables)
        est = ols_fit(rows, model)
        priors = degenerate_priors(c1=est[0], c2=est[1],
                                   log_sigma=math.log(est[2] + 1e-12))
        result = run_check(dataset, model, priors, PredictiveConfig(seed=15))
        simulated = np.concatenate([draw.responses for draw in result.draws])
        data_mean = float(rows[:, -1].mean())
        se = float(np.std(rows[:, -1])) / math.sqrt(rows.shape[0])
        assert abs(float(simulated.mean()) - data_mean) <= 2 * se

    def test_average_density_covers_true_central_interval(self):
        # Monte-Carlo oracle of the generating model: central 95% interval,
        # then at least 90% of the average predictive mass inside it
        model, dataset = truth_dataset(coeffs=(2.0, 3.0), sigma=1.0, rows=200, seed=17)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=18))
        result = run_check(dataset, model, priors, PredictiveConfig(seed=18))
        rng = np.random.default_rng(123)
        X = rng.uniform(0, 100, size=(200_000, 2))
        true_y = X @ [2.0, 3.0] + rng.normal(0, 1.0, size=200_000)
        lo, hi = np.percentile(true_y, [2.5, 97.5])
        inside = (result.grid >= lo) & (result.grid <= hi)
        mass = trapezoid_integral(result.average_density[inside], result.grid[inside])
        assert mass >= 0.90


def test_csv_export_shape():
    model, dataset = truth_dataset(rows=40, seed=20)
    priors = derive_priors(dataset, model, BootstrapConfig(seed=21))
    result = run_check(dataset, model, priors,
                       PredictiveConfig(seed=21, parameter_draw_count=4))
    lines = dump_check_csv(result).splitlines()
    assert lines[0] == "grid_x,draw_1,draw_2,draw_3,draw_4,average"
    assert len(lines) == 1 + result.grid.size
    first = lines[1].split(",")
    assert float(first[0]) == result.grid[0]
    assert float(first[-1]) == result.average_density[0]
