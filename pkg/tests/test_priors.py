import json
import math

import numpy as np
import pytest

from conftest import truth_dataset
from priorsketch.dataset import Dataset
from priorsketch.formula import VariableSpec, parse_model
from priorsketch.priors import (LOG_EPSILON, SCALE_FLOOR, BootstrapConfig,
                                DegenerateResamples, InsufficientRows, InvalidConfig,
                                InvalidPriorsDoc, PriorDistribution, RankDeficient,
                                TooFewEstimates, bootstrap_estimates, derive_priors,
                                dump_priors, fit_prior, load_priors, ols_fit,
                                sample_parameters)


def normal_equations_oracle(X, y, p):
    """Brute-force reference fit: solve X'X b = X'y, then rss-based scale."""
    coef = np.linalg.solve(X.T @ X, X.T @ y)
    residuals = y - X @ coef
    scale = math.sqrt(float(residuals @ residuals) / (len(y) - p))
    return np.append(coef, scale)


class TestOlsFit:
    def test_exact_proportional_fit(self):
        rows = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        model = parse_model("y ~ 0 + x")
        est = ols_fit(rows, model)
        assert est[0] == pytest.approx(2.0, abs=1e-12)
        assert est[1] == pytest.approx(0.0, abs=1e-9)

    def test_exact_affine_fit(self):
        rows = np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 5.0]])
        model = parse_model("y ~ x")
        est = ols_fit(rows, model)
        assert est[0] == pytest.approx(1.0, abs=1e-10)
        assert est[1] == pytest.approx(2.0, abs=1e-10)
        assert est[2] == pytest.approx(0.0, abs=1e-9)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(101)
        model = parse_model("y ~ x1 + x2")
        for _ in range(20):
            n = int(rng.integers(10, 60))
            X = rng.uniform(0, 100, size=(n, 2))
            y = 2 * X[:, 0] + 3 * X[:, 1] + rng.normal(0, 1, size=n)
            est = ols_fit(np.column_stack([X, y]), model)
            oracle = normal_equations_oracle(np.column_stack([np.ones(n), X]), y, 3)
            assert np.max(np.abs(est - oracle)) <= 1e-9 * max(1.0, np.max(np.abs(oracle)))

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(55)
        model = parse_model("y ~ x1 + x2")
        for _ in range(10):
            n = int(rng.integers(10, 50))
            X = rng.uniform(-5, 5, size=(n, 2))
            y = rng.normal(0, 3, size=n)
            est = ols_fit(np.column_stack([X, y]), model)
            design = np.column_stack([np.ones(n), X])
            residuals = y - design @ est[:-1]
            assert np.max(np.abs(design.T @ residuals)) < 1e-8 * np.linalg.norm(y)

    def test_insufficient_rows(self):
        model = parse_model("y ~ x1 + x2")
        with pytest.raises(InsufficientRows):
            ols_fit(np.zeros((3, 3)), model)

    def test_rank_deficient_design(self):
        model = parse_model("y ~ x1 + x2")
        rows = np.column_stack([np.arange(10.0), np.arange(10.0) * 2, np.ones(10)])
        with pytest.raises(RankDeficient):
            ols_fit(rows, model)

    def test_constant_predictor_with_intercept_is_rank_deficient(self):
        model = parse_model("y ~ x")
        rows = np.column_stack([np.full(8, 5.0), np.arange(8.0)])
        with pytest.raises(RankDeficient):
            ols_fit(rows, model)


class TestBootstrap:
    def test_exact_relation_gives_constant_estimates(self):
        model = parse_model("y ~ 0 + x")
        x = np.linspace(1, 9, 12)
        rows = np.column_stack([x, 2 * x])
        cfg = BootstrapConfig(resample_count=30, resample_size=8, seed=4)
        est = bootstrap_estimates(rows, model, cfg)
        assert est.success.all()
        assert np.allclose(est.column("coef_x"), 2.0, atol=1e-12)
        assert np.allclose(est.column("sigma"), 0.0, atol=1e-9)

    def test_same_seed_is_bit_identical(self):
        _, dataset = truth_dataset(rows=40, seed=2)
        model = parse_model("y ~ 0 + x1 + x2")
        rows = dataset.complete_rows(model.variables)
        cfg = BootstrapConfig(resample_count=20, resample_size=15, seed=77)
        a = bootstrap_estimates(rows, model, cfg)
        b = bootstrap_estimates(rows, model, cfg)
        assert np.array_equal(a.estimates, b.estimates)
        assert np.array_equal(a.success, b.success)

    def test_resample_substreams_independent_of_count(self):
        # estimate b depends only on (seed, b), not on how many resamples run
        _, dataset = truth_dataset(rows=30, seed=6)
        model = parse_model("y ~ 0 + x1 + x2")
        rows = dataset.complete_rows(model.variables)
        small = bootstrap_estimates(rows, model,
                                    BootstrapConfig(resample_count=5, resample_size=10, seed=3))
        large = bootstrap_estimates(rows, model,
                                    BootstrapConfig(resample_count=12, resample_size=10, seed=3))
        assert np.array_equal(large.estimates[:5], small.estimates)

    def test_constant_column_fails_upfront(self):
        model = parse_model("y ~ x")
        rows = np.column_stack([np.full(20, 5.0), np.arange(20.0)])
        with pytest.raises(RankDeficient):
            bootstrap_estimates(rows, model, BootstrapConfig(seed=1))

    def test_mostly_degenerate_rows_abort_after_retries(self):
        # 7 of 8 rows share one x value; tiny resamples rarely see the other
        model = parse_model("y ~ x")
        x = np.array([5.0] * 7 + [50.0])
        rows = np.column_stack([x, x * 2])
        cfg = BootstrapConfig(resample_count=20, resample_size=3, seed=13,
                              max_retries_per_resample=0)
        with pytest.raises(DegenerateResamples) as err:
            bootstrap_estimates(rows, model, cfg)
        assert err.value.details["successes"] < 10

    def test_retries_rescue_resamples(self):
        model = parse_model("y ~ x")
        x = np.array([5.0] * 7 + [50.0])
        rows = np.column_stack([x, x * 2])
        cfg = BootstrapConfig(resample_count=20, resample_size=3, seed=13,
                              max_retries_per_resample=40)
        est = bootstrap_estimates(rows, model, cfg)
        assert est.success.all()
        assert est.estimates.shape == (20, 3)

    def test_success_flags_align_with_rows(self):
        model = parse_model("y ~ x")
        x = np.array([5.0] * 5 + [20.0, 40.0, 60.0])
        rows = np.column_stack([x, x])
        cfg = BootstrapConfig(resample_count=40, resample_size=3, seed=9,
                              max_retries_per_resample=0)
        est = bootstrap_estimates(rows, model, cfg)
        assert est.estimates.shape[0] == est.success_count
        assert 20 <= est.success_count < 40

    def test_too_few_rows(self):
        model = parse_model("y ~ x1 + x2")
        with pytest.raises(InsufficientRows, match="got 0"):
            bootstrap_estimates(np.zeros((0, 3)), model, BootstrapConfig(seed=1))

    def test_resample_size_must_cover_parameters(self):
        model = parse_model("y ~ x1 + x2")
        rows = np.random.default_rng(0).uniform(0, 1, size=(30, 3))
        with pytest.raises(InvalidConfig):
            bootstrap_estimates(rows, model, BootstrapConfig(resample_size=3, seed=1))

    def test_config_validation(self):
        with pytest.raises(InvalidConfig):
            BootstrapConfig(resample_count=0)
        with pytest.raises(InvalidConfig):
            BootstrapConfig(resample_size=0)
        with pytest.raises(InvalidConfig):
            BootstrapConfig(seed=-1)
        with pytest.raises(InvalidConfig):
            BootstrapConfig(max_retries_per_resample=-1)


class TestFitPrior:
    def test_two_point_coefficient_cloud(self):
        # MLE of Normal on {1, 3}: mean 2, population std 1
        prior = fit_prior("coef_x", "coefficient", np.array([1.0, 3.0]))
        assert prior.family == "normal"
        assert prior.params == {"mean": 2.0, "scale": 1.0}
        assert prior.estimates == (1.0, 3.0)

    def test_degenerate_cloud_gets_floor(self):
        prior = fit_prior("coef_x", "coefficient", np.full(10, 2.0))
        assert prior.params == {"mean": 2.0, "scale": SCALE_FLOOR}

    def test_noise_scale_lognormal(self):
        e = math.e
        prior = fit_prior("sigma", "noise_scale", np.array([e, e]))
        assert prior.family == "lognormal"
        assert prior.params["log_mean"] == pytest.approx(1.0, abs=1e-12)
        assert prior.params["log_scale"] == SCALE_FLOOR
        assert prior.median() == pytest.approx(e, rel=1e-9)

    def test_zero_noise_estimates_stay_finite(self):
        prior = fit_prior("sigma", "noise_scale", np.zeros(5))
        assert prior.params["log_mean"] == pytest.approx(math.log(LOG_EPSILON))
        assert prior.median() < 1e-9

    def test_too_few_estimates(self):
        with pytest.raises(TooFewEstimates):
            fit_prior("coef_x", "coefficient", np.array([1.0]))

    def test_negative_noise_estimates_rejected(self):
        with pytest.raises(ValueError):
            fit_prior("sigma", "noise_scale", np.array([1.0, -0.5]))

    def test_intercept_uses_normal(self):
        prior = fit_prior("intercept", "intercept", np.array([0.0, 2.0, 4.0]))
        assert prior.family == "normal"
        assert prior.params["mean"] == 2.0


class TestDerivePriors:
    def test_prior_means_equal_estimate_means_exactly(self):
        model, dataset = truth_dataset(rows=60, seed=5)
        cfg = BootstrapConfig(resample_count=25, resample_size=20, seed=8)
        rows = dataset.complete_rows(model.variables)
        est = bootstrap_estimates(rows, model, cfg)
        priors = derive_priors(dataset, model, cfg)
        for i, prior in enumerate(priors[:-1]):
            assert prior.params["mean"] == float(est.estimates[:, i].mean())

    def test_order_matches_model_parameters(self):
        model, dataset = truth_dataset(rows=60, seed=5)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=8))
        assert tuple(p.parameter for p in priors) == model.parameter_names
        assert priors[-1].family == "lognormal"

    def test_no_complete_rows_names_count(self):
        model = parse_model("y ~ 0 + x1 + x2")
        dataset = Dataset.for_model(model)
        dataset.add_value("x1", 5.0)
        with pytest.raises(InsufficientRows) as err:
            derive_priors(dataset, model, BootstrapConfig(seed=1))
        assert "0" in err.value.message
        assert err.value.details["step"] == "bootstrap"
        assert err.value.details["rows"] == 0

    def test_full_determinism(self):
        model, dataset = truth_dataset(rows=80, seed=12)
        cfg = BootstrapConfig(seed=99)
        a = derive_priors(dataset, model, cfg)
        b = derive_priors(dataset, model, cfg)
        assert [(p.parameter, p.family, p.params, p.estimates) for p in a] == \
               [(p.parameter, p.family, p.params, p.estimates) for p in b]

    def test_noise_prior_has_positive_support(self):
        model, dataset = truth_dataset(rows=60, seed=5)
        priors = derive_priors(dataset, model, BootstrapConfig(seed=8))
        draws = priors[-1].sample(np.random.default_rng(0), 5000)
        assert np.all(draws > 0)


class TestSampleParameters:
    def degenerate_priors(self):
        return [
            PriorDistribution("coef_x1", "normal", {"mean": 2.0, "scale": SCALE_FLOOR}),
            PriorDistribution("coef_x2", "normal", {"mean": 3.0, "scale": SCALE_FLOOR}),
            PriorDistribution("sigma", "lognormal",
                              {"log_mean": 0.0, "log_scale": SCALE_FLOOR}),
        ]

    def test_degenerate_priors_pin_draws_to_means(self):
        draws = sample_parameters(self.degenerate_priors(), 50, seed=3)
        assert draws.shape == (50, 3)
        assert np.allclose(draws[:, 0], 2.0, atol=1e-4)
        assert np.allclose(draws[:, 1], 3.0, atol=1e-4)
        assert np.allclose(draws[:, 2], 1.0, atol=1e-4)

    def test_same_seed_identical(self):
        priors = self.degenerate_priors()
        assert np.array_equal(sample_parameters(priors, 10, seed=5),
                              sample_parameters(priors, 10, seed=5))

    def test_law_of_large_numbers(self):
        prior = PriorDistribution("coef_x", "normal", {"mean": 2.0, "scale": 1.0})
        draws = sample_parameters([prior], 100_000, seed=21)
        # tolerance 0.02 is more than 5 standard errors (1/sqrt(1e5))
        assert abs(float(draws.mean()) - 2.0) < 0.02

    def test_k_must_be_positive(self):
        with pytest.raises(InvalidConfig):
            sample_parameters(self.degenerate_priors(), 0, seed=1)


class TestPriorsDocument:
    def test_dump_load_round_trip(self):
        model, dataset = truth_dataset(rows=60, seed=5)
        cfg = BootstrapConfig(resample_count=20, resample_size=15, seed=8)
        priors = derive_priors(dataset, model, cfg)
        text = dump_priors(model, cfg, priors, "sha256:abc")
        doc = json.loads(text)
        assert doc["schema_version"] == 1
        assert doc["model_formula"] == "y ~ 0 + x1 + x2"
        assert doc["derived_from"] == "sha256:abc"
        assert doc["config"] == {"resample_count": 20, "resample_size": 15,
                                 "seed": 8, "max_retries_per_resample": 20}
        imported = load_priors(text)
        assert imported.model_formula == "y ~ 0 + x1 + x2"
        assert [(p.parameter, p.family, p.params, p.estimates) for p in imported.priors] == \
               [(p.parameter, p.family, p.params, p.estimates) for p in priors]

    @pytest.mark.parametrize("mutate,match", [
        (lambda d: d.pop("schema_version"), "missing 'schema_version'"),
        (lambda d: d.update(schema_version=2), "unsupported priors schema"),
        (lambda d: d.update(priors=[]), "non-empty"),
        (lambda d: d["priors"][0].pop("family"), "missing 'family'"),
        (lambda d: d["priors"][0].update(family="gamma"), "unknown prior family"),
        (lambda d: d["priors"][0]["params"].pop("mean"), "params must have exactly"),
        (lambda d: d["priors"][0]["params"].update(scale=0.0), "must be positive"),
        (lambda d: d["priors"][0]["params"].update(scale=True), "must be a number"),
    ])
    def test_rejects_invalid_documents(self, mutate, match):
        model, dataset = truth_dataset(rows=60, seed=5)
        cfg = BootstrapConfig(seed=8)
        priors = derive_priors(dataset, model, cfg)
        doc = json.loads(dump_priors(model, cfg, priors, "sha256:abc"))
        mutate(doc)
        with pytest.raises(InvalidPriorsDoc, match=match):
            load_priors(json.dumps(doc))

    def test_rejects_non_json(self):
        with pytest.raises(InvalidPriorsDoc):
            load_priors("{nope")


def test_prior_distribution_moments():
    normal = PriorDistribution("a", "normal", {"mean": 4.0, "scale": 2.0})
    assert normal.mean() == 4.0 and normal.median() == 4.0
    lognormal = PriorDistribution("s", "lognormal", {"log_mean": 1.0, "log_scale": 0.5})
    assert lognormal.median() == pytest.approx(math.e)
    assert lognormal.mean() == pytest.approx(math.exp(1.0 + 0.125))
