"""Prior derivation from the constructed dataset.

Pipeline: keep the complete rows, bootstrap-resample them, fit the
linear model to each resample by least squares, then fit one continuous
distribution per parameter to its cloud of estimates by maximum
likelihood. Intercept and coefficient clouds get a Normal; the noise
scale gets a LogNormal so its prior puts no mass on non-positive
values.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import DomainError
from .formula import ModelSpec
from .jsonio import dumps_canonical
from .rng import PARAMS, RESAMPLE, substream

import json

# Degenerate estimate clouds (exact-fit constructed data is a legitimate
# input) would otherwise produce zero-scale, unsampleable priors.
SCALE_FLOOR = 1e-6
# Added before log so exact fits (noise scale estimate 0) stay finite.
LOG_EPSILON = 1e-12
# Smallest/largest singular value below this ratio counts as rank deficient.
RANK_RTOL = 1e-10


class InsufficientRows(DomainError):
    code = "insufficient_complete_rows"


class RankDeficient(DomainError):
    code = "rank_deficient"


class DegenerateResamples(DomainError):
    code = "degenerate_resamples"


class TooFewEstimates(DomainError):
    code = "too_few_estimates"


class InvalidConfig(DomainError):
    code = "invalid_config"


class InvalidPriorsDoc(DomainError):
    code = "invalid_priors"


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling settings for prior derivation."""

    resample_count: int = 100
    resample_size: int = 50
    seed: int = 0
    max_retries_per_resample: int = 20

    def __post_init__(self):
        if self.resample_count < 1:
            raise InvalidConfig(f"resample_count must be >= 1, got {self.resample_count}")
        if self.resample_size < 1:
            raise InvalidConfig(f"resample_size must be >= 1, got {self.resample_size}")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")
        if self.max_retries_per_resample < 0:
            raise InvalidConfig("max_retries_per_resample must be >= 0")


@dataclass(frozen=True)
class EstimateMatrix:
    """Aligned per-parameter estimate columns from the successful resamples.

    `success` has one flag per attempted resample; `estimates` has one
    row per success, in resample order.
    """

    parameter_names: tuple[str, ...]
    estimates: np.ndarray
    success: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.estimates[:, self.parameter_names.index(name)]

    @property
    def success_count(self) -> int:
        return int(self.success.sum())


@dataclass(frozen=True)
class PriorDistribution:
    """A fitted parametric prior plus the raw estimates it was fitted to."""

    parameter: str
    family: str  # "normal" | "lognormal"
    params: dict[str, float] = field(compare=False)
    estimates: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in ("normal", "lognormal"):
            raise ValueError(f"unknown family {self.family!r}")

    def mean(self) -> float:
        if self.family == "normal":
            return self.params["mean"]
        return math.exp(self.params["log_mean"] + 0.5 * self.params["log_scale"] ** 2)

    def median(self) -> float:
        if self.family == "normal":
            return self.params["mean"]
        return math.exp(self.params["log_mean"])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "normal":
            return rng.normal(self.params["mean"], self.params["scale"], size=size)
        return rng.lognormal(self.params["log_mean"], self.params["log_scale"], size=size)


def design_matrix(rows: np.ndarray, model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split a [predictors..., response] matrix into (X, y) for fitting."""
    y = rows[:, -1]
    X = rows[:, :-1]
    if model.has_intercept:
        X = np.column_stack([np.ones(len(rows)), X])
    return X, y


def ols_fit(rows: np.ndarray, model: ModelSpec) -> np.ndarray:
    """Least-squares estimates [intercept?, coefficients..., noise scale].

    Solved through a QR decomposition rather than the normal equations;
    the noise scale is sqrt(RSS / (rows - linear parameters)).
    """
    rows = np.asarray(rows, dtype=float)
    p = model.linear_parameter_count
    if rows.shape[0] < p + 1:
        raise InsufficientRows(
            f"need at least {p + 1} rows to fit {p} linear parameter(s), got {rows.shape[0]}",
            rows=int(rows.shape[0]), needed=p + 1)
    X, y = design_matrix(rows, model)
    singular = np.linalg.svd(X, compute_uv=False)
    if singular[0] == 0 or singular[-1] / singular[0] <= RANK_RTOL:
        raise RankDeficient("design matrix is numerically rank deficient")
    Q, R = np.linalg.qr(X)
    coef = np.linalg.solve(R, Q.T @ y)
    residuals = y - X @ coef
    rss = float(residuals @ residuals)
    noise_scale = math.sqrt(max(rss, 0.0) / (rows.shape[0] - p))
    return np.append(coef, noise_scale)


def bootstrap_estimates(rows: np.ndarray, model: ModelSpec, cfg: BootstrapConfig) -> EstimateMatrix:
    """Fit the model to resamples drawn with replacement from `rows`.

    Each resample index owns its own seed substream, so estimate b never
    depends on retries spent on earlier resamples. Rank-deficient
    resamples are redrawn up to the configured retry budget, then marked
    failed; more than half failing aborts the derivation.
    """
    rows = np.asarray(rows, dtype=float)
    p = model.linear_parameter_count
    if cfg.resample_size < p + 1:
        raise InvalidConfig(
            f"resample_size {cfg.resample_size} cannot fit {p} linear parameter(s); "
            f"need at least {p + 1}")
    if rows.shape[0] < p + 1:
        raise InsufficientRows(
            f"insufficient complete rows: got {rows.shape[0]}, need at least {p + 1}",
            rows=int(rows.shape[0]), needed=p + 1)
    ols_fit(rows, model)  # the full data must pass the rank check once

    estimates = []
    success = np.zeros(cfg.resample_count, dtype=bool)
    for b in range(cfg.resample_count):
        rng = substream(cfg.seed, RESAMPLE, b)
        for _ in range(1 + cfg.max_retries_per_resample):
            idx = rng.integers(0, rows.shape[0], size=cfg.resample_size)
            try:
                estimates.append(ols_fit(rows[idx], model))
            except RankDeficient:
                continue
            success[b] = True
            break
    required = math.ceil(cfg.resample_count / 2)
    if success.sum() < required:
        raise DegenerateResamples(
            f"only {int(success.sum())} of {cfg.resample_count} resamples produced a "
            f"full-rank fit (need {required}); the constructed data is too degenerate",
            successes=int(success.sum()), required=required)
    return EstimateMatrix(
        parameter_names=model.parameter_names,
        estimates=np.array(estimates),
        success=success)


def fit_prior(name: str, kind: str, estimates: np.ndarray) -> PriorDistribution:
    """Closed-form MLE fit of one parameter's estimate cloud.

    Normal for unbounded parameters (mean = sample mean, scale =
    population standard deviation); LogNormal for the noise scale via
    the Normal MLE on log-estimates. Scales are floored so degenerate
    clouds stay sampleable.
    """
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size < 2:
        raise TooFewEstimates(
            f"need at least 2 estimates to fit a prior for {name!r}, got {estimates.size}")
    raw = tuple(float(v) for v in estimates)
    if kind == "noise_scale":
        if np.any(estimates < 0):
            raise ValueError(f"noise-scale estimates for {name!r} must be non-negative")
        logs = np.log(estimates + LOG_EPSILON)
        return PriorDistribution(
            parameter=name, family="lognormal",
            params={"log_mean": float(logs.mean()),
                    "log_scale": float(max(logs.std(), SCALE_FLOOR))},
            estimates=raw)
    return PriorDistribution(
        parameter=name, family="normal",
        params={"mean": float(estimates.mean()),
                "scale": float(max(estimates.std(), SCALE_FLOOR))},
        estimates=raw)


def derive_priors(dataset: Dataset, model: ModelSpec, cfg: BootstrapConfig) -> list[PriorDistribution]:
    """Full derivation: complete rows -> bootstrap fits -> per-parameter priors.

    Errors from inner steps are re-raised with a `step` detail naming
    the stage that failed.
    """
    rows = dataset.complete_rows(model.variables)
    try:
        matrix = bootstrap_estimates(rows, model, cfg)
    except DomainError as exc:
        exc.details.setdefault("step", "bootstrap")
        raise
    priors = []
    for i, param in enumerate(model.parameters):
        try:
            priors.append(fit_prior(param.name, param.kind, matrix.estimates[:, i]))
        except DomainError as exc:
            exc.details.setdefault("step", "fit")
            raise
    return priors


def sample_parameters(priors: list[PriorDistribution], k: int, seed: int) -> np.ndarray:
    """Draw k parameter vectors, one column per prior, from one seeded stream."""
    if k < 1:
        raise InvalidConfig(f"parameter draw count must be >= 1, got {k}")
    rng = substream(seed, PARAMS)
    columns = [prior.sample(rng, k) for prior in priors]
    return np.column_stack(columns)


# -- export / import --------------------------------------------------------

PRIORS_SCHEMA_VERSION = 1


def priors_document(model: ModelSpec, cfg: BootstrapConfig,
                    priors: list[PriorDistribution], derived_from: str) -> dict:
    """JSON-ready export of a derivation run.

    `derived_from` is the content hash of the source snapshot, a
    deterministic provenance marker: identical state always exports
    identical bytes.
    """
    from .formula import format_model
    return {
        "schema_version": PRIORS_SCHEMA_VERSION,
        "model_formula": format_model(model),
        "derived_from": derived_from,
        "config": {
            "resample_count": cfg.resample_count,
            "resample_size": cfg.resample_size,
            "seed": cfg.seed,
            "max_retries_per_resample": cfg.max_retries_per_resample,
        },
        "priors": [
            {"parameter": prior.parameter, "family": prior.family,
             "params": dict(prior.params), "estimates": list(prior.estimates)}
            for prior in priors
        ],
    }


def dump_priors(model: ModelSpec, cfg: BootstrapConfig,
                priors: list[PriorDistribution], derived_from: str) -> str:
    return dumps_canonical(priors_document(model, cfg, priors, derived_from))


@dataclass(frozen=True)
class PriorsImport:
    model_formula: str
    priors: tuple[PriorDistribution, ...]


def load_priors(text: str | bytes) -> PriorsImport:
    """Parse a priors export; raises InvalidPriorsDoc on schema problems."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidPriorsDoc(f"priors file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidPriorsDoc("priors document must be a JSON object")
    for key in ("schema_version", "model_formula", "priors"):
        if key not in doc:
            raise InvalidPriorsDoc(f"priors document is missing {key!r}")
    if doc["schema_version"] != PRIORS_SCHEMA_VERSION:
        raise InvalidPriorsDoc(f"unsupported priors schema version {doc['schema_version']!r}")
    if not isinstance(doc["model_formula"], str):
        raise InvalidPriorsDoc("model_formula must be a string")
    if not isinstance(doc["priors"], list) or not doc["priors"]:
        raise InvalidPriorsDoc("priors must be a non-empty list")
    parsed = []
    for item in doc["priors"]:
        if not isinstance(item, dict):
            raise InvalidPriorsDoc("each prior must be an object")
        for key in ("parameter", "family", "params"):
            if key not in item:
                raise InvalidPriorsDoc(f"prior entry is missing {key!r}")
        family = item["family"]
        expected = {"normal": ("mean", "scale"), "lognormal": ("log_mean", "log_scale")}
        if family not in expected:
            raise InvalidPriorsDoc(f"unknown prior family {family!r}")
        params = item["params"]
        if not isinstance(params, dict) or set(params) != set(expected[family]):
            raise InvalidPriorsDoc(
                f"prior {item['parameter']!r}: params must have exactly {expected[family]}")
        for key, value in params.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InvalidPriorsDoc(f"prior {item['parameter']!r}: {key} must be a number")
        scale_key = expected[family][1]
        if params[scale_key] <= 0:
            raise InvalidPriorsDoc(f"prior {item['parameter']!r}: {scale_key} must be positive")
        estimates = item.get("estimates", [])
        if not isinstance(estimates, list):
            raise InvalidPriorsDoc(f"prior {item['parameter']!r}: estimates must be a list")
        try:
            parsed.append(PriorDistribution(
                parameter=item["parameter"], family=family,
                params={key: float(value) for key, value in params.items()},
                estimates=tuple(float(v) for v in estimates)))
        except (TypeError, ValueError) as exc:
            raise InvalidPriorsDoc(f"invalid prior entry: {exc}") from None
    return PriorsImport(model_formula=doc["model_formula"], priors=tuple(parsed))
