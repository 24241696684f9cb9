"""Prior predictive simulation of the response.

Predictor values are drawn with replacement from the analyst's marginals
(complete and incomplete entities alike), parameter vectors are drawn
from the derived priors, and each vector simulates one response sample
set. Each set is smoothed into a density on a shared grid so the curves,
their pointwise average, and the analyst's own response histogram can be
overlaid.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DomainError
from .formula import ModelSpec, format_model
from .jsonio import dumps_canonical
from .priors import PriorDistribution, sample_parameters
from .rng import NOISE, PREDICTOR, substream

GRID_POINTS = 256
GRID_PADDING = 0.25  # fraction of the response range added on each side
# Keeps near-constant sample sets from collapsing the bandwidth to zero.
BANDWIDTH_FLOOR = 1e-3  # times the grid width


class EmptyMarginal(DomainError):
    code = "empty_marginal"


class PriorsModelMismatch(DomainError):
    """The priors were derived for a different parameter list than the model's."""

    code = "priors_model_mismatch"


class InvalidCheckConfig(DomainError):
    code = "invalid_check_config"


@dataclass(frozen=True)
class PredictiveConfig:
    """Simulation settings; `grid` is (lo, hi, points) or None for the
    default of the response range padded 25% per side at 256 points."""

    predictor_sample_count: int = 100
    parameter_draw_count: int = 10
    seed: int = 0
    grid: tuple[float, float, int] | None = None
    include_noise: bool = True

    def __post_init__(self):
        if self.predictor_sample_count < 1:
            raise InvalidCheckConfig(
                f"predictor_sample_count must be >= 1, got {self.predictor_sample_count}")
        if self.parameter_draw_count < 1:
            raise InvalidCheckConfig(
                f"parameter_draw_count must be >= 1, got {self.parameter_draw_count}")
        if self.seed < 0:
            raise InvalidCheckConfig("seed must be non-negative")
        if self.grid is not None:
            lo, hi, points = self.grid
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise InvalidCheckConfig(f"grid must satisfy lo < hi, got [{lo}, {hi}]")
            if points < 16:
                raise InvalidCheckConfig(f"grid needs at least 16 points, got {points}")


@dataclass(frozen=True)
class PredictiveDraw:
    """One parameter vector with its simulated responses and density curve."""

    parameters: dict[str, float]
    responses: np.ndarray
    density: np.ndarray


@dataclass(frozen=True)
class PredictiveCheckResult:
    grid: np.ndarray
    draws: tuple[PredictiveDraw, ...]
    average_density: np.ndarray
    response_bins: tuple[tuple[float, float], ...]
    response_normalized_counts: np.ndarray


def trapezoid_integral(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2)


def resolve_grid(cfg: PredictiveConfig, dataset: Dataset, model: ModelSpec) -> np.ndarray:
    if cfg.grid is not None:
        lo, hi, points = cfg.grid
        return np.linspace(float(lo), float(hi), int(points))
    lo, hi = dataset.variable(model.response).range
    pad = GRID_PADDING * (hi - lo)
    return np.linspace(lo - pad, hi + pad, GRID_POINTS)


def sample_predictors(dataset: Dataset, model: ModelSpec, count: int, seed: int) -> np.ndarray:
    """(count x predictors) draws with replacement from each marginal.

    Marginals include incomplete entities: an unconnected histogram
    click still shapes the simulated predictors. Each predictor column
    uses its own substream, so the draws are mutually independent and
    stable under adding or removing other predictors.
    """
    if count < 1:
        raise InvalidCheckConfig(f"predictor sample count must be >= 1, got {count}")
    columns = []
    for j, name in enumerate(model.predictors):
        marginal = dataset.marginal(name)
        if marginal.size == 0:
            raise EmptyMarginal(
                f"predictor {name!r} has no defined values to sample from", variable=name)
        rng = substream(seed, PREDICTOR, j)
        columns.append(marginal[rng.integers(0, marginal.size, size=count)])
    return np.column_stack(columns)


def simulate_response(predictor_rows: np.ndarray, parameters: np.ndarray, model: ModelSpec,
                      seed: int, draw_index: int = 0, include_noise: bool = True) -> np.ndarray:
    """Linear predictor plus one Normal(0, noise scale) draw per row."""
    parameters = np.asarray(parameters, dtype=float)
    if parameters.shape != (len(model.parameters),):
        raise PriorsModelMismatch(
            f"expected {len(model.parameters)} parameters "
            f"({', '.join(model.parameter_names)}), got {parameters.shape}")
    predictor_rows = np.asarray(predictor_rows, dtype=float)
    noise_scale = parameters[-1]
    if model.has_intercept:
        mean = parameters[0] + predictor_rows @ parameters[1:-1]
    else:
        mean = predictor_rows @ parameters[:-1]
    if not include_noise:
        return mean
    rng = substream(seed, NOISE, draw_index)
    return mean + rng.normal(0.0, noise_scale, size=len(predictor_rows))


def kde(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Gaussian-kernel density on the grid, renormalized to unit integral.

    Bandwidth is Silverman's 0.9 * min(std, IQR / 1.34) * N^(-1/5),
    floored at 1e-3 of the grid width for (near-)constant samples.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("kde needs at least one sample")
    spread = min(float(np.std(samples)),
                 float(np.percentile(samples, 75) - np.percentile(samples, 25)) / 1.34)
    width = float(grid[-1] - grid[0])
    h = max(0.9 * spread * samples.size ** (-1 / 5), BANDWIDTH_FLOOR * width)
    z = (grid[:, None] - samples[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (samples.size * h * math.sqrt(2 * math.pi))
    integral = trapezoid_integral(density, grid)
    if integral <= 0:
        # Every sample sits so far outside the grid that the kernels
        # underflow; the least-wrong unit-mass curve is flat.
        return np.full(grid.shape, 1.0 / width)
    return density / integral


def normalized_response_histogram(dataset: Dataset, model: ModelSpec):
    """Analyst's response histogram scaled to unit area (zeros when empty)."""
    histogram = dataset.histogram(model.response)
    bins = tuple(interval for interval, _ in histogram)
    counts = np.array([count for _, count in histogram], dtype=float)
    total = counts.sum()
    if total > 0:
        width = dataset.variable(model.response).bin_width
        counts = counts / (total * width)
    return bins, counts


def run_check(dataset: Dataset, model: ModelSpec, priors: list[PriorDistribution],
              cfg: PredictiveConfig) -> PredictiveCheckResult:
    """Full prior predictive check.

    One shared predictor matrix feeds every parameter draw, so the
    spread between curves reflects only the priors. All-or-nothing: any
    step error propagates and no partial result is produced.
    """
    prior_names = tuple(prior.parameter for prior in priors)
    if prior_names != model.parameter_names:
        raise PriorsModelMismatch(
            f"priors cover {list(prior_names)} but the model has "
            f"{list(model.parameter_names)}",
            priors=list(prior_names), model=list(model.parameter_names))
    predictor_rows = sample_predictors(dataset, model, cfg.predictor_sample_count, cfg.seed)
    parameter_matrix = sample_parameters(priors, cfg.parameter_draw_count, cfg.seed)
    grid = resolve_grid(cfg, dataset, model)
    draws = []
    for d in range(cfg.parameter_draw_count):
        responses = simulate_response(
            predictor_rows, parameter_matrix[d], model, cfg.seed,
            draw_index=d, include_noise=cfg.include_noise)
        draws.append(PredictiveDraw(
            parameters={name: float(value)
                        for name, value in zip(model.parameter_names, parameter_matrix[d])},
            responses=responses,
            density=kde(responses, grid)))
    average = np.mean([draw.density for draw in draws], axis=0)
    bins, normalized = normalized_response_histogram(dataset, model)
    return PredictiveCheckResult(
        grid=grid, draws=tuple(draws), average_density=average,
        response_bins=bins, response_normalized_counts=normalized)


# -- export -----------------------------------------------------------------

CHECK_SCHEMA_VERSION = 1


def check_document(model: ModelSpec, cfg: PredictiveConfig, result: PredictiveCheckResult,
                   derived_from: str) -> dict:
    return {
        "schema_version": CHECK_SCHEMA_VERSION,
        "model_formula": format_model(model),
        "derived_from": derived_from,
        "config": {
            "predictor_sample_count": cfg.predictor_sample_count,
            "parameter_draw_count": cfg.parameter_draw_count,
            "seed": cfg.seed,
            "include_noise": cfg.include_noise,
        },
        "grid": {"lo": float(result.grid[0]), "hi": float(result.grid[-1]),
                 "n": int(result.grid.size)},
        "draws": [
            {"parameters": draw.parameters, "density": [float(v) for v in draw.density]}
            for draw in result.draws
        ],
        "average_density": [float(v) for v in result.average_density],
        "response_histogram": {
            "bins": [[float(lo), float(hi)] for lo, hi in result.response_bins],
            "normalized_counts": [float(v) for v in result.response_normalized_counts],
        },
    }


def dump_check(model: ModelSpec, cfg: PredictiveConfig, result: PredictiveCheckResult,
               derived_from: str) -> str:
    return dumps_canonical(check_document(model, cfg, result, derived_from))


def dump_check_csv(result: PredictiveCheckResult) -> str:
    """Curves as CSV: grid point, one column per draw, then the average."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["grid_x"]
                    + [f"draw_{d + 1}" for d in range(len(result.draws))]
                    + ["average"])
    for i, x in enumerate(result.grid):
        writer.writerow([repr(float(x))]
                        + [repr(float(draw.density[i])) for draw in result.draws]
                        + [repr(float(result.average_density[i]))])
    return out.getvalue()
