"""Headless command line: derive priors, run checks, generate fixtures, serve.

Exit codes: 2 for usage errors, 3 for unreadable/invalid input documents,
4 for domain failures (insufficient rows, rank deficiency, ...), 5 when a
priors file does not match the model's parameters. Outputs are written
through the canonical JSON writer, so a derivation run here is
byte-identical to the same run through the HTTP service.
"""

import functools
import hashlib
import math
import sys
from pathlib import Path

import click
import numpy as np

from .dataset import Dataset, Entity
from .errors import DomainError
from .formula import FormulaError, ModelSpec, VariableSpec, format_model, parse_model
from .predictive import (PredictiveConfig, PriorsModelMismatch, dump_check,
                         dump_check_csv, run_check)
from .priors import (BootstrapConfig, InvalidPriorsDoc, derive_priors, dump_priors,
                     load_priors)
from .snapshot import SnapshotError, dump_snapshot, load_snapshot

EXIT_SCHEMA = 3
EXIT_DOMAIN = 4
EXIT_MISMATCH = 5


def _fail(exc: DomainError, exit_code: int):
    line = f"error[{exc.code}]: {exc.message}"
    step = exc.details.get("step")
    if step:
        line += f" (step: {step})"
    click.echo(line, err=True)
    sys.exit(exit_code)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PriorsModelMismatch as exc:
            _fail(exc, EXIT_MISMATCH)
        except (SnapshotError, InvalidPriorsDoc, FormulaError) as exc:
            _fail(exc, EXIT_SCHEMA)
        except DomainError as exc:
            _fail(exc, EXIT_DOMAIN)
    return wrapper


def _read_model(value: str) -> ModelSpec:
    """--model accepts either a file holding a formula or the formula itself."""
    path = Path(value)
    if path.is_file():
        value = path.read_text(encoding="utf-8").strip()
    return parse_model(value)


def _read_snapshot(path: str):
    return load_snapshot(Path(path).read_text(encoding="utf-8"))


def _require_same_model(cli_model: ModelSpec, snapshot_model: ModelSpec):
    if format_model(cli_model) != format_model(snapshot_model):
        raise DomainError(
            f"--model {format_model(cli_model)!r} disagrees with the snapshot's "
            f"{format_model(snapshot_model)!r}")


def _content_hash(model: ModelSpec, dataset: Dataset) -> str:
    digest = hashlib.sha256(dump_snapshot(model, dataset).encode("utf-8")).hexdigest()
    return f"sha256:{digest}"


@click.group()
def main():
    """Sketch a dataset, derive priors from it, and sanity-check them."""


@main.command()
@click.option("--model", "model_arg", required=True,
              help="Model formula, or a file containing one.")
@click.option("--data", "data_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dataset snapshot JSON.")
@click.option("--bootstrap-count", default=100, show_default=True, type=int,
              help="Number of resamples.")
@click.option("--resample-size", default=50, show_default=True, type=int,
              help="Rows drawn per resample (with replacement).")
@click.option("--seed", default=None, type=int,
              help="Derivation seed; defaults to the snapshot's rng_seed.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the priors JSON.")
@guarded
def derive(model_arg, data_path, bootstrap_count, resample_size, seed, out_path):
    """Derive priors from a snapshot's complete rows."""
    model = _read_model(model_arg)
    snapshot_model, dataset = _read_snapshot(data_path)
    _require_same_model(model, snapshot_model)
    cfg = BootstrapConfig(
        resample_count=bootstrap_count, resample_size=resample_size,
        seed=seed if seed is not None else dataset.seed)
    priors = derive_priors(dataset, model, cfg)
    text = dump_priors(model, cfg, priors, _content_hash(model, dataset))
    Path(out_path).write_text(text, encoding="utf-8")
    click.echo(f"wrote {len(priors)} priors to {out_path}")


@main.command()
@click.option("--model", "model_arg", required=True,
              help="Model formula, or a file containing one.")
@click.option("--data", "data_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dataset snapshot JSON.")
@click.option("--priors", "priors_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Priors JSON produced by derive.")
@click.option("--draws", default=10, show_default=True, type=int,
              help="Parameter vectors drawn from the priors.")
@click.option("--pred-samples", default=100, show_default=True, type=int,
              help="Predictor values drawn per marginal.")
@click.option("--seed", default=None, type=int,
              help="Simulation seed; defaults to the snapshot's rng_seed.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the check JSON.")
@click.option("--csv", "csv_path", default=None, type=click.Path(dir_okay=False),
              help="Optional CSV of the density curves.")
@guarded
def check(model_arg, data_path, priors_path, draws, pred_samples, seed, out_path, csv_path):
    """Simulate the prior predictive response distribution."""
    model = _read_model(model_arg)
    snapshot_model, dataset = _read_snapshot(data_path)
    _require_same_model(model, snapshot_model)
    imported = load_priors(Path(priors_path).read_text(encoding="utf-8"))
    cfg = PredictiveConfig(
        predictor_sample_count=pred_samples, parameter_draw_count=draws,
        seed=seed if seed is not None else dataset.seed)
    result = run_check(dataset, model, list(imported.priors), cfg)
    text = dump_check(model, cfg, result, _content_hash(model, dataset))
    Path(out_path).write_text(text, encoding="utf-8")
    if csv_path:
        Path(csv_path).write_text(dump_check_csv(result), encoding="utf-8")
    click.echo(f"wrote check with {len(result.draws)} draws to {out_path}")


@main.command("simulate-truth")
@click.option("--coeffs", required=True,
              help="Two comma-separated coefficients, e.g. '2,3'.")
@click.option("--sigma", default=1.0, show_default=True, type=float,
              help="Noise scale of the generating model.")
@click.option("--rows", default=200, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the snapshot JSON.")
@guarded
def simulate_truth(coeffs, sigma, rows, seed, out_path):
    """Write a snapshot of complete rows drawn from a known linear model.

    The generating model is y = c1*x1 + c2*x2 + Normal(0, sigma) with
    x1, x2 uniform over [0, 100]; handy as a ground-truth fixture for
    checking that derivation recovers known coefficients.
    """
    try:
        values = [float(tok) for tok in coeffs.split(",")]
    except ValueError:
        raise click.UsageError(f"--coeffs must be comma-separated numbers, got {coeffs!r}")
    if len(values) != 2:
        raise click.UsageError(f"--coeffs needs exactly 2 coefficients, got {len(values)}")
    if sigma < 0:
        raise click.UsageError("--sigma must be non-negative")
    if rows < 1:
        raise click.UsageError("--rows must be >= 1")
    if seed < 0:
        raise click.UsageError("--seed must be non-negative")

    model = parse_model("y ~ 0 + x1 + x2")
    rng = np.random.default_rng(seed)
    predictors = rng.uniform(0.0, 100.0, size=(rows, 2))
    response = predictors @ np.array(values) + rng.normal(0.0, sigma, size=rows)
    lo = float(min(0.0, math.floor(response.min())))
    hi = float(max(1.0, math.ceil(response.max())))
    dataset = Dataset([
        VariableSpec("x1", "predictor"),
        VariableSpec("x2", "predictor"),
        VariableSpec("y", "response", range=(lo, hi)),
    ], seed=seed)
    for i in range(rows):
        dataset.entities.append(Entity(id=f"e{i + 1}", values={
            "x1": float(predictors[i, 0]),
            "x2": float(predictors[i, 1]),
            "y": float(response[i]),
        }))
    dataset._next_id = rows + 1
    dataset._check_invariants()
    Path(out_path).write_text(dump_snapshot(model, dataset), encoding="utf-8")
    click.echo(f"wrote {rows} complete rows to {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True, type=int)
@click.option("--snapshot-dir", default=None, type=click.Path(file_okay=False),
              help="Directory for per-session snapshot persistence.")
@click.option("--cors-origin", default=None,
              help="Origin allowed to call the API (for a UI dev server).")
def serve(host, port, snapshot_dir, cors_origin):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(snapshot_dir=snapshot_dir, cors_origin=cors_origin),
                host=host, port=port)


if __name__ == "__main__":
    main()
