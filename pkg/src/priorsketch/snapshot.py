"""Session snapshot import/export.

A snapshot is a versioned JSON document capturing everything needed to
reconstruct a session: the model formula, per-variable binning, the
entity list, and the dataset seed. Loading preserves value and range
numbers exactly as written (ints stay ints), so a load immediately
followed by a dump reproduces the input canonically; all exports go
through the canonical writer, so export → import → export is
byte-identical.
"""

from .dataset import ENTITY_ID, Dataset, Entity
from .errors import DomainError
from .formula import FormulaError, ModelSpec, VariableSpec, format_model, parse_model
from .jsonio import dumps_canonical

import json

SCHEMA_VERSION = 1


class SnapshotError(DomainError):
    code = "invalid_snapshot"


def _require(condition: bool, message: str):
    if not condition:
        raise SnapshotError(message)


def _number(obj, where: str):
    # bool is an int subclass; it is not a value.
    _require(isinstance(obj, (int, float)) and not isinstance(obj, bool),
             f"{where} must be a number")
    if isinstance(obj, float):
        _require(obj == obj and obj not in (float("inf"), float("-inf")),
                 f"{where} must be finite")
    return obj


def dump_snapshot(model: ModelSpec, dataset: Dataset) -> str:
    doc = {
        "version": SCHEMA_VERSION,
        "model_formula": format_model(model),
        "variables": [
            {"name": spec.name, "role": spec.role,
             "range": [spec.range[0], spec.range[1]], "bins": spec.bin_count}
            for spec in dataset.variables.values()
        ],
        "entities": [{"id": ent.id, "values": dict(ent.values)} for ent in dataset.entities],
        "rng_seed": dataset.seed,
    }
    return dumps_canonical(doc)


def load_snapshot(text: str | bytes) -> tuple[ModelSpec, Dataset]:
    """Parse and validate a snapshot document.

    Raises SnapshotError on malformed JSON, an unsupported schema
    version, a variables section that disagrees with the formula, or
    entities violating the dataset invariants.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SnapshotError(f"snapshot is not valid utf-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot is not valid JSON: {exc}") from None
    _require(isinstance(doc, dict), "snapshot must be a JSON object")
    for key in ("version", "model_formula", "variables", "entities", "rng_seed"):
        _require(key in doc, f"snapshot is missing {key!r}")

    version = doc["version"]
    _require(isinstance(version, int) and not isinstance(version, bool),
             "snapshot version must be an integer")
    if version > SCHEMA_VERSION:
        raise SnapshotError(
            f"snapshot version {version} is newer than the supported version {SCHEMA_VERSION}")
    _require(version == SCHEMA_VERSION, f"unsupported snapshot version {version}")

    _require(isinstance(doc["model_formula"], str), "model_formula must be a string")
    try:
        model = parse_model(doc["model_formula"])
    except FormulaError as exc:
        raise SnapshotError(f"invalid model_formula: {exc.message}") from None

    _require(isinstance(doc["variables"], list) and doc["variables"],
             "variables must be a non-empty list")
    expected_roles = {name: "predictor" for name in model.predictors}
    expected_roles[model.response] = "response"
    specs = []
    seen_names = set()
    for item in doc["variables"]:
        _require(isinstance(item, dict), "each variable must be an object")
        for key in ("name", "role", "range", "bins"):
            _require(key in item, f"variable entry is missing {key!r}")
        name = item["name"]
        _require(isinstance(name, str), "variable name must be a string")
        _require(name in expected_roles, f"variable {name!r} does not appear in the model formula")
        _require(name not in seen_names, f"duplicate variable {name!r}")
        seen_names.add(name)
        _require(item["role"] == expected_roles[name],
                 f"variable {name!r} must have role {expected_roles[name]!r}")
        rng = item["range"]
        _require(isinstance(rng, list) and len(rng) == 2, f"variable {name!r}: range must be [lo, hi]")
        lo = _number(rng[0], f"variable {name!r} range lo")
        hi = _number(rng[1], f"variable {name!r} range hi")
        bins = item["bins"]
        _require(isinstance(bins, int) and not isinstance(bins, bool),
                 f"variable {name!r}: bins must be an integer")
        try:
            specs.append(VariableSpec(name=name, role=item["role"], range=(lo, hi), bin_count=bins))
        except ValueError as exc:
            raise SnapshotError(str(exc)) from None
    missing = set(expected_roles) - seen_names
    _require(not missing, f"variables section is missing {sorted(missing)!r}")

    seed = doc["rng_seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
             "rng_seed must be a non-negative integer")

    dataset = Dataset(specs, seed=seed)
    _require(isinstance(doc["entities"], list), "entities must be a list")
    max_numbered = 0
    seen_ids = set()
    for item in doc["entities"]:
        _require(isinstance(item, dict), "each entity must be an object")
        for key in ("id", "values"):
            _require(key in item, f"entity entry is missing {key!r}")
        entity_id = item["id"]
        _require(isinstance(entity_id, str) and entity_id, "entity id must be a non-empty string")
        _require(entity_id not in seen_ids, f"duplicate entity id {entity_id!r}")
        seen_ids.add(entity_id)
        values = item["values"]
        _require(isinstance(values, dict) and values,
                 f"entity {entity_id!r}: values must be a non-empty object")
        for name, value in values.items():
            _require(name in dataset.variables,
                     f"entity {entity_id!r} holds unknown variable {name!r}")
            value = _number(value, f"entity {entity_id!r} value for {name!r}")
            lo, hi = dataset.variables[name].range
            _require(lo <= value <= hi,
                     f"entity {entity_id!r} value {name}={value} outside range [{lo}, {hi}]")
        dataset.entities.append(Entity(id=entity_id, values=dict(values)))
        m = ENTITY_ID.fullmatch(entity_id)
        if m:
            max_numbered = max(max_numbered, int(m.group(1)))
    dataset._next_id = max_numbered + 1
    return model, dataset
