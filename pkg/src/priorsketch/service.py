"""HTTP facade over sessions: dataset editing, prior derivation, checks.

Each session owns a model, a dataset, and the most recent derivation and
check results, stamped with the dataset version they were computed from
so staleness is detectable but never silently repaired. Requests to one
session are serialized through its lock; different sessions do not
contend. Derivation and check responses are emitted through the
canonical JSON writer, so the service and the command line produce
byte-identical artifacts for identical inputs and seeds.
"""

import hashlib
import re
import secrets
import threading
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .dataset import ConnectPlan, Dataset, InvalidBinning, Selection, UnknownVariable
from .errors import DomainError
from .formula import ModelSpec, VariableSpec, parse_model
from .jsonio import dumps_canonical
from .predictive import PredictiveConfig, check_document, run_check
from .priors import BootstrapConfig, PriorDistribution, derive_priors, priors_document
from .snapshot import dump_snapshot, load_snapshot

import json

SESSION_ID = re.compile(r"s([0-9]+)")


class UnknownSession(DomainError):
    code = "unknown_session"
    http_status = 404


class UnknownPlan(DomainError):
    code = "unknown_plan"
    http_status = 404


class StalePriors(DomainError):
    """Priors were derived from an older dataset version; re-translate first."""

    code = "priors_stale"
    http_status = 409


class PriorsMissing(DomainError):
    code = "priors_missing"


class IncompleteConstraints(DomainError):
    code = "incomplete_constraints"


class MalformedRequest(DomainError):
    code = "malformed_request"
    http_status = 400


@dataclass
class SessionState:
    id: str
    model: ModelSpec
    dataset: Dataset
    priors: list[PriorDistribution] | None = None
    priors_doc: dict | None = None
    priors_version: int | None = None
    check_doc: dict | None = None
    check_version: int | None = None
    # plans survive mutations; connect rejects outdated ones by version stamp
    plans: dict[str, ConnectPlan] = dataclass_field(default_factory=dict)
    plan_counter: int = 0
    lock: threading.Lock = dataclass_field(default_factory=threading.Lock)

    def snapshot_text(self) -> str:
        return dump_snapshot(self.model, self.dataset)

    def content_hash(self) -> str:
        digest = hashlib.sha256(self.snapshot_text().encode("utf-8")).hexdigest()
        return f"sha256:{digest}"

    def next_plan_token(self) -> str:
        self.plan_counter += 1
        return f"p{self.plan_counter}"


# -- request bodies ---------------------------------------------------------

class VariableOverride(BaseModel):
    name: str
    range: tuple[float, float] | None = None
    bins: int | None = None


class CreateSessionBody(BaseModel):
    formula: str
    variables: list[VariableOverride] | None = None
    rng_seed: int | None = None


class AddValueBody(BaseModel):
    var: str
    value: float | None = None
    bin_index: int | None = None


class SetBinningBody(BaseModel):
    bins: int
    range: tuple[float, float]
    force: bool = False


class GenerateBody(BaseModel):
    constraints: dict[str, tuple[float, float]]
    count: int = 5
    mode: str = "incomplete"


class GroupBody(BaseModel):
    variables: list[str]
    entity_ids: list[str]


class PreviewBody(BaseModel):
    groups: list[GroupBody]


class ConnectBody(BaseModel):
    plan_token: str


class BootstrapBody(BaseModel):
    resample_count: int = 100
    resample_size: int = 50
    seed: int | None = None
    max_retries_per_resample: int = 20


class TranslateBody(BaseModel):
    bootstrap_config: BootstrapBody | None = None


class PredictiveBody(BaseModel):
    predictor_sample_count: int = 100
    parameter_draw_count: int = 10
    seed: int | None = None
    grid: tuple[float, float, int] | None = None
    include_noise: bool = True


class CheckBody(BaseModel):
    predictive_config: PredictiveBody | None = None


class QueryBody(BaseModel):
    brushes: dict[str, tuple[float, float]] = {}
    mode: str = "complete"


def canonical_response(payload, status_code: int = 200) -> Response:
    return Response(content=dumps_canonical(payload),
                    media_type="application/json", status_code=status_code)


def create_app(snapshot_dir: str | None = None, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="priorsketch", docs_url=None, redoc_url=None)
    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    store: dict[str, SessionState] = {}
    store_lock = threading.Lock()
    counter = {"next": 1}
    persist_dir = Path(snapshot_dir) if snapshot_dir else None

    if persist_dir:
        persist_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(persist_dir.glob("*.json")):
            m = SESSION_ID.fullmatch(path.stem)
            if not m:
                continue
            model, dataset = load_snapshot(path.read_text(encoding="utf-8"))
            store[path.stem] = SessionState(id=path.stem, model=model, dataset=dataset)
            counter["next"] = max(counter["next"], int(m.group(1)) + 1)

    def persist(session: SessionState):
        if persist_dir:
            path = persist_dir / f"{session.id}.json"
            path.write_text(session.snapshot_text(), encoding="utf-8")

    def get_session(session_id: str) -> SessionState:
        with store_lock:
            session = store.get(session_id)
        if session is None:
            raise UnknownSession(f"unknown session {session_id!r}", session_id=session_id)
        return session

    @app.exception_handler(DomainError)
    def domain_error_handler(request: Request, exc: DomainError):
        body = {"code": exc.code, "message": exc.message}
        if exc.details:
            body["details"] = exc.details
        return JSONResponse(status_code=exc.http_status, content=body)

    @app.exception_handler(RequestValidationError)
    def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "code": "malformed_request",
            "message": "request body failed validation",
            "details": {"errors": [str(e.get("msg", e)) for e in exc.errors()]},
        })

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        model = parse_model(body.formula)
        overrides = {}
        for item in body.variables or []:
            if item.name not in model.variables:
                raise UnknownVariable(
                    f"variable {item.name!r} does not appear in the model",
                    variable=item.name)
            overrides[item.name] = item
        specs = []
        for spec in model.default_variables():
            override = overrides.get(spec.name)
            if override is None:
                specs.append(spec)
                continue
            try:
                specs.append(VariableSpec(
                    name=spec.name, role=spec.role,
                    range=tuple(override.range) if override.range else spec.range,
                    bin_count=override.bins if override.bins is not None else spec.bin_count))
            except ValueError as exc:
                raise InvalidBinning(str(exc), variable=spec.name) from None
        seed = body.rng_seed if body.rng_seed is not None else secrets.randbelow(2 ** 32)
        if seed < 0:
            raise MalformedRequest("rng_seed must be non-negative")
        with store_lock:
            session_id = f"s{counter['next']}"
            counter["next"] += 1
            session = SessionState(id=session_id, model=model,
                                   dataset=Dataset(specs, seed=seed))
            store[session_id] = session
        persist(session)
        return {"session_id": session_id, "dataset_version": session.dataset.version}

    @app.get("/sessions/{session_id}")
    def get_session_view(session_id: str):
        session = get_session(session_id)
        with session.lock:
            doc = json.loads(session.snapshot_text())
            version = session.dataset.version
            doc["dataset_version"] = version
            doc["priors"] = None if session.priors_doc is None else {
                "document": session.priors_doc,
                "dataset_version": session.priors_version,
                "stale": session.priors_version != version,
            }
            doc["check"] = None if session.check_doc is None else {
                "document": session.check_doc,
                "dataset_version": session.check_version,
                "stale": session.check_version != version,
            }
            return canonical_response(doc)

    # -- dataset mutations --------------------------------------------------

    @app.post("/sessions/{session_id}/values", status_code=201)
    def add_value(session_id: str, body: AddValueBody):
        session = get_session(session_id)
        with session.lock:
            if (body.value is None) == (body.bin_index is None):
                raise MalformedRequest("provide exactly one of value or bin_index")
            value = (body.value if body.value is not None
                     else session.dataset.bin_center(body.var, body.bin_index))
            entity_id = session.dataset.add_value(body.var, value)
            persist(session)
            return {"entity_id": entity_id, "value": value,
                    "dataset_version": session.dataset.version}

    @app.delete("/sessions/{session_id}/entities/{entity_id}/values/{var}", status_code=204)
    def remove_value(session_id: str, entity_id: str, var: str):
        session = get_session(session_id)
        with session.lock:
            session.dataset.remove_value(entity_id, var)
            persist(session)
        return Response(status_code=204)

    @app.put("/sessions/{session_id}/variables/{var}")
    def set_binning(session_id: str, var: str, body: SetBinningBody):
        session = get_session(session_id)
        with session.lock:
            dropped = session.dataset.set_binning(var, body.bins, tuple(body.range),
                                                  force=body.force)
            spec = session.dataset.variable(var)
            persist(session)
            return {"variable": {"name": spec.name, "role": spec.role,
                                 "range": [spec.range[0], spec.range[1]],
                                 "bins": spec.bin_count},
                    "dropped_values": dropped,
                    "dataset_version": session.dataset.version}

    @app.post("/sessions/{session_id}/generate", status_code=201)
    def generate(session_id: str, body: GenerateBody):
        session = get_session(session_id)
        with session.lock:
            if body.mode not in ("complete", "incomplete"):
                raise MalformedRequest(f"invalid mode {body.mode!r}")
            if body.mode == "complete":
                missing = [name for name in session.dataset.variables
                           if name not in body.constraints]
                if missing:
                    raise IncompleteConstraints(
                        "complete mode needs a constraint on every variable; "
                        f"missing {missing}", missing=missing)
            ids = session.dataset.generate_entities(
                {name: tuple(interval) for name, interval in body.constraints.items()},
                body.count)
            persist(session)
            return {"entity_ids": ids, "dataset_version": session.dataset.version}

    @app.post("/sessions/{session_id}/connect/preview")
    def preview_connect(session_id: str, body: PreviewBody):
        session = get_session(session_id)
        with session.lock:
            plan = session.dataset.preview_connections(
                [(group.variables, group.entity_ids) for group in body.groups])
            token = session.next_plan_token()
            session.plans[token] = plan
            return {"plan_token": token,
                    "dataset_version": plan.dataset_version,
                    "merge_count": plan.merge_count,
                    "merges": [list(merge) for merge in plan.merges]}

    @app.post("/sessions/{session_id}/connect")
    def connect(session_id: str, body: ConnectBody):
        session = get_session(session_id)
        with session.lock:
            plan = session.plans.get(body.plan_token)
            if plan is None:
                raise UnknownPlan(f"unknown plan token {body.plan_token!r}",
                                  plan_token=body.plan_token)
            merged = session.dataset.connect(plan)
            persist(session)
            return {"merged_ids": merged, "dataset_version": session.dataset.version}

    @app.post("/sessions/{session_id}/query")
    def query(session_id: str, body: QueryBody):
        session = get_session(session_id)
        with session.lock:
            if body.mode not in ("complete", "incomplete"):
                raise MalformedRequest(f"invalid query mode {body.mode!r}")
            matched = session.dataset.query(Selection(
                brushes={name: tuple(interval) for name, interval in body.brushes.items()},
                mode=body.mode))
            return {"entity_ids": matched, "dataset_version": session.dataset.version}

    # -- derivation and checking --------------------------------------------

    @app.post("/sessions/{session_id}/translate")
    def translate(session_id: str, body: TranslateBody | None = None):
        session = get_session(session_id)
        with session.lock:
            raw = (body.bootstrap_config if body and body.bootstrap_config
                   else BootstrapBody())
            cfg = BootstrapConfig(
                resample_count=raw.resample_count,
                resample_size=raw.resample_size,
                seed=raw.seed if raw.seed is not None else session.dataset.seed,
                max_retries_per_resample=raw.max_retries_per_resample)
            priors = derive_priors(session.dataset, session.model, cfg)
            doc = priors_document(session.model, cfg, priors, session.content_hash())
            session.priors = priors
            session.priors_doc = doc
            session.priors_version = session.dataset.version
            return canonical_response(doc)

    @app.post("/sessions/{session_id}/check")
    def check(session_id: str, body: CheckBody | None = None):
        session = get_session(session_id)
        with session.lock:
            if session.priors is None:
                raise PriorsMissing("no priors derived yet; call translate first")
            if session.priors_version != session.dataset.version:
                raise StalePriors(
                    f"priors were derived from dataset version {session.priors_version}, "
                    f"current version is {session.dataset.version}; re-translate first",
                    priors_version=session.priors_version,
                    dataset_version=session.dataset.version)
            raw = (body.predictive_config if body and body.predictive_config
                   else PredictiveBody())
            cfg = PredictiveConfig(
                predictor_sample_count=raw.predictor_sample_count,
                parameter_draw_count=raw.parameter_draw_count,
                seed=raw.seed if raw.seed is not None else session.dataset.seed,
                grid=tuple(raw.grid) if raw.grid else None,
                include_noise=raw.include_noise)
            result = run_check(session.dataset, session.model, session.priors, cfg)
            doc = check_document(session.model, cfg, result, session.content_hash())
            session.check_doc = doc
            session.check_version = session.dataset.version
            return canonical_response(doc)

    # -- snapshots ----------------------------------------------------------

    @app.get("/sessions/{session_id}/snapshot")
    def get_snapshot(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return Response(content=session.snapshot_text(), media_type="application/json")

    @app.put("/sessions/{session_id}/snapshot")
    async def put_snapshot(session_id: str, request: Request):
        session = get_session(session_id)
        raw = await request.body()
        with session.lock:
            model, dataset = load_snapshot(raw)
            # The replacement counts as one mutation on the session's
            # version line, so plans and priors from before the load can
            # never be applied to the imported data.
            dataset.version = session.dataset.version + 1
            session.model = model
            session.dataset = dataset
            persist(session)
            return {"dataset_version": session.dataset.version}

    return app
