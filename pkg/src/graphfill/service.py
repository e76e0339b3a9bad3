"""HTTP completion service consumed by the browser UI."""

from __future__ import annotations

import logging
import threading
import uuid
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .diffusion import GraphDiffusionImputer
from .schema import MISSING, ObservationMask, PartialDesign, SchemaError

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20


class CompletionRequest(BaseModel):
    observed: dict[str, Any] = Field(default_factory=dict)
    k: int = Field(default=50, ge=1, le=500)
    seed: int | None = None


class RequestError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


def _build_partial(model: GraphDiffusionImputer, observed: dict[str, Any]) -> PartialDesign:
    schema = model.schema
    for name in observed:
        if name not in schema.name_index:
            raise RequestError(name, f"unknown feature name: {name!r}")
    values = []
    for spec in schema.features:
        if spec.name not in observed:
            values.append(MISSING)
            continue
        raw = observed[spec.name]
        if spec.is_numeric:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise RequestError(spec.name, f"feature {spec.name!r}: expected a number, got {raw!r}")
        else:
            value = raw
        try:
            spec.validate_value(value)
        except SchemaError as exc:
            raise RequestError(spec.name, str(exc))
        values.append(value)
    mask = ObservationMask(observed=tuple(v is not MISSING for v in values))
    return PartialDesign(schema=schema, values=tuple(values), mask=mask)


def _summaries(model: GraphDiffusionImputer, sample_set) -> dict[str, dict]:
    schema = model.schema
    out: dict[str, dict] = {}
    for j in sample_set.partial.missing_positions:
        spec = schema.features[j]
        draws = sample_set.values_for(j)
        if spec.is_numeric:
            arr = np.asarray(draws, dtype=float)
            lo, hi = spec.numeric_range
            counts, edges = np.histogram(arr, bins=HISTOGRAM_BINS, range=(lo, hi))
            out[spec.name] = {
                "kind": "numeric",
                "mean": float(arr.mean()),
                "min": float(arr.min()),
                "max": float(arr.max()),
                "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
            }
        else:
            counts = {c: 0 for c in spec.categories}
            for v in draws:
                counts[v] += 1
            mode = max(spec.categories, key=lambda c: (counts[c], -spec.categories.index(c)))
            out[spec.name] = {"kind": "categorical", "mode": mode, "counts": counts}
    return out


def create_app(model: GraphDiffusionImputer, model_version: str = "dev") -> FastAPI:
    app = FastAPI(title="graphfill completion service")
    rng_lock = threading.Lock()
    rng = np.random.default_rng()

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "model_version": model_version}

    @app.get("/v1/schema")
    def schema():
        doc = model.schema.to_dict()
        doc["graph_edges"] = [list(e) for e in model.graph.edge_list()]
        return doc

    @app.post("/v1/complete")
    def complete(request: CompletionRequest):
        try:
            partial = _build_partial(model, request.observed)
        except RequestError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc), "field": exc.field})
        seed = request.seed
        if seed is None:
            with rng_lock:
                seed = int(rng.integers(0, 2**31))
        sample_set = model.sample(partial, request.k, seed)
        payload = {
            "model_version": model_version,
            "seed": seed,
            "k": request.k,
            "completions": [
                {spec.name: draw.values[j] for j, spec in enumerate(model.schema.features)}
                for draw in sample_set.draws
            ],
            "summaries": _summaries(model, sample_set),
        }
        # nothing to impute and K > 1: the summary is degenerate; flag it while
        # still returning the copies
        if not partial.missing_positions and request.k > 1:
            return JSONResponse(status_code=422, content=payload)
        return payload

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex
        logger.exception("internal error %s", error_id)
        return JSONResponse(status_code=500, content={"detail": "internal error", "id": error_id})

    return app
