"""Stateless HTTP service over a finished analysis.

Serves the fitted logit model and the rule tree for prediction and
what-if exploration.  Artifacts (schema.json, model.json, tree.json)
load once at startup and are immutable afterwards; every request is a
pure function of its body, so concurrent handling needs no locks.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .data import AttributeSchema
from .logit import FittedLogitModel, predict_proba, record_from_profile
from .rules import RuleTree, extract_rules, render_rule

SCHEMA_FILE = "schema.json"
MODEL_FILE = "model.json"
TREE_FILE = "tree.json"


@dataclass(frozen=True)
class Artifacts:
    schema: AttributeSchema
    model: FittedLogitModel
    tree: RuleTree
    rule_numbers: dict[tuple, int]

    @classmethod
    def load(cls, directory: str | Path) -> "Artifacts":
        directory = Path(directory)
        schema = AttributeSchema.load(directory / SCHEMA_FILE)
        model = FittedLogitModel.load(directory / MODEL_FILE, schema)
        tree = RuleTree.load(directory / TREE_FILE, schema)
        numbers = {
            (rule.conditions, rule.consequent): i
            for i, rule in enumerate(extract_rules(tree), start=1)
        }
        return cls(schema, model, tree, numbers)


def validate_profile(schema: AttributeSchema, profile) -> list[dict]:
    """Field-level validation errors for a {attribute: level} body."""
    errors = []
    if not isinstance(profile, dict):
        return [{"field": "", "message": "profile must be a JSON object"}]
    class_name = schema.class_attribute.name
    predictor_names = {a.name for a in schema.predictors}
    for key, value in profile.items():
        if key == class_name:
            errors.append(
                {"field": key, "message": "the class attribute is not an input"}
            )
        elif key not in predictor_names:
            errors.append({"field": key, "message": f"unknown attribute {key!r}"})
        elif not isinstance(value, str):
            errors.append({"field": key, "message": "level must be a string"})
        elif value not in schema.attribute(key).levels:
            errors.append(
                {"field": key, "message": f"unknown level {value!r} for {key!r}"}
            )
    for attr in schema.predictors:
        if attr.name not in profile:
            errors.append({"field": attr.name, "message": "missing attribute"})
    return errors


def predict_profile(artifacts: Artifacts, profile: dict[str, str]) -> dict:
    """PredictionResponse body for a validated profile.

    Used by both the HTTP endpoint and the CLI `predict` subcommand so
    the two surfaces can never drift apart.
    """
    schema = artifacts.schema
    record = record_from_profile(schema, profile)
    match = artifacts.tree.classify(record)
    probs = predict_proba(artifacts.model, record)
    class_levels = schema.class_attribute.levels
    model_class = int(np.argmax(probs))
    rule_number = artifacts.rule_numbers.get(
        (match.rule.conditions, match.rule.consequent), 0
    )
    rule_class = class_levels[match.class_index]
    return {
        "input": {a.name: profile[a.name] for a in schema.predictors},
        "rule_prediction": {
            "class": rule_class,
            "rule": render_rule(match.rule, rule_number),
            "backoff": match.backoff,
        },
        "model_prediction": {
            "class": class_levels[model_class],
            "class_labels": list(class_levels),
            "probabilities": [float(p) for p in probs],
        },
        "agreement": rule_class == class_levels[model_class],
        "model_info": {
            "deviance": float(artifacts.model.deviance),
            "n_params": artifacts.model.n_params,
            "schema_hash": schema.hash(),
        },
    }


def create_app(artifacts_dir: str | Path | None = None, artifacts: Artifacts | None = None) -> FastAPI:
    app = FastAPI(title="youthdss decision support service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    if artifacts is None and artifacts_dir is not None:
        artifacts = Artifacts.load(artifacts_dir)
    app.state.artifacts = artifacts

    def _error(status: int, errors: list[dict]) -> JSONResponse:
        return JSONResponse(status_code=status, content={"errors": errors})

    @app.exception_handler(RequestValidationError)
    async def _body_error(request: Request, exc: RequestValidationError):
        return _error(400, [{"field": "", "message": "request body must be JSON"}])

    def _ready() -> Artifacts | None:
        return app.state.artifacts

    @app.get("/schema")
    def get_schema():
        arts = _ready()
        if arts is None:
            return _error(503, [{"field": "", "message": "artifacts not loaded"}])
        doc = arts.schema.to_json_dict()
        doc["schema_hash"] = arts.schema.hash()
        return doc

    @app.post("/predict")
    async def post_predict(request: Request):
        arts = _ready()
        if arts is None:
            return _error(503, [{"field": "", "message": "artifacts not loaded"}])
        try:
            body = await request.json()
        except Exception:
            return _error(400, [{"field": "", "message": "request body must be JSON"}])
        errors = validate_profile(arts.schema, body)
        if errors:
            return _error(400, errors)
        return predict_profile(arts, body)

    @app.post("/whatif")
    async def post_whatif(request: Request):
        arts = _ready()
        if arts is None:
            return _error(503, [{"field": "", "message": "artifacts not loaded"}])
        try:
            body = await request.json()
        except Exception:
            return _error(400, [{"field": "", "message": "request body must be JSON"}])
        if not isinstance(body, dict):
            return _error(400, [{"field": "", "message": "body must be an object"}])
        base = body.get("base")
        overrides = body.get("overrides", [])
        base_errors = validate_profile(arts.schema, base)
        if base_errors:
            return _error(400, [{"field": f"base.{e['field']}", "message": e["message"]} for e in base_errors])
        if not isinstance(overrides, list):
            return _error(400, [{"field": "overrides", "message": "must be a list"}])

        base_response = predict_profile(arts, base)
        base_probs = base_response["model_prediction"]["probabilities"]
        results = []
        for item in overrides:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("attribute"), str)
                or not isinstance(item.get("level"), str)
            ):
                results.append(
                    {
                        "override": item,
                        "status": "error",
                        "errors": [
                            {
                                "field": "overrides",
                                "message": "override needs attribute and level strings",
                            }
                        ],
                    }
                )
                continue
            profile = dict(base)
            profile[item["attribute"]] = item["level"]
            errors = validate_profile(arts.schema, profile)
            if errors:
                results.append({"override": item, "status": "error", "errors": errors})
                continue
            prediction = predict_profile(arts, profile)
            delta = [
                p - b
                for p, b in zip(
                    prediction["model_prediction"]["probabilities"], base_probs
                )
            ]
            results.append(
                {
                    "override": item,
                    "status": "ok",
                    "prediction": prediction,
                    "delta": delta,
                }
            )
        return {"base": base_response, "results": results}

    return app


def serve(artifacts_dir: str | Path, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    app = create_app(artifacts_dir=artifacts_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
