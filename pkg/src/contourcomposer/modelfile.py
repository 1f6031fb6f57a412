"""Versioned JSON model file.

Rationals are written as ``"num/den"`` strings and complex numbers as
``[re, im]`` pairs. Output is canonical (sorted keys, fixed indentation), so
``dumps(loads(text)) == text`` for any file this module wrote.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields

import jsonschema
import numpy as np

from .composer import GeneratorConfig
from .contour import ClusterStats, ContourModel
from .errors import SchemaError
from .markov import TransitionModel
from .pipeline import TrainedModels

MODEL_FORMAT = "contourcomposer-model"
MODEL_VERSION = 1

_complex_list = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
}
_rational = {"type": "string", "pattern": r"^-?\d+/\d+$"}
_symbol = {"type": ["integer", "string"]}

_markov_schema = {
    "type": "object",
    "required": ["feature", "order", "states", "rows"],
    "properties": {
        "feature": {"enum": ["pitch", "duration"]},
        "order": {"type": "integer", "minimum": 1},
        "states": {"type": "array", "items": _symbol},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["offbeat", "context", "successors", "counts", "probs"],
                "properties": {
                    "offbeat": _rational,
                    "context": {"type": "array", "items": _symbol, "minItems": 1},
                    "successors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "probs": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                },
            },
        },
    },
}

_contour_schema = {
    "type": "object",
    "required": [
        "feature",
        "n_samples",
        "selected_cluster",
        "argmin_cluster",
        "mean_spectrum",
        "curve",
        "clusters",
    ],
    "properties": {
        "feature": {"enum": ["pitch", "duration"]},
        "n_samples": {"type": "integer", "minimum": 1},
        "selected_cluster": {"type": "integer", "minimum": 0},
        "argmin_cluster": {"type": "integer", "minimum": 0},
        "mean_spectrum": _complex_list,
        "curve": {"type": "array", "items": {"type": "number"}},
        "clusters": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "size", "width", "quality", "mean_spectrum", "members"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "size": {"type": "integer", "minimum": 1},
                    "width": {"type": "number", "minimum": 0},
                    "quality": {"type": "number"},
                    "mean_spectrum": _complex_list,
                    "members": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "required": [
        "format",
        "version",
        "config",
        "pitch_model",
        "duration_model",
        "pitch_contour",
        "rhythm_contour",
        "fingerprint",
    ],
    "properties": {
        "format": {"const": MODEL_FORMAT},
        "version": {"const": MODEL_VERSION},
        "config": {
            "type": "object",
            "required": [f.name for f in fields(GeneratorConfig)],
            "properties": {
                "order": {"type": "integer", "minimum": 1},
                "bars": {"type": "integer", "minimum": 1},
                "sigma2_pitch": {"type": "number", "exclusiveMinimum": 0},
                "sigma2_rhythm": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "lowpass_k": {"type": "integer", "minimum": 1},
                "max_clusters": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "pitch_model": _markov_schema,
        "duration_model": _markov_schema,
        "pitch_contour": _contour_schema,
        "rhythm_contour": _contour_schema,
        "fingerprint": {
            "type": "object",
            "required": ["files"],
            "properties": {
                "files": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["file", "sha256"],
                        "properties": {"file": {"type": "string"}, "sha256": {"type": "string"}},
                    },
                }
            },
        },
    },
}


def _complex_to_json(values) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex)]


def _complex_from_json(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


def contour_to_json(model: ContourModel) -> dict:
    return {
        "feature": model.feature,
        "n_samples": model.n_samples,
        "selected_cluster": model.selected_cluster,
        "argmin_cluster": model.argmin_cluster,
        "mean_spectrum": _complex_to_json(model.mean_spectrum),
        "curve": [float(v) for v in model.curve],
        "clusters": [
            {
                "id": c.cluster_id,
                "size": c.size,
                "width": float(c.width),
                "quality": float(c.quality),
                "mean_spectrum": _complex_to_json(c.mean_spectrum),
                "members": list(c.members),
            }
            for c in model.clusters
        ],
    }


def contour_from_json(obj: dict) -> ContourModel:
    clusters = [
        ClusterStats(c["id"], c["size"], c["width"], c["quality"], _complex_from_json(c["mean_spectrum"]), c["members"])
        for c in obj["clusters"]
    ]
    return ContourModel(
        feature=obj["feature"],
        selected_cluster=obj["selected_cluster"],
        mean_spectrum=_complex_from_json(obj["mean_spectrum"]),
        curve=np.array(obj["curve"], dtype=float),
        clusters=clusters,
        argmin_cluster=obj["argmin_cluster"],
        n_samples=obj["n_samples"],
    )


def to_json(models: TrainedModels) -> dict:
    files = models.fingerprint.get("files", [])
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": asdict(models.config),
        "pitch_model": models.pitch_model.to_json(),
        "duration_model": models.duration_model.to_json(),
        "pitch_contour": contour_to_json(models.pitch_contour),
        "rhythm_contour": contour_to_json(models.rhythm_contour),
        "fingerprint": {"files": sorted(files, key=lambda f: f["file"])},
    }


def dumps(models: TrainedModels) -> str:
    return json.dumps(to_json(models), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _path(error) -> str:
    return "/" + "/".join(str(p) for p in error.absolute_path)


def validate(doc) -> None:
    validator = jsonschema.Draft7Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        first = errors[0]
        raise SchemaError(f"{_path(first)}: {first.message}")


def loads(text: str) -> TrainedModels:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"/: not valid JSON ({exc})") from exc
    validate(doc)
    try:
        pitch_model = TransitionModel.from_json(doc["pitch_model"])
        duration_model = TransitionModel.from_json(doc["duration_model"])
        pitch_contour = contour_from_json(doc["pitch_contour"])
        rhythm_contour = contour_from_json(doc["rhythm_contour"])
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        raise SchemaError(f"/: inconsistent model contents ({exc})") from exc
    for name in ("pitch_model", "duration_model"):
        for i, row in enumerate(doc[name]["rows"]):
            if not len(row["successors"]) == len(row["counts"]) == len(row["probs"]):
                raise SchemaError(f"/{name}/rows/{i}: successors, counts and probs differ in length")
            if row["successors"] and max(row["successors"]) >= len(doc[name]["states"]):
                raise SchemaError(f"/{name}/rows/{i}/successors: index outside the alphabet")
    return TrainedModels(
        config=GeneratorConfig(**doc["config"]),
        pitch_model=pitch_model,
        duration_model=duration_model,
        pitch_contour=pitch_contour,
        rhythm_contour=rhythm_contour,
        fingerprint=doc["fingerprint"],
    )
