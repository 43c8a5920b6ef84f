"""Dataset file schema, canonical JSON, and format plumbing.

Annotation and prediction files share one COCO-flavored JSON layout:
``images`` with pixel dimensions and ``annotations`` carrying per-point
``dp_points`` records (pixel x/y, part, chart u/v, optional vertex).
Serialization is canonical (sorted keys, two-space indent, shortest
round-trip floats) so exports diff cleanly and re-exports are
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from .errors import SchemaError
from .mesh import NUM_PARTS

DATASET_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["images", "annotations"],
    "additionalProperties": False,
    "properties": {
        "images": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "width", "height"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer"},
                    "width": {"type": "integer", "minimum": 1},
                    "height": {"type": "integer", "minimum": 1},
                },
            },
        },
        "annotations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "image_id", "dp_points"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer"},
                    "image_id": {"type": "integer"},
                    "bbox": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 4,
                        "maxItems": 4,
                    },
                    "score": {"type": "number", "minimum": 0, "maximum": 1},
                    "dp_points": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["x", "y", "part", "u", "v"],
                            "additionalProperties": False,
                            "properties": {
                                "x": {"type": "number"},
                                "y": {"type": "number"},
                                "part": {
                                    "type": "integer",
                                    "minimum": 1,
                                    "maximum": NUM_PARTS,
                                },
                                "u": {"type": "number", "minimum": 0, "maximum": 1},
                                "v": {"type": "number", "minimum": 0, "maximum": 1},
                                "vertex": {"type": "integer", "minimum": 0},
                            },
                        },
                    },
                },
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(DATASET_SCHEMA)


@dataclass
class DatasetPoint:
    x: float
    y: float
    part: int
    u: float
    v: float
    vertex: int | None = None

    def to_json(self) -> dict:
        out = {"x": self.x, "y": self.y, "part": self.part, "u": self.u, "v": self.v}
        if self.vertex is not None:
            out["vertex"] = self.vertex
        return out


@dataclass
class DatasetAnnotation:
    id: int
    image_id: int
    dp_points: list
    bbox: tuple | None = None
    score: float | None = None

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "image_id": self.image_id,
            "dp_points": [p.to_json() for p in self.dp_points],
        }
        if self.bbox is not None:
            out["bbox"] = list(self.bbox)
        if self.score is not None:
            out["score"] = self.score
        return out


@dataclass
class DatasetImage:
    id: int
    width: int
    height: int

    def to_json(self) -> dict:
        return {"id": self.id, "width": self.width, "height": self.height}


@dataclass
class DatasetFile:
    images: list = field(default_factory=list)
    annotations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "images": [im.to_json() for im in self.images],
            "annotations": [a.to_json() for a in self.annotations],
        }


def canonical_dump(obj) -> str:
    """The one serialization used for every JSON artifact we write."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def validate_dataset_json(payload: dict):
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(payload))
    if error is not None:
        raise SchemaError(error.message, error.json_path)
    image_ids = {im["id"] for im in payload["images"]}
    if len(image_ids) != len(payload["images"]):
        raise SchemaError("duplicate image id", "$.images")
    for k, ann in enumerate(payload["annotations"]):
        if ann["image_id"] not in image_ids:
            raise SchemaError(
                f"unknown image_id {ann['image_id']}",
                f"$.annotations[{k}].image_id",
            )


def dataset_from_json(payload: dict) -> DatasetFile:
    validate_dataset_json(payload)
    images = [
        DatasetImage(id=im["id"], width=im["width"], height=im["height"])
        for im in payload["images"]
    ]
    annotations = []
    for ann in payload["annotations"]:
        points = [
            DatasetPoint(
                x=p["x"],
                y=p["y"],
                part=p["part"],
                u=p["u"],
                v=p["v"],
                vertex=p.get("vertex"),
            )
            for p in ann["dp_points"]
        ]
        annotations.append(
            DatasetAnnotation(
                id=ann["id"],
                image_id=ann["image_id"],
                dp_points=points,
                bbox=tuple(ann["bbox"]) if "bbox" in ann else None,
                score=ann.get("score"),
            )
        )
    return DatasetFile(images=images, annotations=annotations)


def read_dataset(path) -> DatasetFile:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    return dataset_from_json(payload)


def write_dataset(dataset: DatasetFile, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dump(dataset.to_json()))


# -- bridges into the metrics layer -------------------------------------------


def _point_vertex(point: DatasetPoint, atlas):
    if point.vertex is not None:
        return point.vertex
    if atlas is None:
        raise SchemaError(
            "point has no vertex and no atlas was given to derive one"
        )
    from .atlas import uv_to_vertex

    return uv_to_vertex(atlas, point.part, point.u, point.v)


def ground_truth_instances(dataset: DatasetFile, atlas=None) -> list:
    """Dataset annotations as ground-truth instances for evaluation."""
    from .metrics import GroundTruthInstance

    return [
        GroundTruthInstance(
            instance_id=ann.id,
            image_id=ann.image_id,
            points=[
                ((p.x, p.y), _point_vertex(p, atlas)) for p in ann.dp_points
            ],
            bbox=ann.bbox,
        )
        for ann in dataset.annotations
    ]


def predicted_instances(dataset: DatasetFile, atlas=None) -> list:
    """Dataset annotations as predictions; a missing score means 1.0."""
    from .metrics import PredictedInstance

    preds = []
    for ann in dataset.annotations:
        lookup = {
            (p.x, p.y): _point_vertex(p, atlas) for p in ann.dp_points
        }
        preds.append(
            PredictedInstance(
                instance_id=ann.id,
                image_id=ann.image_id,
                score=1.0 if ann.score is None else ann.score,
                lookup=lookup,
            )
        )
    return preds
