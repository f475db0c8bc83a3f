"""JSON scene format, validation and canonical serialization.

Rationals are written as "p/q" strings (integers as "p"); numbers are also
accepted on input.  Output is deterministic: sorted keys, canonical pieces.
"""
from __future__ import annotations

import json
from typing import Any

import jsonschema

from .fixtures import FIXTURES, fixture
from .geometry import NormKind, Polytope, Region, as_point, convex_hull
from .rational import fmt_q, to_q
from .squares import MaximalSquareSet, SquareUnion

_COORD = {"type": ["string", "number"]}
_POINT = {"type": "array", "items": _COORD, "minItems": 1}
_POINTS = {"type": "array", "items": _POINT, "minItems": 1}

ATOM_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["polytope", "points", "region"]},
        "vertices": _POINTS,
        "points": _POINTS,
        "pieces": {"type": "array", "items": _POINTS, "minItems": 1},
    },
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "polytope"}}, "required": ["vertices"]},
        {"properties": {"kind": {"const": "points"}}, "required": ["points"]},
        {"properties": {"kind": {"const": "region"}}, "required": ["pieces"]},
    ],
}

SCENE_SCHEMA = {
    "type": "object",
    "properties": {
        "fixture": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "norm": {"type": "string", "pattern": "^(linf|l2(:[0-9]+)?)$"},
        "atoms": {"type": "array", "items": ATOM_SCHEMA, "minItems": 1},
        "pairs": {"type": "array", "items": {"type": "array", "items": _POINT, "minItems": 2, "maxItems": 2}},
        "functions": {"type": "array", "items": {
            "type": "object",
            "properties": {"values": _POINTS, "weights": {"type": "array", "items": _COORD}},
            "required": ["values"],
        }},
        "levels": {"type": "array", "items": _COORD},
        "q": {"type": "number", "minimum": 1},
        "problem": {"type": "object", "properties": {
            "n_cells": {"type": "integer", "minimum": 2},
            "mean": _POINT,
            "box": {"type": "array", "items": _POINT, "minItems": 2, "maxItems": 2},
            "ladder": {"type": "array", "items": {"type": "number", "minimum": 1}},
            "restarts": {"type": "integer", "minimum": 1},
            "max_iter": {"type": "integer", "minimum": 1},
            "penalty": {"type": "number", "exclusiveMinimum": 0},
            "grid": {"type": "integer", "minimum": 2},
        }},
    },
    "anyOf": [{"required": ["fixture"]}, {"required": ["atoms"]}],
}


class SchemaError(ValueError):
    pass


def validate_scene(doc: Any) -> None:
    try:
        jsonschema.validate(doc, SCENE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"scene schema violation: {exc.message}") from exc
    if "fixture" in doc and doc["fixture"].upper() not in FIXTURES:
        raise SchemaError(f"unknown fixture {doc['fixture']!r}")


# ---------------------------------------------------------------- decoding


def point_from_json(p) -> tuple:
    try:
        return as_point(p)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad coordinate in {p!r}") from exc


def atom_from_json(a: dict) -> Region:
    kind = a["kind"]
    if kind == "polytope":
        return Region.single(convex_hull([point_from_json(v) for v in a["vertices"]]))
    if kind == "points":
        return Region.from_points([point_from_json(v) for v in a["points"]])
    return Region.of(convex_hull([point_from_json(v) for v in piece]) for piece in a["pieces"])


def scene_from_json(doc: dict) -> SquareUnion:
    validate_scene(doc)
    if "fixture" in doc and "atoms" not in doc:
        return fixture(doc["fixture"])
    atoms = [atom_from_json(a) for a in doc["atoms"]]
    dims = {a.dim for a in atoms}
    if len(dims) != 1 or ("dim" in doc and dims != {doc["dim"]}):
        raise SchemaError("atom dimensions disagree with each other or with 'dim'")
    return SquareUnion.build(atoms, provenance="input")


def norm_from_json(doc: dict) -> NormKind:
    return NormKind.parse(doc.get("norm", "linf"))


# ---------------------------------------------------------------- encoding


def point_json(p) -> list:
    return [fmt_q(c) for c in p]


def polytope_json(P: Polytope) -> list:
    return [point_json(v) for v in P.vertices]


def region_json(R: Region) -> dict:
    if R.is_point_set():
        return {"kind": "points", "points": [point_json(p.vertices[0]) for p in R.pieces]}
    if len(R.pieces) == 1:
        return {"kind": "polytope", "vertices": polytope_json(R.pieces[0])}
    return {"kind": "region", "pieces": [polytope_json(p) for p in R.pieces]}


def union_json(E: SquareUnion) -> dict:
    return {"dim": E.dim, "atoms": [region_json(a) for a in E.atoms], "provenance": E.provenance}


def squares_json(ms: MaximalSquareSet) -> list:
    out = []
    for k, (B, h) in enumerate(zip(ms.squares, ms.hidden)):
        entry = {"region": region_json(B), "hidden": bool(h)}
        if ms.families:
            entry["family"] = [[i + 1 for i in S] for S in ms.families[k]]
        out.append(entry)
    return out


def scalar_json(x):
    """Exact rationals as strings, floats as floats, None stays None."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, float):
        return x
    if isinstance(x, int):
        return fmt_q(x)
    try:
        return fmt_q(to_q(x))
    except TypeError:
        return x


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False)
