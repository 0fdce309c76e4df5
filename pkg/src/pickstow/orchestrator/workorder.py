"""Work-order documents: which items sit in which bin and what to move."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import jsonschema

from ..errors import ConsistencyError, SchemaError
from ..perception.catalog import ITEM_IDS
from ..rack import BIN_NAMES

MAX_ITEMS_PER_BIN = 10

_ITEM = {"type": "string", "enum": list(ITEM_IDS)}
_BIN = {"type": "string", "enum": list(BIN_NAMES)}

SCHEMA = {
    "type": "object",
    "required": ["mode", "bin_contents"],
    "properties": {
        "mode": {"enum": ["pick", "stow"]},
        "bin_contents": {
            "type": "object",
            "propertyNames": _BIN,
            "additionalProperties": {"type": "array", "items": _ITEM,
                                     "maxItems": MAX_ITEMS_PER_BIN},
        },
        "tote_contents": {"type": "array", "items": _ITEM},
        "work_order": {
            "type": "array",
            "items": {
                "anyOf": [
                    _ITEM,
                    {"type": "object", "required": ["item"],
                     "properties": {"bin": _BIN, "item": _ITEM},
                     "additionalProperties": False},
                ]
            },
        },
    },
    "allOf": [
        {"if": {"properties": {"mode": {"const": "pick"}}},
         "then": {"required": ["work_order"],
                  "properties": {
                      "bin_contents": {"additionalProperties": {"minItems": 1}},
                      "work_order": {"items": {"type": "object", "required": ["bin", "item"]}},
                  }}},
    ],
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass(frozen=True)
class PickTarget:
    bin: str
    item: str


@dataclass(frozen=True)
class WorkOrder:
    mode: Literal["pick", "stow"]
    bin_contents: dict[str, tuple[str, ...]]
    tote_contents: tuple[str, ...]
    targets: tuple  # PickTarget entries (pick) or item ids (stow)

    def to_dict(self) -> dict:
        if self.mode == "pick":
            work = [{"bin": t.bin, "item": t.item} for t in self.targets]
        else:
            work = list(self.targets)
        return {"mode": self.mode,
                "bin_contents": {b: list(v) for b, v in self.bin_contents.items()},
                "tote_contents": list(self.tote_contents), "work_order": work}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _schema_error(doc) -> None:
    err = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(doc))
    if err is not None:
        raise SchemaError(err.json_path, err.message)


def parse_work_order(text: str) -> WorkOrder:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    _schema_error(doc)

    mode = doc["mode"]
    bins = {b: tuple(doc["bin_contents"].get(b, ())) for b in BIN_NAMES
            if b in doc["bin_contents"]}
    tote = tuple(doc.get("tote_contents", ()))
    if mode == "pick":
        targets = tuple(PickTarget(t["bin"], t["item"]) for t in doc["work_order"])
        for t in targets:
            if t.item not in bins.get(t.bin, ()):
                raise ConsistencyError(f"{t.item} is not listed in {t.bin}")
    else:
        raw = doc.get("work_order", list(tote))
        targets = tuple(t if isinstance(t, str) else t["item"] for t in raw)
        for item in targets:
            if targets.count(item) > tote.count(item):
                raise ConsistencyError(f"{item} is not (often enough) in the tote")
    return WorkOrder(mode, bins, tote, targets)


def load_work_order(path) -> WorkOrder:
    with open(path) as fh:
        return parse_work_order(fh.read())
