"""
JSON codecs for operators, channels, assemblages and verdicts.

Operators are stored as ``{"rows", "cols", "data"}`` with ``data`` the
row-major list of ``[re, im]`` pairs. Every object document carries a
``type`` tag so :func:`decode` can dispatch on it.
"""

import json
import logging
from importlib import resources
from typing import Any

import jsonschema
import numpy as np
from referencing import Registry, Resource

from channel_steering.channels import (
    Channel,
    ChannelExtension,
    Instrument,
    KrausSet,
    StinespringIsometry,
    Subchannel,
)
from channel_steering.errors import DimensionMismatchError, InvariantViolation
from channel_steering.linalg import Operator, as_operator
from channel_steering.steering import (
    ChannelAssemblage,
    MeasurementAssemblage,
    StateAssemblage,
    SteeringVerdict,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SCHEMA_KINDS = ("operator", "channel", "assemblage", "verdict", "result")


# --- operators ------------------------------------------------------------------


def encode_operator(m: Operator) -> dict[str, Any]:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def decode_operator(doc: dict[str, Any]) -> Operator:
    rows, cols = int(doc["rows"]), int(doc["cols"])
    data = doc["data"]
    if len(data) != rows * cols:
        raise DimensionMismatchError(f"operator declares {rows}x{cols} but holds {len(data)} entries")
    return as_operator(np.array([complex(re, im) for re, im in data]).reshape(rows, cols))


def _encode_rows(rows) -> list[list[dict[str, Any]]]:
    return [[encode_operator(m) for m in row] for row in rows]


def _decode_rows(rows) -> tuple[tuple[Operator, ...], ...]:
    return tuple(tuple(decode_operator(m) for m in row) for row in rows)


# --- channels ---------------------------------------------------------------------


def _channel_type(c: Subchannel) -> str:
    if isinstance(c, ChannelExtension):
        return "extension"
    if isinstance(c, Channel):
        return "channel"
    return "subchannel"


def encode_subchannel(c: Subchannel) -> dict[str, Any]:
    return {
        "type": _channel_type(c),
        "d_in": c.d_in,
        "d_out": list(c.d_out),
        "choi": encode_operator(c.choi),
    }


_CHANNEL_TYPES = {"subchannel": Subchannel, "channel": Channel, "extension": ChannelExtension}


def decode_subchannel(doc: dict[str, Any]) -> Subchannel:
    cls = _CHANNEL_TYPES[doc.get("type", "subchannel")]
    return cls(decode_operator(doc["choi"]), int(doc["d_in"]), tuple(doc["d_out"]))


def encode_kraus(k: KrausSet) -> dict[str, Any]:
    return {
        "type": "kraus",
        "d_out": list(k.d_out),
        "operators": [encode_operator(op) for op in k.operators],
    }


def decode_kraus(doc: dict[str, Any]) -> KrausSet:
    return KrausSet(tuple(decode_operator(op) for op in doc["operators"]), tuple(doc["d_out"]))


def encode_stinespring(iso: StinespringIsometry) -> dict[str, Any]:
    return {
        "type": "stinespring",
        "d_env": iso.d_env,
        "d_out": list(iso.d_out),
        "isometry": encode_operator(iso.v),
    }


def decode_stinespring(doc: dict[str, Any]) -> StinespringIsometry:
    return StinespringIsometry(decode_operator(doc["isometry"]), int(doc["d_env"]), tuple(doc["d_out"]))


def encode_instrument(inst: Instrument) -> dict[str, Any]:
    return {"type": "instrument", "members": [encode_subchannel(m) for m in inst.members]}


def decode_instrument(doc: dict[str, Any]) -> Instrument:
    return Instrument(tuple(decode_subchannel(m) for m in doc["members"]))


# --- assemblages ------------------------------------------------------------------


def encode_measurements(ma: MeasurementAssemblage) -> dict[str, Any]:
    return {"type": "measurements", "povms": _encode_rows(ma.povms)}


def decode_measurements(doc: dict[str, Any]) -> MeasurementAssemblage:
    return MeasurementAssemblage(_decode_rows(doc["povms"]))


def encode_state_assemblage(sa: StateAssemblage) -> dict[str, Any]:
    return {"type": "state-assemblage", "dims": list(sa.dims), "members": _encode_rows(sa.members)}


def decode_state_assemblage(doc: dict[str, Any]) -> StateAssemblage:
    return StateAssemblage(_decode_rows(doc["members"]), tuple(doc["dims"]))


def encode_channel_assemblage(ca: ChannelAssemblage) -> dict[str, Any]:
    return {
        "type": "channel-assemblage",
        "members": [[encode_subchannel(m) for m in row] for row in ca.members],
    }


def decode_channel_assemblage(doc: dict[str, Any]) -> ChannelAssemblage:
    return ChannelAssemblage(
        tuple(tuple(decode_subchannel(m) for m in row) for row in doc["members"])
    )


# --- verdicts ---------------------------------------------------------------------


def _finite(value: float | None) -> float | None:
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def json_safe(value: Any) -> Any:
    """Plain JSON values from numpy scalars and containers; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [json_safe(v) for v in value]
    if isinstance(value, bool | np.bool_):
        return bool(value)
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, int | np.integer):
        return int(value)
    return _finite(value)


def encode_verdict(v: SteeringVerdict) -> dict[str, Any]:
    return {
        "type": "verdict",
        "steerable": v.steerable,
        "value": _finite(v.value),
        "quantifier": v.quantifier,
        "boundary": v.boundary,
        "certified": v.certified,
        "model": None if v.model is None else [encode_operator(m) for m in v.model],
        "strategies": None if v.strategies is None else [list(s) for s in v.strategies],
        "model_error": _finite(v.model_error),
        "witness": None if v.witness is None else _encode_rows(v.witness),
        "witness_value": _finite(v.witness_value),
        "witness_bound": _finite(v.witness_bound),
        "diagnostics": json_safe(v.diagnostics),
    }


def decode_verdict(doc: dict[str, Any]) -> SteeringVerdict:
    return SteeringVerdict(
        steerable=bool(doc["steerable"]),
        value=float(doc["value"]),
        quantifier=doc["quantifier"],
        model=None if doc.get("model") is None else tuple(decode_operator(m) for m in doc["model"]),
        strategies=None if doc.get("strategies") is None else tuple(tuple(s) for s in doc["strategies"]),
        witness=None if doc.get("witness") is None else _decode_rows(doc["witness"]),
        witness_value=doc.get("witness_value"),
        witness_bound=doc.get("witness_bound"),
        model_error=doc.get("model_error"),
        boundary=bool(doc.get("boundary", False)),
        diagnostics=doc.get("diagnostics") or {},
    )


# --- dispatch ---------------------------------------------------------------------


_ENCODERS = (
    (ChannelAssemblage, encode_channel_assemblage),
    (StateAssemblage, encode_state_assemblage),
    (MeasurementAssemblage, encode_measurements),
    (SteeringVerdict, encode_verdict),
    (Instrument, encode_instrument),
    (KrausSet, encode_kraus),
    (StinespringIsometry, encode_stinespring),
    (Subchannel, encode_subchannel),
)

_DECODERS = {
    "subchannel": decode_subchannel,
    "channel": decode_subchannel,
    "extension": decode_subchannel,
    "kraus": decode_kraus,
    "stinespring": decode_stinespring,
    "instrument": decode_instrument,
    "measurements": decode_measurements,
    "state-assemblage": decode_state_assemblage,
    "channel-assemblage": decode_channel_assemblage,
    "verdict": decode_verdict,
}


def encode(obj: Any) -> dict[str, Any]:
    """Encode any domain object (or a bare operator) to its JSON document."""
    for cls, encoder in _ENCODERS:
        if isinstance(obj, cls):
            return encoder(obj)
    if isinstance(obj, np.ndarray):
        return encode_operator(obj)
    raise TypeError(f"no JSON encoding for {type(obj).__name__}")


def decode(doc: dict[str, Any]) -> Any:
    """
    Decode a document produced by :func:`encode`.

    Raises:
        InvariantViolation: If the document has an unknown type tag
    """
    kind = doc.get("type")
    if kind is None and "rows" in doc:
        return decode_operator(doc)
    if kind not in _DECODERS:
        raise InvariantViolation("document-type", f"unknown document type {kind!r}")
    return _DECODERS[kind](doc)


def dumps(doc: dict[str, Any], indent: int | None = 2) -> str:
    """Deterministic JSON: sorted keys, no NaN."""
    return json.dumps(doc, indent=indent, sort_keys=True, allow_nan=False) + "\n"


# --- schemas ----------------------------------------------------------------------


def load_schema(kind: str) -> dict[str, Any]:
    if kind not in SCHEMA_KINDS:
        raise ValueError(f"unknown schema kind {kind!r}; expected one of {SCHEMA_KINDS}")
    text = resources.files("channel_steering.schemas").joinpath(f"{kind}.json").read_text("utf-8")
    return json.loads(text)


def _registry() -> Registry:
    return Registry().with_resources(
        (schema["$id"], Resource.from_contents(schema)) for schema in map(load_schema, SCHEMA_KINDS)
    )


def validate_document(doc: dict[str, Any], kind: str) -> None:
    """
    Validate a document against its published schema.

    Raises:
        jsonschema.ValidationError: If the document does not conform
    """
    schema = load_schema(kind)
    jsonschema.Draft202012Validator(schema, registry=_registry()).validate(doc)
