"""
Command handlers behind the ``steering`` CLI.

Each handler takes the parsed arguments and returns the ``result`` part of
the result document. Inputs are JSON documents produced by
``utils.serialize`` or one of the inline generators accepted by
:func:`load_extension` and :func:`load_measurements`.
"""

import argparse
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import jsonschema
import numpy as np

from channel_steering import channels, demos, tomography
from channel_steering.errors import DimensionMismatchError, InvariantViolation, SolverFailure
from channel_steering.linalg import fro
from channel_steering.settings import get_settings, output_path
from channel_steering.steering import (
    QUANTIFIER_FUNCTIONS,
    ChannelAssemblage,
    MeasurementAssemblage,
    StateAssemblage,
    basis_measurement,
    channel_quantifier,
    choi_state_assemblage,
    induced_channel_assemblage,
    mix_with_noise,
    pauli_measurements,
    random_measurement_assemblage,
    search_pure_inputs,
    steering_robustness,
    test_unsteerable,
    unsteerable_realization,
    verify_theorem1,
)
from channel_steering.utils.file import read_json, write_atomic
from channel_steering.utils.serialize import (
    decode,
    encode,
    encode_verdict,
    validate_document,
)

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("parameter", "value", "status", "gap", "iterations")
# "gamma" is the amplitude damping parameter
SWEEP_FAMILIES = ("gamma", "amplitude-damping", "dephasing", "noise")


# --- input loading ----------------------------------------------------------------


def _parse_dims(text: str) -> list[int]:
    try:
        return [int(d) for d in text.split(",")]
    except ValueError as e:
        raise DimensionMismatchError(f"cannot parse dimensions {text!r}") from e


def _load_document(path: str, kind: str) -> Any:
    doc = read_json(path)
    try:
        validate_document(doc, kind)
    except jsonschema.ValidationError as e:
        raise InvariantViolation("document-schema", f"{path}: {e.message}") from e
    return decode(doc)


def load_extension(source: str, seed: int | None) -> channels.ChannelExtension:
    """
    Extension from a JSON file or an inline generator.

    Generators: ``random:dc,da,db`` (Haar isometric), ``dephasing-dilation``,
    ``fixed-output``.
    """
    if source.startswith("random:"):
        d_c, d_a, d_b = _parse_dims(source.removeprefix("random:"))
        return channels.random_extension(d_c, d_a, d_b, seed)
    if source == "dephasing-dilation":
        return channels.extension_from_isometry(
            channels.stinespring_from_kraus(channels.dephasing_kraus(0.5))
        )
    if source == "fixed-output":
        return channels.fixed_output_extension(demos.FIXED_OUTPUT_STATE)
    e = _load_document(source, "channel")
    if not isinstance(e, channels.ChannelExtension):
        raise InvariantViolation("document-type", f"{source} does not hold an extension")
    return e


def load_measurements(source: str, dim: int, seed: int | None) -> MeasurementAssemblage:
    """
    POVMs from a JSON file or an inline generator.

    Generators: ``pauli:xz`` (any subset of x, y, z), ``basis``,
    ``random:settings,outcomes``.
    """
    if source.startswith("pauli:"):
        return pauli_measurements(source.removeprefix("pauli:"))
    if source == "basis":
        return basis_measurement(dim)
    if source.startswith("random:"):
        settings, outcomes = _parse_dims(source.removeprefix("random:"))
        return random_measurement_assemblage(dim, settings, outcomes, seed)
    ma = _load_document(source, "assemblage")
    if not isinstance(ma, MeasurementAssemblage):
        raise InvariantViolation("document-type", f"{source} does not hold a measurement assemblage")
    return ma


def load_state_assemblage(path: str, channel_form: bool = False) -> StateAssemblage:
    doc = _load_document(path, "assemblage")
    if channel_form or isinstance(doc, ChannelAssemblage):
        if not isinstance(doc, ChannelAssemblage):
            raise InvariantViolation("document-type", f"{path} does not hold a channel assemblage")
        return choi_state_assemblage(doc)
    if not isinstance(doc, StateAssemblage):
        raise InvariantViolation("document-type", f"{path} does not hold a state assemblage")
    return doc


def _extension_and_measurements(args: argparse.Namespace):
    e = load_extension(args.extension, args.seed)
    return e, load_measurements(args.povms, e.d_a, args.seed)


# --- handlers ---------------------------------------------------------------------


def _as_choi(obj: Any) -> channels.Channel:
    if isinstance(obj, channels.KrausSet):
        return channels.choi_from_kraus(obj)
    if isinstance(obj, channels.StinespringIsometry):
        return channels.marginal(channels.extension_from_isometry(obj), "B")
    if isinstance(obj, channels.Channel):
        return channels.Channel(obj.choi, obj.d_in, (obj.out_dim,))
    raise InvariantViolation("document-type", f"{type(obj).__name__} is not a channel representation")


def _convert(c: channels.Channel, target: str) -> Any:
    if target == "choi":
        return c
    kraus = channels.kraus_from_choi(c)
    if target == "kraus":
        return kraus
    return channels.stinespring_from_kraus(kraus)


def convert(args: argparse.Namespace) -> dict[str, Any]:
    if args.input:
        source = _load_document(args.input, "channel")
    else:
        d_in, d_out = _parse_dims(args.dims)
        channel = channels.random_channel(d_in, d_out, args.kraus_rank, args.seed)
        source = _convert(channel, args.from_)
    choi = _as_choi(source)
    target = _convert(choi, args.to)
    drift = fro(_as_choi(target).choi - choi.choi)
    logger.info(f"Converted {args.from_} -> {args.to}, round-trip drift {drift:.3e}")
    if drift > get_settings().tolerances.round_trip:
        raise InvariantViolation("round_trip", f"{args.from_} -> {args.to} drifts by {drift:.3e}")
    return {
        "from": args.from_,
        "to": args.to,
        "source": encode(source),
        "converted": encode(target),
        "round_trip_drift": drift,
    }


def assemblage(args: argparse.Namespace) -> dict[str, Any]:
    e, ma = _extension_and_measurements(args)
    ca = induced_channel_assemblage(e, ma)
    channel = channels.marginal(e, "B").choi
    drift = max(fro(sum(m.choi for m in row) - channel) for row in ca.members)
    return {"assemblage": encode(ca), "no_signalling_drift": drift}


def certify(args: argparse.Namespace) -> dict[str, Any]:
    sa = load_state_assemblage(args.assemblage, args.channel_form)
    verdict = test_unsteerable(sa)
    result = {"verdict": encode_verdict(verdict)}
    if args.channel_form and not verdict.steerable and verdict.model is not None:
        realization = unsteerable_realization(sa, verdict)
        result["realization"] = {
            "extension": encode(realization.extension),
            "measurements": encode(realization.measurements),
            "deviation": realization.deviation,
        }
    return result


def quantify(args: argparse.Namespace) -> dict[str, Any]:
    sa = load_state_assemblage(args.assemblage, args.channel_form)
    if args.command == "robustness":
        verdict = steering_robustness(sa, args.noise)
    else:
        verdict = QUANTIFIER_FUNCTIONS["weight"](sa)
    return {"measure": args.command, "value": verdict.value, "verdict": encode_verdict(verdict)}


def extension_quantifier(args: argparse.Namespace) -> dict[str, Any]:
    e, ma = _extension_and_measurements(args)
    result: dict[str, Any] = {"measure": args.measure, "mode": args.mode}
    if args.mode == "search":
        search = search_pure_inputs(induced_channel_assemblage(e, ma), args.measure)
        result |= {
            "value": search.value,
            "choi_value": search.choi_value,
            "schmidt": list(search.schmidt),
            "evaluations": search.evaluations,
        }
    else:
        result["value"] = channel_quantifier(e, ma, args.measure, "choi")
    return result


def theorem1(args: argparse.Namespace) -> dict[str, Any]:
    e, ma = _extension_and_measurements(args)
    report = verify_theorem1(e, ma)
    return {
        "agree": report.agree,
        "difference": report.difference,
        "channel_path": encode_verdict(report.channel_path),
        "state_path": encode_verdict(report.state_path),
    }


def complementary(args: argparse.Namespace) -> dict[str, Any]:
    e = load_extension(args.extension, args.seed)
    c = channels.complementary(e)
    result = {"complementary": encode(c)}
    if args.eb_check:
        result["eb_status"] = str(channels.eb_check(c))
    return result


def demo(args: argparse.Namespace) -> dict[str, Any]:
    return demos.DEMOS[args.name](args.seed)


def reconstruct(args: argparse.Namespace) -> dict[str, Any]:
    e, ma = _extension_and_measurements(args)
    box = tomography.ExtensionBlackBox(e, ma)
    outcomes = max(ma.outcomes)
    if min(ma.outcomes) != outcomes:
        raise DimensionMismatchError("tomography needs the same number of outcomes for every setting")
    if args.mode == "ancilla":
        ca = tomography.reconstruct_ancilla(box, ma.settings, outcomes)
    else:
        probes = tomography.default_probes(e.d_in)
        if args.probes == "orthogonal":
            probes = tomography.ProbeSet(probes.states[: e.d_in])
        ca = tomography.reconstruct_products(box, probes, ma.settings, outcomes)
    direct = induced_channel_assemblage(e, ma)
    error = max(
        fro(r.choi - d.choi)
        for row_r, row_d in zip(ca.members, direct.members, strict=True)
        for r, d in zip(row_r, row_d, strict=True)
    )
    return {"mode": args.mode, "assemblage": encode(ca), "max_error": error}


# --- sweeps -----------------------------------------------------------------------


def parse_range(text: str) -> np.ndarray:
    """``a:b:n`` -> n evenly spaced points from a to b inclusive."""
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as e:
        raise ValueError(f"range must look like a:b:n, got {text!r}") from e


def _sweep_assemblage(family: str, parameter: float, base: StateAssemblage | None) -> StateAssemblage:
    xz = pauli_measurements("xz")
    if family == "noise":
        return mix_with_noise(base, parameter)
    if family in ("gamma", "amplitude-damping"):
        kraus = channels.amplitude_damping_kraus(parameter)
    else:
        kraus = channels.dephasing_kraus(parameter)
    e = channels.extension_from_isometry(channels.stinespring_from_kraus(kraus))
    if e.d_a != 2:
        raise DimensionMismatchError(f"sweep family {family} needs a qubit environment")
    return choi_state_assemblage(induced_channel_assemblage(e, xz))


def _sweep_row(family: str, measure: str, parameter: float, base) -> dict[str, Any]:
    try:
        verdict = QUANTIFIER_FUNCTIONS[measure](_sweep_assemblage(family, parameter, base))
    except SolverFailure as e:
        logger.warning(f"Sweep point {parameter:.6g} failed: {e}")
        return {
            "parameter": float(parameter),
            "value": None,
            "status": e.status,
            "gap": e.diagnostics.get("gap"),
            "iterations": e.diagnostics.get("iterations"),
        }
    return {
        "parameter": float(parameter),
        "value": verdict.value,
        "status": "steerable" if verdict.steerable else "unsteerable",
        "gap": verdict.diagnostics.get("gap"),
        "iterations": verdict.diagnostics.get("iterations"),
    }


def sweep_rows(
    family: str, measure: str, parameters: np.ndarray, base: StateAssemblage | None = None, workers: int = 1
) -> list[dict[str, Any]]:
    """Quantifier along a parameter; rows ordered by parameter whatever the completion order."""
    if family not in SWEEP_FAMILIES:
        raise ValueError(f"family must be one of {SWEEP_FAMILIES}, got {family!r}")
    if family == "noise" and base is None:
        base = _sweep_assemblage("dephasing", 0.5, None)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda p: _sweep_row(family, measure, p, base), parameters))
    return sorted(rows, key=lambda row: row["parameter"])


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row[k] is None else row[k]) for k in SWEEP_COLUMNS})
    return buffer.getvalue()


def sweep(args: argparse.Namespace) -> dict[str, Any]:
    base = load_state_assemblage(args.assemblage, args.channel_form) if args.assemblage else None
    rows = sweep_rows(args.param, args.measure, parse_range(args.range), base, args.workers)
    if args.csv:
        write_atomic(output_path(args.csv), rows_to_csv(rows).encode("utf-8"))
    logger.info(f"Sweep of {args.param}: {len(rows)} points")
    return {"param": args.param, "measure": args.measure, "columns": list(SWEEP_COLUMNS), "rows": rows}
