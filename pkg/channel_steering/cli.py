#!/usr/bin/env python3
"""
Channel steering command-line tool.

Every run prints (or writes with ``--output``) one JSON result document with
a ``status`` field; logging goes to stderr.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from channel_steering import __version__, commands
from channel_steering.demos import DEMOS
from channel_steering.errors import (
    DimensionMismatchError,
    InvariantViolation,
    NotHermitianError,
    RankDeficientProbeError,
    SolverFailure,
    StrategyCapExceeded,
    TheoremMismatchError,
)
from channel_steering.settings import get_settings, initialize_settings, output_path
from channel_steering.steering import INPUT_MODES, NOISE_MODELS, QUANTIFIERS
from channel_steering.utils.file import write_atomic
from channel_steering.utils.serialize import SCHEMA_VERSION, dumps, json_safe, validate_document

# Setup logging
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

VALIDATION_ERRORS = (
    InvariantViolation,
    DimensionMismatchError,
    NotHermitianError,
    RankDeficientProbeError,
    StrategyCapExceeded,
)
SOLVER_ERRORS = (SolverFailure, TheoremMismatchError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steering", description="Steering of quantum channel extensions")
    parser.add_argument("--config", default="config.yaml", help="Path to config file (default: config.yaml)")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose debug logging")
    parser.add_argument("--tol", type=float, help="Override the solver tolerance")
    parser.add_argument("--seed", type=int, default=0, help="Seed for random generators (default: 0)")
    parser.add_argument("--output", help="Write the result document here instead of stdout")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="Convert between Kraus, Choi and Stinespring forms")
    p.add_argument("--from", dest="from_", choices=("kraus", "choi", "stinespring"), required=True)
    p.add_argument("--to", choices=("kraus", "choi", "stinespring"), required=True)
    p.add_argument("--input", help="Channel document (default: random channel)")
    p.add_argument("--dims", default="2,2", help="d_in,d_out of the random channel")
    p.add_argument("--kraus-rank", type=int, default=2)
    p.set_defaults(handler=commands.convert)

    def extension_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--extension", required=True, help="Extension document or random:dc,da,db")
        p.add_argument("--povms", required=True, help="Measurement document, pauli:xz, basis or random:m,k")

    p = sub.add_parser("assemblage", help="Channel assemblage induced by measurements on A")
    extension_flags(p)
    p.set_defaults(handler=commands.assemblage)

    p = sub.add_parser("certify", help="Decide unsteerability with a certificate")
    p.add_argument("--assemblage", required=True)
    p.add_argument("--channel-form", action="store_true", help="Input is a channel assemblage")
    p.set_defaults(handler=commands.certify)

    for verb in QUANTIFIERS:
        p = sub.add_parser(verb, help=f"Steering {verb} of an assemblage")
        p.add_argument("--assemblage", required=True)
        p.add_argument("--channel-form", action="store_true", help="Input is a channel assemblage")
        if verb == "robustness":
            p.add_argument("--noise", choices=NOISE_MODELS)
        p.set_defaults(handler=commands.quantify)

    p = sub.add_parser("extension-quantifier", help="Steerability of an extension")
    extension_flags(p)
    p.add_argument("--mode", choices=INPUT_MODES, default="choi")
    p.add_argument("--measure", choices=QUANTIFIERS, default="robustness")
    p.set_defaults(handler=commands.extension_quantifier)

    p = sub.add_parser("verify-theorem1", help="Channel and Choi-state verdicts must agree")
    extension_flags(p)
    p.set_defaults(handler=commands.theorem1)

    p = sub.add_parser("complementary", help="Generalized complementary channel (A marginal)")
    p.add_argument("--extension", required=True)
    p.add_argument("--eb-check", action="store_true", help="Also run the PPT entanglement-breaking test")
    p.set_defaults(handler=commands.complementary)

    p = sub.add_parser("demo", help="Self-contained scenarios")
    p.add_argument("name", choices=sorted(DEMOS))
    p.set_defaults(handler=commands.demo)

    p = sub.add_parser("tomography", help="Simulated subchannel tomography")
    extension_flags(p)
    p.add_argument("--mode", choices=("ancilla", "products"), default="ancilla")
    p.add_argument("--probes", choices=("default", "orthogonal"), default="default")
    p.set_defaults(handler=commands.reconstruct)

    p = sub.add_parser("sweep", help="Quantifier along a parameter (CSV-ready rows)")
    p.add_argument("--param", choices=commands.SWEEP_FAMILIES, required=True)
    p.add_argument("--range", required=True, help="a:b:n")
    p.add_argument("--measure", choices=QUANTIFIERS, default="robustness")
    p.add_argument("--assemblage", help="Base assemblage for the noise sweep")
    p.add_argument("--channel-form", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="Also write the rows as CSV")
    p.set_defaults(handler=commands.sweep)

    return parser


def _document(command: str, **fields: Any) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "channel-steering",
        "version": __version__,
        "command": command,
        **fields,
    }


def _error(command: str, e: Exception) -> dict[str, Any]:
    error = {
        "class": type(e).__name__,
        "message": str(e),
        "invariant": getattr(e, "invariant", None),
    }
    if isinstance(e, SolverFailure):
        error["diagnostics"] = json_safe(e.diagnostics)
    return _document(command, status="error", error=error)


def _emit(doc: dict[str, Any], output: str | None) -> None:
    validate_document(doc, "result")
    text = dumps(doc, indent=get_settings().output.indent)
    if output:
        write_atomic(output_path(output), text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    """Parse, dispatch and emit; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error(f"Usage: {e}")
        _emit(_error("usage", e), None)
        return EXIT_USAGE

    if args.verbose:
        logging.getLogger("channel_steering").setLevel(logging.DEBUG)

    initialize_settings(args.config, tol=args.tol)

    try:
        result = args.handler(args)
    except VALIDATION_ERRORS as e:
        logger.error(f"Validation failed: {e}")
        _emit(_error(args.command, e), args.output)
        return EXIT_VALIDATION
    except SOLVER_ERRORS as e:
        logger.error(f"Solver failed: {e}")
        _emit(_error(args.command, e), args.output)
        return EXIT_SOLVER
    except (OSError, ValueError) as e:
        logger.error(f"Bad input: {e}")
        _emit(_error(args.command, e), args.output)
        return EXIT_USAGE

    _emit(_document(args.command, status="ok", result=json_safe(result)), args.output)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
