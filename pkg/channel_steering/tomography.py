"""
Simulated subchannel tomography.

Bob reconstructs the channel assemblage {Lambda_a|x} of an extension from the
outputs he receives together with Alice's announced outcomes, either by
feeding half of a maximally entangled state (ancilla mode) or by feeding a
spanning set of states on C and inverting linearly (product mode).
Statistics are exact.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from channel_steering.channels import ChannelExtension, Subchannel, apply
from channel_steering.errors import DimensionMismatchError, InvariantViolation, RankDeficientProbeError
from channel_steering.linalg import (
    Operator,
    as_operator,
    frozen,
    ket,
    max_entangled,
    partial_trace,
    permute_subsystems,
    projector,
)
from channel_steering.settings import get_settings
from channel_steering.steering import ChannelAssemblage, MeasurementAssemblage

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-10
ZERO_PROBABILITY = 1e-14

Outcome = tuple[float, Operator]


@dataclass(frozen=True)
class ExtensionBlackBox:
    """
    Evaluator hiding an extension and Alice's measurements.

    Calling it with a density operator on C (x) D and a setting x returns, for
    each outcome a, the probability of a and Bob's conditional state on B (x) D.
    """

    extension: ChannelExtension
    measurements: MeasurementAssemblage

    def __post_init__(self):
        if self.measurements.dim != self.extension.d_a:
            raise DimensionMismatchError(
                f"POVMs act on dimension {self.measurements.dim}, A has {self.extension.d_a}"
            )

    @property
    def d_in(self) -> int:
        return self.extension.d_in

    @property
    def d_out(self) -> int:
        return self.extension.d_b

    def __call__(self, rho: Operator, x: int, ancilla_dim: int = 1) -> list[Outcome]:
        e = self.extension
        out = apply(e, rho, ancilla_dim)
        dims = (e.d_a, e.d_b, ancilla_dim)
        results = []
        for effect in self.measurements.povms[x]:
            lifted = np.kron(effect, np.eye(e.d_b * ancilla_dim))
            unnormalized = partial_trace(lifted @ out, dims, [1, 2])
            p = float(np.trace(unnormalized).real)
            if p > ZERO_PROBABILITY:
                results.append((p, unnormalized / p))
            else:
                dim = e.d_b * ancilla_dim
                results.append((0.0, np.eye(dim, dtype=complex) / dim))
        return results


@dataclass(frozen=True)
class ProbeSet:
    """Input density operators on C for product-mode probing."""

    states: tuple[Operator, ...]

    def __post_init__(self):
        states = tuple(frozen(as_operator(s)) for s in self.states)
        if not states:
            raise DimensionMismatchError("a probe set needs at least one state")
        d = states[0].shape[0]
        for i, s in enumerate(states):
            if s.shape != (d, d):
                raise DimensionMismatchError(f"probe {i} has shape {s.shape}, expected ({d}, {d})")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def design_matrix(self) -> np.ndarray:
        """Row j holds the entries of probe j in row-major order."""
        return np.stack([s.reshape(-1) for s in self.states])


def default_probes(d: int) -> ProbeSet:
    """
    |j>, (|j> + |k>)/sqrt2 and (|j> + i|k>)/sqrt2 for j < k.

    For a qubit this is {|0>, |1>, |+>, |+i>}.
    """
    vectors = [ket(j, d) for j in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            vectors.append((ket(j, d) + ket(k, d)) / np.sqrt(2))
            vectors.append((ket(j, d) + 1j * ket(k, d)) / np.sqrt(2))
    return ProbeSet(tuple(projector(v) for v in vectors))


def steered_inputs(effects: Sequence[Operator]) -> ProbeSet:
    """
    States prepared on C when C' of psi+ is measured and effect N is found.

    Tr_C'[(I (x) N) psi+] = N^T / d, so each input is N^T / Tr N.
    """
    states = []
    for n in effects:
        n = as_operator(n)
        states.append(n.T / np.trace(n).real)
    return ProbeSet(tuple(states))


def _unit(i: int, k: int, d: int) -> Operator:
    e = np.zeros((d, d), dtype=complex)
    e[i, k] = 1.0
    return e


def _check_normalization(outcomes: list[Outcome], x: int) -> None:
    total = sum(p for p, _ in outcomes)
    if abs(total - 1) > NORMALIZATION_TOLERANCE:
        raise InvariantViolation("probability-normalization", f"setting {x} probabilities sum to {total:.12g}")


def _require_shape(outcomes: list[Outcome], a_count: int, x: int) -> None:
    if len(outcomes) != a_count:
        raise DimensionMismatchError(f"setting {x} returned {len(outcomes)} outcomes, expected {a_count}")


def reconstruct_ancilla(bb: ExtensionBlackBox, x_count: int, a_count: int) -> ChannelAssemblage:
    """
    Ancilla-assisted reconstruction from a single psi+ input on C (x) C'.

    The unnormalized conditional output p(a|x) rho_a|x on B (x) C' is the Choi
    operator of Lambda_a|x after reordering to C' (x) B.

    Raises:
        InvariantViolation: If a setting's probabilities do not sum to one
    """
    d, d_b = bb.d_in, bb.d_out
    psi = max_entangled(d)
    members = []
    for x in range(x_count):
        outcomes = bb(psi, x, ancilla_dim=d)
        _require_shape(outcomes, a_count, x)
        _check_normalization(outcomes, x)
        row = []
        for p, rho in outcomes:
            choi = permute_subsystems(p * rho, (d_b, d), [1, 0])
            row.append(Subchannel(choi, d, (d_b,)))
        members.append(tuple(row))
    logger.info(f"Ancilla reconstruction: {x_count} settings x {a_count} outcomes")
    return ChannelAssemblage(tuple(members))


def reconstruct_products(
    bb: ExtensionBlackBox, probes: ProbeSet, x_count: int, a_count: int
) -> ChannelAssemblage:
    """
    Multi-input reconstruction by linear inversion.

    With G the design matrix of the probes, the images Y_ik = Lambda(|i><k|)/d
    solve G Y = R/d in the least-squares sense, and J = sum_ik |i><k| (x) Y_ik.

    Raises:
        DimensionMismatchError: If the probes do not act on C
        RankDeficientProbeError: If the probes do not span the operators on C
        InvariantViolation: If a setting's probabilities do not sum to one
    """
    d, d_b = bb.d_in, bb.d_out
    if probes.dim != d:
        raise DimensionMismatchError(f"probes act on dimension {probes.dim}, C has {d}")

    g = probes.design_matrix()
    r = scipy.linalg.qr(g, mode="r", pivoting=True)[0]
    diagonal = np.abs(np.diag(r))
    threshold = get_settings().tolerances.probe_rank * max(1.0, float(diagonal[0]))
    rank = int(np.sum(diagonal > threshold))
    if rank < d * d:
        raise RankDeficientProbeError(rank, d * d)

    responses = [[bb(state, x) for state in probes.states] for x in range(x_count)]
    members = []
    for x, per_probe in enumerate(responses):
        for outcomes in per_probe:
            _require_shape(outcomes, a_count, x)
            _check_normalization(outcomes, x)
        row = []
        for a in range(a_count):
            images = np.stack([(p * rho).reshape(-1) for p, rho in (o[a] for o in per_probe)]) / d
            y, *_ = scipy.linalg.lstsq(g, images, lapack_driver="gelsy")
            choi = sum(
                np.kron(_unit(i, k, d), y[i * d + k].reshape(d_b, d_b)) for i in range(d) for k in range(d)
            )
            row.append(Subchannel(choi, d, (d_b,)))
        members.append(tuple(row))
    logger.info(f"Product reconstruction: {len(probes.states)} probes, rank {rank}")
    return ChannelAssemblage(tuple(members))
