"""
Quantum channels, instruments and channel extensions.

Every map is stored as its Choi operator J = (id (x) Lambda)(psi+) with the
unit-trace maximally entangled state psi+ = (1/d) sum_ij |ii><jj| and the
input copy C' as the first tensor factor. Unnormalized conventions differ by
a factor d_in. Extensions C -> A (x) B keep the factor order (C', A, B).
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from math import prod

import numpy as np

from channel_steering import samplers
from channel_steering.errors import DimensionMismatchError, InvariantViolation
from channel_steering.linalg import (
    PAULI,
    DimSpec,
    Operator,
    as_operator,
    dims_of,
    eig_hermitian,
    eigvalsh,
    frozen,
    hermitian_part,
    hermiticity_error,
    ket,
    kron,
    max_entangled,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    projector,
)
from channel_steering.samplers import Seed
from channel_steering.settings import get_settings

logger = logging.getLogger(__name__)

# Dimension product up to which PPT implies a separable Choi operator
PPT_SUFFICIENT_DIMENSION = 6


def _out_spec(d_out: int | Sequence[int]) -> DimSpec:
    return (int(d_out),) if np.isscalar(d_out) else tuple(int(d) for d in d_out)


@dataclass(frozen=True)
class Subchannel:
    """Completely positive, trace-non-increasing map given by its Choi operator."""

    choi: Operator
    d_in: int
    d_out: DimSpec

    def __post_init__(self):
        tol = get_settings().tolerances
        choi = as_operator(self.choi)
        d_out = _out_spec(self.d_out)
        dims_of(choi, (self.d_in, *d_out))
        if hermiticity_error(choi) > tol.psd:
            raise InvariantViolation("hermitian-choi", "Choi operator is not Hermitian")
        choi = hermitian_part(choi)
        lowest = min_eigenvalue(choi)
        if lowest < -tol.psd:
            raise InvariantViolation(
                "complete-positivity", f"Choi operator has eigenvalue {lowest:.3e}"
            )
        object.__setattr__(self, "choi", frozen(choi))
        object.__setattr__(self, "d_out", d_out)
        object.__setattr__(self, "d_in", int(self.d_in))
        self._check_normalization(partial_trace(choi, self.dims, [0]))

    def _check_normalization(self, reduced: Operator) -> None:
        excess = float(eigvalsh(reduced)[-1]) - 1.0 / self.d_in
        if excess > get_settings().tolerances.psd:
            raise InvariantViolation("trace-non-increasing", f"input marginal exceeds I/d by {excess:.3e}")

    @property
    def out_dim(self) -> int:
        return prod(self.d_out)

    @property
    def dims(self) -> DimSpec:
        return (self.d_in, *self.d_out)


@dataclass(frozen=True)
class Channel(Subchannel):
    """Completely positive trace-preserving map; Tr_out J = I/d_in."""

    def _check_normalization(self, reduced: Operator) -> None:
        drift = float(np.max(np.abs(reduced - np.eye(self.d_in) / self.d_in)))
        if drift > get_settings().tolerances.psd:
            raise InvariantViolation("trace-preservation", f"input marginal deviates from I/d by {drift:.3e}")


@dataclass(frozen=True)
class ChannelExtension(Channel):
    """Channel C -> A (x) B with outputs declared as (d_A, d_B)."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.d_out) != 2:
            raise DimensionMismatchError(f"an extension needs outputs (d_A, d_B), got {self.d_out}")

    @property
    def d_a(self) -> int:
        return self.d_out[0]

    @property
    def d_b(self) -> int:
        return self.d_out[1]


@dataclass(frozen=True)
class KrausSet:
    """Operators K_i: C -> out with sum K_i^dag K_i <= I."""

    operators: tuple[Operator, ...]
    d_out: DimSpec | None = None

    def __post_init__(self):
        ops = tuple(frozen(k) for k in self.operators)
        if not ops:
            raise DimensionMismatchError("a Kraus set needs at least one operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionMismatchError(f"Kraus operators of mixed shapes {[k.shape for k in ops]}")
        d_out = (shape[0],) if self.d_out is None else _out_spec(self.d_out)
        if prod(d_out) != shape[0]:
            raise DimensionMismatchError(f"output dims {d_out} do not match {shape[0]} rows")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "d_out", d_out)

        excess = float(eigvalsh(self.completeness())[-1]) - 1.0
        if excess > get_settings().tolerances.psd:
            raise InvariantViolation("trace-non-increasing", f"sum K^dag K exceeds I by {excess:.3e}")

    @property
    def d_in(self) -> int:
        return self.operators[0].shape[1]

    def __len__(self) -> int:
        return len(self.operators)

    def completeness(self) -> Operator:
        return sum(k.conj().T @ k for k in self.operators)

    def is_trace_preserving(self, tol: float | None = None) -> bool:
        tol = get_settings().tolerances.psd if tol is None else tol
        return float(np.max(np.abs(self.completeness() - np.eye(self.d_in)))) <= tol


@dataclass(frozen=True)
class StinespringIsometry:
    """V: C -> E (x) out with V^dag V = I; E is the environment (Alice's) factor."""

    v: Operator
    d_env: int
    d_out: DimSpec

    def __post_init__(self):
        v = frozen(self.v)
        d_out = _out_spec(self.d_out)
        if v.shape[0] != self.d_env * prod(d_out):
            raise DimensionMismatchError(f"isometry rows {v.shape[0]} != {self.d_env} x {d_out}")
        drift = float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))
        if drift > get_settings().tolerances.psd:
            raise InvariantViolation("isometry", f"V^dag V deviates from I by {drift:.3e}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "d_out", d_out)

    @property
    def d_in(self) -> int:
        return self.v.shape[1]


@dataclass(frozen=True)
class Instrument:
    """Subchannels summing to a channel."""

    members: tuple[Subchannel, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DimensionMismatchError("an instrument needs at least one member")
        if any(m.dims != members[0].dims for m in members):
            raise DimensionMismatchError(f"instrument members of mixed dims {[m.dims for m in members]}")
        object.__setattr__(self, "members", members)
        try:
            self.channel
        except InvariantViolation as e:
            raise InvariantViolation("instrument-completeness", e.detail) from e

    @property
    def channel(self) -> Channel:
        first = self.members[0]
        return Channel(sum(m.choi for m in self.members), first.d_in, first.d_out)

    def __len__(self) -> int:
        return len(self.members)


class EbStatus(StrEnum):
    EB_CERTIFIED = "eb_certified"
    NOT_EB = "not_eb"
    INCONCLUSIVE = "inconclusive"


# --- representation changes -------------------------------------------------


def _choi_of_operators(ops: Sequence[Operator], d_in: int) -> Operator:
    vectors = np.stack([k.T.reshape(-1) for k in ops], axis=1) / np.sqrt(d_in)
    return vectors @ vectors.conj().T


def choi_from_kraus(k: KrausSet) -> Channel:
    """
    Choi operator sum_i (I (x) K_i) psi+ (I (x) K_i)^dag of a trace-preserving set.

    Raises:
        InvariantViolation: If the set is not trace preserving
    """
    if not k.is_trace_preserving():
        raise InvariantViolation("trace-preservation", "Kraus set is not complete")
    return Channel(_choi_of_operators(k.operators, k.d_in), k.d_in, k.d_out)


def subchannel_from_kraus(k: KrausSet) -> Subchannel:
    return Subchannel(_choi_of_operators(k.operators, k.d_in), k.d_in, k.d_out)


def kraus_from_choi(c: Subchannel) -> KrausSet:
    """
    Minimal Kraus set read off the spectral decomposition of d_in J.

    The Kraus rank is the number of eigenvalues above the cutoff.
    """
    w, v = eig_hermitian(c.d_in * c.choi)
    cutoff = get_settings().tolerances.kraus_cutoff
    ops = [
        (np.sqrt(w[i]) * v[:, i]).reshape(c.d_in, c.out_dim).T
        for i in reversed(range(len(w)))
        if w[i] > cutoff
    ]
    if not ops:
        ops = [np.zeros((c.out_dim, c.d_in), dtype=complex)]
    return KrausSet(tuple(ops), c.d_out)


def stinespring_from_kraus(k: KrausSet) -> StinespringIsometry:
    """V = sum_i |i>_A (x) K_i for a trace-preserving Kraus set."""
    if not k.is_trace_preserving():
        raise InvariantViolation("trace-preservation", "Kraus set is not complete")
    v = sum(kron(ket(i, len(k)), op) for i, op in enumerate(k.operators))
    return StinespringIsometry(v, len(k), k.d_out)


def extension_from_isometry(iso: StinespringIsometry) -> ChannelExtension:
    """Pure extension V . V^dag with Alice holding the environment factor."""
    return ChannelExtension(
        _choi_of_operators([iso.v], iso.d_in), iso.d_in, (iso.d_env, prod(iso.d_out))
    )


def dilation(c: Channel) -> ChannelExtension:
    """Canonical isometric extension built from the minimal Kraus set."""
    return extension_from_isometry(stinespring_from_kraus(kraus_from_choi(c)))


# --- evaluation ---------------------------------------------------------------


def _act(c: Subchannel, rho: Operator, ancilla_dim: int) -> Operator:
    d, o, e = c.d_in, c.out_dim, ancilla_dim
    j = np.asarray(c.choi).reshape(d, o, d, o)
    r = rho.reshape(d, e, d, e)
    return d * np.einsum("aobp,adbe->odpe", j, r).reshape(o * e, o * e)


def apply(c: Subchannel, rho: Operator, ancilla_dim: int = 1) -> Operator:
    """
    Evaluate (Lambda (x) id_D)[rho] from the Choi operator.

    Args:
        c: Channel (or subchannel) C -> out
        rho: Density operator on C (x) D
        ancilla_dim: Dimension of the untouched factor D

    Returns:
        Operator on out (x) D

    Raises:
        DimensionMismatchError: If rho does not live on C (x) D
        InvariantViolation: If rho does not have unit trace
    """
    rho = as_operator(rho)
    dims_of(rho, (c.d_in, ancilla_dim))
    trace = np.trace(rho)
    if abs(trace - 1) > get_settings().tolerances.psd:
        raise InvariantViolation("density-input", f"input trace is {trace.real:.6g}")
    return _act(c, rho, ancilla_dim)


def apply_dual(c: Subchannel, y: Operator) -> Operator:
    """Heisenberg picture: Lambda^dag(Y) = d_in (Tr_out[(I (x) Y) J])^T."""
    y = as_operator(y)
    dims_of(y, (c.out_dim,))
    weighted = np.kron(np.eye(c.d_in), y) @ c.choi
    return c.d_in * partial_trace(weighted, (c.d_in, c.out_dim), [0]).T


def marginal(e: ChannelExtension, keep: str) -> Channel:
    """Reduce an extension to Alice's (``"A"``) or Bob's (``"B"``) output."""
    if keep not in ("A", "B"):
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    index = 1 if keep == "A" else 2
    return Channel(partial_trace(e.choi, e.dims, [0, index]), e.d_in, (e.d_out[index - 1],))


def complementary(e: ChannelExtension) -> Channel:
    """Generalized complementary channel: the A marginal of the extension."""
    return marginal(e, "A")


def swap_receivers(e: ChannelExtension) -> ChannelExtension:
    """Exchange the roles of A and B."""
    return ChannelExtension(permute_subsystems(e.choi, e.dims, [0, 2, 1]), e.d_in, (e.d_b, e.d_a))


def compose_on_a(e: ChannelExtension, gamma: Channel) -> ChannelExtension:
    """(Gamma (x) id_B) composed after the extension."""
    if gamma.d_in != e.d_a:
        raise DimensionMismatchError(f"Gamma acts on dimension {gamma.d_in}, A has {e.d_a}")
    rest = e.d_in * e.d_b
    on_a_first = permute_subsystems(e.choi, e.dims, [1, 0, 2])
    processed = _act(gamma, on_a_first, rest)
    d_new = gamma.out_dim
    choi = permute_subsystems(processed, (d_new, e.d_in, e.d_b), [1, 0, 2])
    return ChannelExtension(choi, e.d_in, (d_new, e.d_b))


# --- constructors ---------------------------------------------------------------


def incoherent_extension(inst: Instrument, states: Sequence[Operator]) -> ChannelExtension:
    """
    Extension sum_l Lambda_l (x) sigma_l, with sigma_l prepared on A.

    Raises:
        DimensionMismatchError: If states and members differ in number or size
        InvariantViolation: If a state is not a density operator
    """
    if len(states) != len(inst):
        raise DimensionMismatchError(f"{len(states)} states for {len(inst)} instrument members")
    tol = get_settings().tolerances.psd
    sigmas = [as_operator(s) for s in states]
    d_a = sigmas[0].shape[0]
    for i, s in enumerate(sigmas):
        dims_of(s, (d_a,))
        if abs(np.trace(s) - 1) > tol or hermiticity_error(s) > tol or min_eigenvalue(s) < -tol:
            raise InvariantViolation("density-state", f"state {i} is not a density operator")

    first = inst.members[0]
    d_b = first.out_dim
    choi = sum(np.kron(m.choi, s) for m, s in zip(inst.members, sigmas, strict=True))
    choi = permute_subsystems(choi, (first.d_in, d_b, d_a), [0, 2, 1])
    return ChannelExtension(choi, first.d_in, (d_a, d_b))


def pointer_extension(inst: Instrument) -> ChannelExtension:
    """Incoherent extension with orthonormal flags |l><l| on A."""
    n = len(inst)
    return incoherent_extension(inst, [projector(ket(i, n)) for i in range(n)])


def kraus_pointer_extension(k: KrausSet) -> ChannelExtension:
    """sum_i K_i . K_i^dag (x) |i><i|: Alice learns which Kraus operator acted."""
    if not k.is_trace_preserving():
        raise InvariantViolation("trace-preservation", "Kraus set is not complete")
    members = tuple(subchannel_from_kraus(KrausSet((op,), k.d_out)) for op in k.operators)
    return pointer_extension(Instrument(members))


def channel_convex_extension(channels: Sequence[Channel], probs: Sequence[float]) -> ChannelExtension:
    """Pointer extension of the mixture sum_l p_l Lambda_l."""
    p = np.asarray(probs, dtype=float)
    if len(channels) != p.size:
        raise DimensionMismatchError(f"{len(channels)} channels for {p.size} probabilities")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
        raise InvariantViolation("probability-vector", f"weights {p.tolist()} are not a distribution")
    members = tuple(Subchannel(w * c.choi, c.d_in, c.d_out) for w, c in zip(p, channels, strict=True))
    return pointer_extension(Instrument(members))


def povm_from_instrument(inst: Instrument) -> list[Operator]:
    """Effects M_l = Lambda_l^dag[I] on the input."""
    return [apply_dual(m, np.eye(m.out_dim)) for m in inst.members]


def eb_check(c: Subchannel) -> EbStatus:
    """
    PPT test of the Choi operator across C':out.

    Not PPT means not entanglement breaking. PPT is sufficient only when
    d_in * d_out <= 6.
    """
    lowest = min_eigenvalue(partial_transpose(c.choi, (c.d_in, c.out_dim), 1))
    if lowest < -get_settings().tolerances.psd:
        logger.debug(f"Choi partial transpose has eigenvalue {lowest:.3e}")
        return EbStatus.NOT_EB
    if c.d_in * c.out_dim <= PPT_SUFFICIENT_DIMENSION:
        return EbStatus.EB_CERTIFIED
    return EbStatus.INCONCLUSIVE


def is_extremal(k: KrausSet) -> bool:
    """
    Extremality in the convex set of channels.

    Holds iff {K_i^dag K_j} of a minimal Kraus set is linearly independent.
    """
    minimal = kraus_from_choi(subchannel_from_kraus(k)).operators
    products = np.array([(a.conj().T @ b).reshape(-1) for a in minimal for b in minimal])
    rank = np.linalg.matrix_rank(products, tol=get_settings().tolerances.kraus_cutoff)
    return int(rank) == len(minimal) ** 2


# --- standard families --------------------------------------------------------


def identity_channel(d: int) -> Channel:
    return Channel(max_entangled(d), d, (d,))


def fixed_output_channel(sigma: Operator, d_in: int) -> Channel:
    """X -> Tr(X) sigma."""
    sigma = as_operator(sigma)
    return Channel(np.kron(np.eye(d_in) / d_in, sigma), d_in, (sigma.shape[0],))


def fixed_output_extension(sigma: Operator, d_in: int = 2) -> ChannelExtension:
    """X -> X^A (x) sigma^B: identity towards Alice, constant towards Bob."""
    sigma = as_operator(sigma)
    return ChannelExtension(np.kron(max_entangled(d_in), sigma), d_in, (d_in, sigma.shape[0]))


def dephasing_kraus(p: float = 0.5) -> KrausSet:
    """Qubit dephasing {sqrt(1-p) I, sqrt(p) Z}; p = 1/2 removes all coherence."""
    return KrausSet((np.sqrt(1 - p) * PAULI["i"], np.sqrt(p) * PAULI["z"]))


def amplitude_damping_kraus(gamma: float) -> KrausSet:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausSet((k0, k1))


def pauli_kraus(probs: Sequence[float]) -> KrausSet:
    """Pauli channel with weights for (I, X, Y, Z)."""
    return KrausSet(tuple(np.sqrt(p) * PAULI[s] for p, s in zip(probs, "ixyz", strict=True)))


def depolarizing_kraus(p: float) -> KrausSet:
    """rho -> (1-p) rho + p I/2."""
    return pauli_kraus([1 - 3 * p / 4, p / 4, p / 4, p / 4])


def luders_instrument(povm: Sequence[Operator]) -> Instrument:
    """Members rho -> sqrt(M) rho sqrt(M)."""
    members = []
    for effect in povm:
        w, v = eig_hermitian(as_operator(effect))
        root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        members.append(subchannel_from_kraus(KrausSet((root,))))
    return Instrument(tuple(members))


# --- random instances -----------------------------------------------------------


def random_extension(d_c: int, d_a: int, d_b: int, seed: Seed = None) -> ChannelExtension:
    """Haar-random isometric extension C -> A (x) B."""
    if d_a * d_b < d_c:
        raise DimensionMismatchError(f"no isometry from {d_c} into {d_a} x {d_b}")
    v = samplers.haar_isometry(d_a * d_b, d_c, seed)
    return extension_from_isometry(StinespringIsometry(v, d_a, (d_b,)))


def random_channel(d_in: int, d_out: int, kraus_rank: int = 2, seed: Seed = None) -> Channel:
    return choi_from_kraus(KrausSet(tuple(samplers.random_kraus(d_in, d_out, kraus_rank, seed))))


def random_instrument(
    d_in: int, d_out: int, members: int, rank: int = 1, seed: Seed = None
) -> Instrument:
    kraus = samplers.random_instrument_kraus(d_in, d_out, members, rank, seed)
    return Instrument(tuple(subchannel_from_kraus(KrausSet(tuple(ops))) for ops in kraus))
