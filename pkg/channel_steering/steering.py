"""
Assemblages, steering certificates and steering quantifiers.

A hidden-variable model is decomposed over deterministic response functions
l: x -> a, so unsteerability of {rho_a|x} becomes the SDP

    find X_l >= 0  with  sum_l D_l(a|x) X_l = rho_a|x  for all (a, x).

Every verdict is certified independently of the solver: an unsteerable
verdict carries a model reproducing the members, a steerable one carries a
steering-inequality witness whose value exceeds the unsteerable bound.
"""

import itertools
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from math import prod
from typing import Any

import numpy as np
import scipy.optimize

from channel_steering.channels import (
    Channel,
    ChannelExtension,
    Instrument,
    Subchannel,
    apply_dual,
    compose_on_a,
    pointer_extension,
)
from channel_steering.errors import (
    DimensionMismatchError,
    InvariantViolation,
    SolverFailure,
    StrategyCapExceeded,
    TheoremMismatchError,
)
from channel_steering.linalg import (
    PAULI,
    DimSpec,
    Operator,
    as_operator,
    clip_psd,
    dims_of,
    eigvalsh,
    fro,
    frozen,
    hermitian_part,
    hermiticity_error,
    ket,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    projector,
    psd_sqrt,
    support_isometry,
)
from channel_steering.samplers import Seed, random_povm_family
from channel_steering.sdp import HermitianProgram, SdpSolution, check_feasible, solve
from channel_steering.settings import get_settings

logger = logging.getLogger(__name__)

NOISE_MODELS = ("consistent", "general")
QUANTIFIERS = ("robustness", "weight")
INPUT_MODES = ("choi", "search")

PPT_CAVEAT = (
    "PPT is necessary for an incoherent extension but does not certify incoherence: "
    "PPT across the A : BC' cut implies separability only when d_A * (d_B * d_C) <= 6"
)


# --- domain types ---------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementAssemblage:
    """POVMs {M_a|x}_a on Alice's system, one per setting x."""

    povms: tuple[tuple[Operator, ...], ...]

    def __post_init__(self):
        tol = get_settings().tolerances.psd
        povms = tuple(tuple(frozen(hermitian_part(as_operator(m))) for m in povm) for povm in self.povms)
        if not povms or any(not povm for povm in povms):
            raise DimensionMismatchError("a measurement assemblage needs settings with outcomes")
        d = povms[0][0].shape[0]
        for x, povm in enumerate(povms):
            for a, effect in enumerate(povm):
                dims_of(effect, (d,))
                lowest = min_eigenvalue(effect)
                if lowest < -tol:
                    raise InvariantViolation("povm-positivity", f"M[{a}|{x}] has eigenvalue {lowest:.3e}")
            drift = float(np.max(np.abs(sum(povm) - np.eye(d))))
            if drift > tol:
                raise InvariantViolation("povm-completeness", f"setting {x} sums to I up to {drift:.3e}")
        object.__setattr__(self, "povms", povms)

    @property
    def dim(self) -> int:
        return self.povms[0][0].shape[0]

    @property
    def settings(self) -> int:
        return len(self.povms)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(len(povm) for povm in self.povms)


@dataclass(frozen=True)
class StateAssemblage:
    """
    Members rho_a|x on Bob's space, indexed ``members[x][a]``.

    No-signalling drift up to the repair tolerance is removed on construction
    by spreading the difference to the average reduced state over outcomes.
    """

    members: tuple[tuple[Operator, ...], ...]
    dims: DimSpec

    def __post_init__(self):
        tol = get_settings().tolerances
        dims = tuple(int(d) for d in self.dims)
        rows = [[as_operator(r) for r in row] for row in self.members]
        if not rows or any(not row for row in rows):
            raise DimensionMismatchError("a state assemblage needs settings with outcomes")
        for x, row in enumerate(rows):
            for a, r in enumerate(row):
                dims_of(r, dims)
                if hermiticity_error(r) > tol.psd:
                    raise InvariantViolation("hermitian-member", f"rho[{a}|{x}] is not Hermitian")
                lowest = min_eigenvalue(r)
                if lowest < -tol.psd:
                    raise InvariantViolation("member-positivity", f"rho[{a}|{x}] has eigenvalue {lowest:.3e}")
        rows = [[hermitian_part(r) for r in row] for row in rows]

        sums = [sum(row) for row in rows]
        mean = sum(sums) / len(sums)
        drift = max(fro(s - mean) for s in sums)
        if drift > tol.consistency_repair:
            raise InvariantViolation("no-signalling", f"reduced states differ across settings by {drift:.3e}")
        if drift > 0:
            if drift > 1e-12:
                logger.warning(f"Repairing assemblage no-signalling drift of {drift:.3e}")
            rows = [[r + (mean - s) / len(row) for r in row] for row, s in zip(rows, sums, strict=True)]

        trace = float(np.trace(mean).real)
        if abs(trace - 1) > tol.consistency_repair:
            raise InvariantViolation("normalization", f"assemblage has total trace {trace:.9g}")

        object.__setattr__(self, "members", tuple(tuple(frozen(r) for r in row) for row in rows))
        object.__setattr__(self, "dims", dims)

    @property
    def settings(self) -> int:
        return len(self.members)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.members)

    @property
    def dim(self) -> int:
        return prod(self.dims)

    @property
    def reduced(self) -> Operator:
        return sum(self.members[0])


@dataclass(frozen=True)
class ChannelAssemblage:
    """Subchannels Lambda_a|x, indexed ``members[x][a]``, with sum_a independent of x."""

    members: tuple[tuple[Subchannel, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.members)
        if not rows or any(not row for row in rows):
            raise DimensionMismatchError("a channel assemblage needs settings with outcomes")
        dims = rows[0][0].dims
        if any(m.dims != dims for row in rows for m in row):
            raise DimensionMismatchError("channel assemblage members have mixed dimensions")
        sums = [sum(m.choi for m in row) for row in rows]
        mean = sum(sums) / len(sums)
        drift = max(fro(s - mean) for s in sums)
        if drift > get_settings().tolerances.consistency_repair:
            raise InvariantViolation("no-signalling", f"instruments sum to different channels ({drift:.3e})")
        object.__setattr__(self, "members", rows)

    @property
    def d_in(self) -> int:
        return self.members[0][0].d_in

    @property
    def d_out(self) -> DimSpec:
        return self.members[0][0].d_out

    @property
    def channel(self) -> Channel:
        return Channel(sum(m.choi for m in self.members[0]), self.d_in, self.d_out)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.members)


@dataclass(frozen=True)
class DeterministicStrategySet:
    """All response functions l: x -> a, enumerated in lexicographic order."""

    outcomes: tuple[int, ...]
    cap: int | None = None
    strategies: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        cap = get_settings().steering.strategy_cap if self.cap is None else self.cap
        count = prod(self.outcomes)
        if count > cap:
            raise StrategyCapExceeded(f"{count} deterministic strategies exceed the cap of {cap}")
        strategies = tuple(itertools.product(*(range(k) for k in self.outcomes)))
        object.__setattr__(self, "strategies", strategies)

    def __len__(self) -> int:
        return len(self.strategies)

    def response(self, index: int, a: int, x: int) -> int:
        return int(self.strategies[index][x] == a)


@dataclass(frozen=True)
class SteeringVerdict:
    """
    Outcome of a certification or quantification.

    ``model`` holds the operators X_l (in the order of ``strategies``) for an
    unsteerable verdict; ``witness`` holds F_a|x >= 0 for a steerable one.
    """

    steerable: bool
    value: float
    quantifier: str
    model: tuple[Operator, ...] | None = None
    strategies: tuple[tuple[int, ...], ...] | None = None
    witness: tuple[tuple[Operator, ...], ...] | None = None
    witness_value: float | None = None
    witness_bound: float | None = None
    model_error: float | None = None
    boundary: bool = False
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        tol = get_settings().tolerances
        if self.steerable:
            return (
                self.witness_value is not None
                and self.witness_bound is not None
                and self.witness_value - self.witness_bound >= tol.certificate_gap
            )
        return self.model_error is not None and self.model_error <= tol.steering_boundary


@dataclass(frozen=True)
class WitnessCheck:
    value: float
    bound: float
    steerable: bool

    @property
    def gap(self) -> float:
        return self.value - self.bound


# --- assemblage construction ------------------------------------------------------


def pauli_measurements(axes: str = "xz") -> MeasurementAssemblage:
    """Projective qubit measurements (I + (-1)^a sigma)/2 along the given axes."""
    return MeasurementAssemblage(
        tuple(
            tuple((PAULI["i"] + (-1) ** a * PAULI[axis]) / 2 for a in range(2)) for axis in axes
        )
    )


def basis_measurement(d: int) -> MeasurementAssemblage:
    """Single setting: computational-basis projectors."""
    return MeasurementAssemblage((tuple(projector(ket(i, d)) for i in range(d)),))


def random_measurement_assemblage(
    d: int, settings: int = 2, outcomes: int = 2, seed: Seed = None
) -> MeasurementAssemblage:
    family = random_povm_family(d, settings, outcomes, seed)
    return MeasurementAssemblage(tuple(tuple(povm) for povm in family))


def induced_channel_assemblage(e: ChannelExtension, ma: MeasurementAssemblage) -> ChannelAssemblage:
    """
    Lambda_a|x[X] = Tr_A(M_a|x Lambda^{C->AB}[X]), member by member.

    Raises:
        DimensionMismatchError: If the POVMs do not act on A
    """
    if ma.dim != e.d_a:
        raise DimensionMismatchError(f"POVMs act on dimension {ma.dim}, A has {e.d_a}")
    members = []
    for povm in ma.povms:
        row = []
        for effect in povm:
            weighted = np.kron(np.kron(np.eye(e.d_in), effect), np.eye(e.d_b)) @ e.choi
            row.append(Subchannel(partial_trace(weighted, e.dims, [0, 2]), e.d_in, (e.d_b,)))
        members.append(tuple(row))
    return ChannelAssemblage(tuple(members))


def choi_state_assemblage(ca: ChannelAssemblage) -> StateAssemblage:
    """rho_a|x = J(Lambda_a|x) on C' (x) B."""
    return StateAssemblage(
        tuple(tuple(m.choi for m in row) for row in ca.members), (ca.d_in, *ca.d_out)
    )


def induced_state_assemblage(
    state: Operator, dims: Sequence[int], alice: int, ma: MeasurementAssemblage
) -> StateAssemblage:
    """
    Steer a multipartite state by measuring the factor at index ``alice``.

    Members live on the remaining factors, in their original order.
    """
    state = as_operator(state)
    dims = dims_of(state, dims)
    if ma.dim != dims[alice]:
        raise DimensionMismatchError(f"POVMs act on dimension {ma.dim}, factor {alice} has {dims[alice]}")
    keep = [i for i in range(len(dims)) if i != alice]
    left = prod(dims[:alice])
    right = prod(dims[alice + 1 :])
    members = []
    for povm in ma.povms:
        row = []
        for effect in povm:
            lifted = np.kron(np.kron(np.eye(left), effect), np.eye(right))
            row.append(partial_trace(lifted @ state, dims, keep))
        members.append(tuple(row))
    return StateAssemblage(tuple(members), tuple(dims[i] for i in keep))


def mix_with_noise(sa: StateAssemblage, weight: float) -> StateAssemblage:
    """(1 - w) rho_a|x + w I/(k d): a path towards the maximally mixed assemblage."""
    d = sa.dim
    return StateAssemblage(
        tuple(
            tuple((1 - weight) * r + weight * np.eye(d) / (len(row) * d) for r in row)
            for row in sa.members
        ),
        sa.dims,
    )


# --- programs ----------------------------------------------------------------------


@dataclass(frozen=True)
class _Compressed:
    """Assemblage restricted to the support of its reduced state."""

    isometry: Operator
    members: tuple[tuple[Operator, ...], ...]
    reduced: Operator
    strategies: DeterministicStrategySet

    @property
    def rank(self) -> int:
        return self.isometry.shape[1]

    def lift(self, op: Operator) -> Operator:
        return self.isometry @ op @ self.isometry.conj().T


def _compress(sa: StateAssemblage) -> _Compressed:
    strategies = DeterministicStrategySet(sa.outcomes)
    v = support_isometry(sa.reduced, get_settings().tolerances.kraus_cutoff)
    if v.shape[1] == 0:
        raise InvariantViolation("normalization", "assemblage has a vanishing reduced state")
    members = tuple(tuple(v.conj().T @ r @ v for r in row) for row in sa.members)
    return _Compressed(v, members, v.conj().T @ sa.reduced @ v, strategies)


def _model_program(comp: _Compressed, cost: Operator | None = None) -> tuple[HermitianProgram, list[int]]:
    prog = HermitianProgram()
    blocks = [prog.add_hermitian_block(comp.rank, cost) for _ in comp.strategies.strategies]
    return prog, blocks


def _model_terms(comp: _Compressed, blocks: list[int], a: int, x: int) -> list[tuple[int, float]]:
    return [(b, 1.0) for i, b in enumerate(blocks) if comp.strategies.response(i, a, x)]


def _require_optimal(sol: SdpSolution, program: str) -> None:
    if not sol.optimal:
        raise SolverFailure(str(sol.status), f"{program} program not solved", sol.diagnostics())


def _model_error(sa: StateAssemblage, strategies: DeterministicStrategySet, model: Sequence[Operator]) -> float:
    errors = []
    for x, row in enumerate(sa.members):
        for a, member in enumerate(row):
            rebuilt = sum(
                x_l for i, x_l in enumerate(model) if strategies.response(i, a, x)
            )
            errors.append(fro(rebuilt - member))
    return max(errors)


def _feasible_model(sa: StateAssemblage, comp: _Compressed) -> tuple[tuple[Operator, ...] | None, dict]:
    """Phase-I search for a hidden-state model; the model is returned lifted and PSD."""
    prog, blocks = _model_program(comp)
    for x, row in enumerate(comp.members):
        for a, member in enumerate(row):
            prog.add_matrix_equality(_model_terms(comp, blocks, a, x), member)
    result = check_feasible(prog.to_problem())
    diagnostics = result.solution.diagnostics() | {"phase_one_shift": result.shift}
    if not result.feasible:
        return None, diagnostics
    model = tuple(
        frozen(clip_psd(comp.lift(prog.hermitian_value(result.x, b)))) for b in blocks
    )
    return model, diagnostics


@dataclass(frozen=True)
class _QuantifierSolve:
    value: float
    duals: tuple[tuple[Operator, ...], ...]
    solution: SdpSolution


def _slack_program(comp: _Compressed, cost: Operator, sign: float) -> tuple[HermitianProgram, list[list[int]]]:
    """sum_l D_l X_l + sign * S_a|x = rho_a|x with one PSD slack per member."""
    prog, blocks = _model_program(comp, cost)
    handles = []
    for x, row in enumerate(comp.members):
        handles.append([])
        for a, m in enumerate(row):
            slack = prog.add_hermitian_block(comp.rank)
            terms = [*_model_terms(comp, blocks, a, x), (slack, sign)]
            handles[-1].append(prog.add_matrix_equality(terms, m))
    return prog, handles


def _solve_robustness(comp: _Compressed, noise: str) -> _QuantifierSolve:
    if noise == "consistent":
        prog, blocks = _model_program(comp)
        t = prog.add_scalar(cost=1.0)
        handles = []
        for x, row in enumerate(comp.members):
            noise_term = (t, -comp.reduced / len(row))
            handles.append(
                [prog.add_matrix_equality([*_model_terms(comp, blocks, a, x), noise_term], m)
                 for a, m in enumerate(row)]
            )
        offset = 0.0
    elif noise == "general":
        prog, handles = _slack_program(comp, np.eye(comp.rank), -1.0)
        offset = -1.0
    else:
        raise ValueError(f"noise must be one of {NOISE_MODELS}, got {noise!r}")

    sol = solve(prog.to_problem())
    _require_optimal(sol, "robustness")
    duals = tuple(tuple(prog.dual_matrix(sol.y, h) for h in row) for row in handles)
    return _QuantifierSolve(sol.primal_objective + offset, duals, sol)


def _solve_weight(comp: _Compressed) -> _QuantifierSolve:
    prog, handles = _slack_program(comp, -np.eye(comp.rank), 1.0)
    sol = solve(prog.to_problem())
    _require_optimal(sol, "steerable weight")
    duals = tuple(tuple(prog.dual_matrix(sol.y, h) for h in row) for row in handles)
    return _QuantifierSolve(1.0 + sol.primal_objective, duals, sol)


def _normalized_witness(comp: _Compressed, duals) -> tuple[tuple[Operator, ...], ...]:
    """Shift each setting's multipliers to PSD and lift them to Bob's full space."""
    witness = []
    for row in duals:
        shift = max(0.0, -min(min_eigenvalue(f) for f in row))
        identity = np.eye(comp.rank)
        witness.append(tuple(frozen(comp.lift(f + shift * identity)) for f in row))
    return tuple(witness)


def verify_witness(sa: StateAssemblage, witness: Sequence[Sequence[Operator]]) -> WitnessCheck:
    """
    Evaluate a steering inequality sum Tr(F_a|x rho_a|x) <= bound.

    The bound max_l lambda_max(sum_x F_l(x)|x) Tr(rho) holds for every
    unsteerable assemblage with the same total trace.
    """
    tol = get_settings().tolerances
    if any(min_eigenvalue(f) < -tol.psd for row in witness for f in row):
        raise InvariantViolation("witness-positivity", "witness operators must be PSD")
    if tuple(len(row) for row in witness) != sa.outcomes:
        raise DimensionMismatchError("witness shape does not match the assemblage")
    strategies = DeterministicStrategySet(sa.outcomes)
    bound = max(
        float(eigvalsh(sum(witness[x][a] for x, a in enumerate(s)))[-1]) for s in strategies.strategies
    )
    bound *= float(np.trace(sa.reduced).real)
    value = float(
        sum(np.trace(f @ r).real for row_f, row_r in zip(witness, sa.members, strict=True)
            for f, r in zip(row_f, row_r, strict=True))
    )
    return WitnessCheck(value=value, bound=bound, steerable=value - bound >= tol.certificate_gap)


def _verdict(sa: StateAssemblage, comp: _Compressed, quantifier: str, solved: _QuantifierSolve) -> SteeringVerdict:
    tol = get_settings().tolerances
    diagnostics = solved.solution.diagnostics()
    value = solved.value

    if value > tol.steering_boundary:
        witness = _normalized_witness(comp, solved.duals)
        check = verify_witness(sa, witness)
        if check.steerable:
            logger.info(f"Steerable: {quantifier} {value:.9f}, witness gap {check.gap:.3e}")
        else:
            logger.warning(f"{quantifier} {value:.3e} above the boundary but witness gap only {check.gap:.3e}")
        return SteeringVerdict(
            steerable=True,
            value=value,
            quantifier=quantifier,
            witness=witness,
            witness_value=check.value,
            witness_bound=check.bound,
            boundary=not check.steerable,
            diagnostics=diagnostics,
        )

    model, feasibility = _feasible_model(sa, comp)
    diagnostics = diagnostics | {"feasibility": feasibility}
    boundary = value > tol.steering_boundary / 10
    if model is None:
        # neither a witness nor a model: no verdict can be certified
        raise SolverFailure(
            "inconclusive",
            f"{quantifier} {value:.3e} is below the steering boundary but no hidden-state model was found",
            diagnostics,
        )
    error = _model_error(sa, comp.strategies, model)
    logger.info(f"Unsteerable: {quantifier} {value:.3e}, model error {error:.3e}")
    return SteeringVerdict(
        steerable=False,
        value=value,
        quantifier=quantifier,
        model=model,
        strategies=comp.strategies.strategies,
        model_error=error,
        boundary=boundary or error > tol.steering_boundary,
        diagnostics=diagnostics,
    )


def test_unsteerable(sa: StateAssemblage) -> SteeringVerdict:
    """
    Decide whether the assemblage admits a hidden-state model.

    A feasible model is verified member by member. Otherwise the robustness
    program supplies the value and the steering witness.

    Raises:
        StrategyCapExceeded: If k^m exceeds the strategy cap
        SolverFailure: If a program cannot be solved
    """
    comp = _compress(sa)
    model, diagnostics = _feasible_model(sa, comp)
    if model is not None:
        error = _model_error(sa, comp.strategies, model)
        if error <= get_settings().tolerances.steering_boundary:
            logger.info(f"Unsteerable: hidden-state model found (error {error:.3e})")
            return SteeringVerdict(
                steerable=False,
                value=0.0,
                quantifier="feasibility",
                model=model,
                strategies=comp.strategies.strategies,
                model_error=error,
                diagnostics=diagnostics,
            )
        logger.warning(f"Phase-I model misses the assemblage by {error:.3e}")
    return _verdict(sa, comp, "robustness", _solve_robustness(comp, get_settings().steering.noise))


def steering_robustness(sa: StateAssemblage, noise: str | None = None) -> SteeringVerdict:
    """
    Steering robustness of an assemblage.

    Args:
        sa: State assemblage
        noise: ``"consistent"`` mixes with rho/k (Bob's reduced state, uniform
            outcomes); ``"general"`` admits any assemblage as noise. Defaults
            to the configured noise model.

    Returns:
        Verdict with the robustness as value
    """
    noise = noise or get_settings().steering.noise
    comp = _compress(sa)
    return _verdict(sa, comp, "robustness", _solve_robustness(comp, noise))


def steerable_weight(sa: StateAssemblage) -> SteeringVerdict:
    """Steerable weight: 1 - max Tr sum X_l over models with sum D X_l <= rho_a|x."""
    comp = _compress(sa)
    return _verdict(sa, comp, "weight", _solve_weight(comp))


def quantifier_value(sa: StateAssemblage, measure: str = "robustness") -> float:
    """Raw quantifier value without certification."""
    comp = _compress(sa)
    if measure == "robustness":
        return _solve_robustness(comp, get_settings().steering.noise).value
    if measure == "weight":
        return _solve_weight(comp).value
    raise ValueError(f"measure must be one of {QUANTIFIERS}, got {measure!r}")


# --- extension quantifiers --------------------------------------------------------


def schmidt_coefficients(angles: Sequence[float]) -> np.ndarray:
    """Squared hyperspherical coordinates: a probability vector of len(angles) + 1."""
    amplitudes = []
    carry = 1.0
    for theta in angles:
        amplitudes.append(carry * np.cos(theta))
        carry *= np.sin(theta)
    amplitudes.append(carry)
    return np.asarray(amplitudes) ** 2


def steered_choi_assemblage(ca: ChannelAssemblage, probs: Sequence[float]) -> StateAssemblage:
    """Assemblage steered from the pure input sum_i sqrt(p_i)|ii> on C (x) C'."""
    d = ca.d_in
    scale = np.kron(np.diag(np.sqrt(d * np.asarray(probs, dtype=float))), np.eye(prod(ca.d_out)))
    return StateAssemblage(
        tuple(tuple(scale @ m.choi @ scale for m in row) for row in ca.members), (d, *ca.d_out)
    )


@dataclass(frozen=True)
class InputSearch:
    value: float
    choi_value: float
    schmidt: tuple[float, ...]
    evaluations: int


def search_pure_inputs(ca: ChannelAssemblage, measure: str = "robustness") -> InputSearch:
    """
    Maximize a quantifier over pure inputs with Schmidt basis fixed to |ii>.

    Grid over hyperspherical angles, then one bounded scalar refinement per
    angle around the best grid point. Global optimality is not claimed.
    """
    options = get_settings().search
    d = ca.d_in
    if d > options.max_input_dim:
        raise DimensionMismatchError(f"input search is limited to d_C <= {options.max_input_dim}, got {d}")

    evaluations = 0

    def evaluate(angles: Sequence[float]) -> float:
        nonlocal evaluations
        evaluations += 1
        return quantifier_value(steered_choi_assemblage(ca, schmidt_coefficients(angles)), measure)

    choi_value = quantifier_value(choi_state_assemblage(ca), measure)
    if d == 1:
        return InputSearch(choi_value, choi_value, (1.0,), 1)

    grid = np.linspace(0, np.pi / 2, options.grid_points)
    step = grid[1] - grid[0]
    best_angles, best = None, -np.inf
    for angles in itertools.product(grid, repeat=d - 1):
        value = evaluate(angles)
        if value > best:
            best_angles, best = list(angles), value

    for i in range(d - 1):
        lower = max(0.0, best_angles[i] - step)
        upper = min(np.pi / 2, best_angles[i] + step)

        def objective(theta: float, i: int = i) -> float:
            trial = list(best_angles)
            trial[i] = theta
            return -evaluate(trial)

        result = scipy.optimize.minimize_scalar(
            objective, bounds=(lower, upper), method="bounded",
            options={"xatol": options.parameter_tolerance},
        )
        if -result.fun > best:
            best = float(-result.fun)
            best_angles[i] = float(result.x)

    logger.info(f"Input search: best {best:.9f} (choi {choi_value:.9f}) after {evaluations} solves")
    if choi_value >= best:
        return InputSearch(choi_value, choi_value, tuple([1.0 / d] * d), evaluations + 1)
    return InputSearch(best, choi_value, tuple(schmidt_coefficients(best_angles)), evaluations + 1)


def channel_quantifier(
    e: ChannelExtension, ma: MeasurementAssemblage, measure: str = "robustness", mode: str = "choi"
) -> float:
    """
    Steerability of an extension under fixed measurements on A.

    ``mode="choi"`` evaluates the maximally entangled input; ``mode="search"``
    also scans pure inputs and returns the larger value.
    """
    if measure not in QUANTIFIERS:
        raise ValueError(f"measure must be one of {QUANTIFIERS}, got {measure!r}")
    ca = induced_channel_assemblage(e, ma)
    if mode == "choi":
        return quantifier_value(choi_state_assemblage(ca), measure)
    if mode == "search":
        return search_pure_inputs(ca, measure).value
    raise ValueError(f"mode must be one of {INPUT_MODES}, got {mode!r}")


# --- structural checks --------------------------------------------------------------


@dataclass(frozen=True)
class Theorem1Report:
    channel_path: SteeringVerdict
    state_path: SteeringVerdict
    difference: float

    @property
    def agree(self) -> bool:
        return self.channel_path.steerable == self.state_path.steerable


def verify_theorem1(e: ChannelExtension, ma: MeasurementAssemblage) -> Theorem1Report:
    """
    Compare steerability of the channel assemblage with that of the Choi state.

    Path (i) certifies the Choi assemblage of the induced channel assemblage;
    path (ii) measures A directly on J(e) viewed as a state of A:(B C').

    Raises:
        TheoremMismatchError: If verdicts differ or values differ by more than 1e-6
    """
    channel_path = test_unsteerable(choi_state_assemblage(induced_channel_assemblage(e, ma)))

    on_a_first = permute_subsystems(e.choi, e.dims, [1, 2, 0])
    state_path = test_unsteerable(induced_state_assemblage(on_a_first, (e.d_a, e.d_b, e.d_in), 0, ma))

    report = Theorem1Report(channel_path, state_path, abs(channel_path.value - state_path.value))
    if not report.agree or report.difference > get_settings().tolerances.certificate_gap:
        raise TheoremMismatchError(
            f"channel path steerable={channel_path.steerable} ({channel_path.value:.9f}) vs "
            f"state path steerable={state_path.steerable} ({state_path.value:.9f})"
        )
    logger.info(f"Choi reduction agrees: steerable={channel_path.steerable}, |dv|={report.difference:.2e}")
    return report


@dataclass(frozen=True)
class Theorem2Report:
    status: str
    ppt: bool
    min_eigenvalue: float
    expected_incoherent: bool
    contradicts_incoherence: bool = False
    caveat: str = PPT_CAVEAT


def theorem2_necessary_check(e: ChannelExtension, incoherent: bool = False) -> Theorem2Report:
    """
    PPT test of J(e) across A:BC'.

    An incoherent extension has an A:BC'-separable Choi operator, so a PPT
    violation proves coherence. ``incoherent`` marks constructor-built
    incoherent extensions, for which a violation signals a bug.
    """
    lowest = min_eigenvalue(partial_transpose(e.choi, e.dims, 1))
    ppt = lowest >= -get_settings().tolerances.psd
    status = "consistent" if ppt else "violation"
    if incoherent and not ppt:
        logger.error(f"Incoherent extension violates PPT across A:BC' ({lowest:.3e})")
    return Theorem2Report(
        status=status,
        ppt=ppt,
        min_eigenvalue=lowest,
        expected_incoherent=incoherent,
        contradicts_incoherence=incoherent and not ppt,
    )


def processed_measurements(gamma: Channel, ma: MeasurementAssemblage) -> MeasurementAssemblage:
    """Heisenberg-picture POVMs Gamma^dag[M_a|x]."""
    if gamma.out_dim != ma.dim:
        raise DimensionMismatchError(f"Gamma outputs dimension {gamma.out_dim}, POVMs act on {ma.dim}")
    return MeasurementAssemblage(tuple(tuple(apply_dual(gamma, m) for m in povm) for povm in ma.povms))


@dataclass(frozen=True)
class CovarianceReport:
    deviation: float
    holds: bool


def local_processing_covariance(
    e: ChannelExtension, gamma: Channel, ma: MeasurementAssemblage
) -> CovarianceReport:
    """
    Processing A by Gamma equals measuring the dual-processed POVMs.

    Raises:
        InvariantViolation: If the two assemblages differ beyond 1e-9
    """
    processed = induced_channel_assemblage(compose_on_a(e, gamma), ma)
    dual = induced_channel_assemblage(e, processed_measurements(gamma, ma))
    deviation = max(
        fro(p.choi - q.choi)
        for row_p, row_q in zip(processed.members, dual.members, strict=True)
        for p, q in zip(row_p, row_q, strict=True)
    )
    holds = deviation <= get_settings().tolerances.psd
    if not holds:
        raise InvariantViolation("measurement-covariance", f"assemblages differ by {deviation:.3e}")
    return CovarianceReport(deviation=deviation, holds=holds)


@dataclass(frozen=True)
class Realization:
    extension: ChannelExtension
    measurements: MeasurementAssemblage
    deviation: float


def unsteerable_realization(sa: StateAssemblage, verdict: SteeringVerdict) -> Realization:
    """
    Rebuild an incoherent extension from a hidden-state model.

    The model operators of a Choi assemblage on C' (x) B are Chois of an
    instrument {Lambda_l}; its pointer extension measured with
    M_a|x = sum_l D_l(a|x) |l><l| reproduces the assemblage.

    Raises:
        InvariantViolation: If the verdict carries no model
    """
    if verdict.steerable or verdict.model is None or verdict.strategies is None:
        raise InvariantViolation("hidden-state-model", "an unsteerable verdict with a model is required")
    if len(sa.dims) != 2:
        raise DimensionMismatchError(f"expected a Choi assemblage on (C', B), got dims {sa.dims}")
    d_in, d_b = sa.dims

    model = [clip_psd(x) for x in verdict.model]
    marginal = d_in * partial_trace(sum(model), sa.dims, [0])
    drift = float(np.max(np.abs(marginal - np.eye(d_in))))
    if drift > 1e-10:
        logger.warning(f"Repairing model trace preservation drift of {drift:.3e}")
    root = psd_sqrt(marginal)
    correction = np.kron(np.linalg.inv(root), np.eye(d_b))
    model = [hermitian_part(correction @ x @ correction.conj().T) for x in model]

    instrument = Instrument(tuple(Subchannel(x, d_in, (d_b,)) for x in model))
    extension = pointer_extension(instrument)
    n = len(model)
    measurements = MeasurementAssemblage(
        tuple(
            tuple(
                sum((projector(ket(i, n)) for i, s in enumerate(verdict.strategies) if s[x] == a),
                    np.zeros((n, n), dtype=complex))
                for a in range(k)
            )
            for x, k in enumerate(sa.outcomes)
        )
    )
    rebuilt = choi_state_assemblage(induced_channel_assemblage(extension, measurements))
    deviation = max(
        fro(r - m)
        for row_r, row_m in zip(rebuilt.members, sa.members, strict=True)
        for r, m in zip(row_r, row_m, strict=True)
    )
    return Realization(extension=extension, measurements=measurements, deviation=deviation)


QuantifierFn = Callable[[StateAssemblage], SteeringVerdict]
QUANTIFIER_FUNCTIONS: dict[str, QuantifierFn] = {
    "robustness": steering_robustness,
    "weight": steerable_weight,
}
