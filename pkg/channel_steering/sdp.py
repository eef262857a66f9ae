"""
Dense semidefinite programming.

Solves block-diagonal problems in standard form::

    minimize   <C, X>              maximize   b'y
    subject to <A_i, X> = b_i      subject to C - sum_i y_i A_i = Z
               X >= 0                         Z >= 0

with an infeasible-start primal-dual interior-point method (HKM search
direction, Mehrotra predictor-corrector). Infeasibility is decided by a
phase-I program whose dual optimum is a Farkas certificate.

Complex Hermitian programs are written with ``HermitianProgram`` and embedded
into real symmetric blocks at the solver boundary.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from channel_steering.errors import (
    DimensionMismatchError,
    NotHermitianError,
    SingularSystemError,
    SolverFailure,
)
from channel_steering.linalg import Operator, hermitian_basis, hermiticity_error
from channel_steering.settings import SolverOptions, get_settings

logger = logging.getLogger(__name__)

RealMatrix = NDArray[np.float64]

SYMMETRY_TOLERANCE = 1e-12
ACCEPTABLE_ACCURACY = 1e-7
DIVERGENCE_BOUND = 1e12


class SolverStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class SdpProblem:
    """
    Block-diagonal SDP in standard form.

    Attributes:
        block_sizes: Side length of each PSD block
        objective: Cost matrix C_j per block
        constraints: Per block, an array of shape (m, n_j, n_j) holding A_ij
        rhs: Right-hand sides b, shape (m,)
    """

    block_sizes: tuple[int, ...]
    objective: tuple[RealMatrix, ...]
    constraints: tuple[RealMatrix, ...]
    rhs: RealMatrix

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise DimensionMismatchError(f"block sizes must be positive, got {sizes}")
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        m = rhs.size
        if m == 0:
            raise DimensionMismatchError("an SDP needs at least one equality constraint")

        objective, constraints = [], []
        for j, n in enumerate(sizes):
            c = np.asarray(self.objective[j], dtype=float)
            a = np.asarray(self.constraints[j], dtype=float)
            if c.shape != (n, n) or a.shape != (m, n, n):
                raise DimensionMismatchError(
                    f"block {j}: expected C {(n, n)} and A {(m, n, n)}, got {c.shape} and {a.shape}"
                )
            if np.max(np.abs(c - c.T), initial=0.0) > SYMMETRY_TOLERANCE:
                raise NotHermitianError(f"objective block {j} is not symmetric")
            if np.max(np.abs(a - a.transpose(0, 2, 1)), initial=0.0) > SYMMETRY_TOLERANCE:
                raise NotHermitianError(f"constraint block {j} is not symmetric")
            objective.append(c)
            constraints.append(a)

        total = sum(sizes)
        if m > total * total:
            raise DimensionMismatchError(f"{m} constraints exceed the matrix dimension bound {total**2}")

        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "objective", tuple(objective))
        object.__setattr__(self, "constraints", tuple(constraints))
        object.__setattr__(self, "rhs", rhs)

    @property
    def num_constraints(self) -> int:
        return int(self.rhs.size)

    def constraint_map(self, xs: Sequence[RealMatrix]) -> RealMatrix:
        """A(X): the vector of <A_i, X>."""
        return _apply_constraints(self.constraints, xs)

    def adjoint_map(self, y: RealMatrix) -> list[RealMatrix]:
        """A*(y) = sum_i y_i A_i, per block."""
        return _apply_adjoint(self.constraints, y)


@dataclass(frozen=True)
class SdpSolution:
    status: SolverStatus
    x: tuple[RealMatrix, ...]
    y: RealMatrix
    z: tuple[RealMatrix, ...]
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    farkas: RealMatrix | None = None

    @property
    def optimal(self) -> bool:
        return self.status == SolverStatus.OPTIMAL

    def diagnostics(self) -> dict[str, Any]:
        return {
            "status": str(self.status),
            "iterations": self.iterations,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
        }


@dataclass(frozen=True)
class Feasibility:
    """
    Outcome of a phase-I solve.

    ``x`` is a feasible point when ``feasible``; otherwise ``y`` is a Farkas
    witness: A*(y) <= 0 and b'y > 0.
    """

    feasible: bool
    x: tuple[RealMatrix, ...] | None
    y: RealMatrix | None
    shift: float
    solution: SdpSolution


def _apply_constraints(constraints: Sequence[RealMatrix], xs: Sequence[RealMatrix]) -> RealMatrix:
    return sum(a.reshape(a.shape[0], -1) @ x.reshape(-1) for a, x in zip(constraints, xs, strict=True))


def _apply_adjoint(constraints: Sequence[RealMatrix], y: RealMatrix) -> list[RealMatrix]:
    return [np.tensordot(y, a, axes=1) for a in constraints]


def _inner(xs: Sequence[RealMatrix], zs: Sequence[RealMatrix]) -> float:
    return float(sum(np.sum(x * z) for x, z in zip(xs, zs, strict=True)))


def _norm(xs: Sequence[RealMatrix]) -> float:
    return float(np.sqrt(sum(np.sum(x * x) for x in xs)))


def _sym(m: RealMatrix) -> RealMatrix:
    return (m + m.T) / 2


# --- complex embedding ------------------------------------------------------


def embed_complex(h: Operator) -> RealMatrix:
    """
    Real symmetric image [[Re h, -Im h], [Im h, Re h]] of a Hermitian matrix.

    The spectrum is that of ``h`` with doubled multiplicities, so positivity is
    preserved in both directions.

    Raises:
        NotHermitianError: If ``h`` is not Hermitian within tolerance
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {h.shape}")
    deviation = hermiticity_error(h)
    if deviation > get_settings().tolerances.hermitian:
        raise NotHermitianError(f"cannot embed a non-Hermitian matrix (deviation {deviation:.3e})")
    re, im = h.real, h.imag
    return _sym(np.block([[re, -im], [im, re]]))


def unembed_complex(x: RealMatrix) -> Operator:
    """Hermitian matrix represented by a real symmetric 2n x 2n block."""
    n = x.shape[0] // 2
    x11, x12, x21, x22 = x[:n, :n], x[:n, n:], x[n:, :n], x[n:, n:]
    h = (x11 + x22) / 2 + 1j * (x21 - x12) / 2
    return (h + h.conj().T) / 2


# --- interior point ---------------------------------------------------------


def _initial_point(p: SdpProblem, constraints, rhs) -> tuple[list[RealMatrix], list[RealMatrix]]:
    xs, zs = [], []
    for n, c, a in zip(p.block_sizes, p.objective, constraints, strict=True):
        norms = np.sqrt(np.sum(a * a, axis=(1, 2)))
        root = np.sqrt(n)
        xi = max(10.0, root, root * float(np.max((1 + np.abs(rhs)) / (1 + norms))))
        eta = max(10.0, root, float(np.max(norms)), float(np.linalg.norm(c)))
        xs.append(xi * np.eye(n))
        zs.append(eta * np.eye(n))
    return xs, zs


def _max_step(xs: Sequence[RealMatrix], dxs: Sequence[RealMatrix]) -> float:
    """Largest alpha with every X + alpha dX still PSD."""
    alpha = np.inf
    for x, dx in zip(xs, dxs, strict=True):
        try:
            l = np.linalg.cholesky(x)
            linv = scipy.linalg.solve_triangular(l, np.eye(len(x)), lower=True, check_finite=False)
            scaled = linv @ dx @ linv.T
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(x)
            s = v / np.sqrt(np.maximum(w, 1e-300))
            scaled = s.T @ dx @ s
        lowest = float(np.linalg.eigvalsh(_sym(scaled))[0])
        if lowest < 0:
            alpha = min(alpha, -1.0 / lowest)
    return alpha


def _schur_solver(m_mat: RealMatrix, iteration: int):
    try:
        factor = scipy.linalg.cho_factor(m_mat, check_finite=False)
        return lambda r: scipy.linalg.cho_solve(factor, r, check_finite=False)
    except np.linalg.LinAlgError:
        logger.debug(f"Schur complement not positive definite at iteration {iteration}, using lstsq")

    def solve(r):
        out = scipy.linalg.lstsq(m_mat, r, check_finite=False)[0]
        if not np.all(np.isfinite(out)):
            raise SingularSystemError(float(np.linalg.cond(m_mat)), iteration)
        return out

    return solve


@dataclass
class _Newton:
    """
    HKM search directions for one iterate.

    Eliminating dZ and dX from the linearized optimality conditions leaves the
    Schur system M dy = rp - A(R), with M_ik = <A_i, X A_k Z^-1>.
    """

    constraints: Sequence[RealMatrix]
    xs: list[RealMatrix]
    zinv: list[RealMatrix]
    rp: RealMatrix
    rd: list[RealMatrix]
    mu: float
    solve: Any

    def direction(self, sigma: float, corrections: list[RealMatrix] | None):
        target = [sigma * self.mu * zi - x for x, zi in zip(self.xs, self.zinv, strict=True)]
        if corrections is not None:
            target = [t - c @ zi for t, c, zi in zip(target, corrections, self.zinv, strict=True)]

        rc = [
            t - x @ r @ zi for t, x, r, zi in zip(target, self.xs, self.rd, self.zinv, strict=True)
        ]
        dy = self.solve(self.rp - _apply_constraints(self.constraints, rc))
        atdy = _apply_adjoint(self.constraints, dy)
        dz = [r - g for r, g in zip(self.rd, atdy, strict=True)]
        dx = [
            _sym(t - x @ d @ zi) for t, x, d, zi in zip(target, self.xs, dz, self.zinv, strict=True)
        ]
        return dx, dy, dz


def _interior_point(
    p: SdpProblem, constraints: Sequence[RealMatrix], rhs: RealMatrix, options: SolverOptions
) -> SdpSolution:
    """Run the predictor-corrector iteration on an already reduced problem."""
    objective = list(p.objective)
    m = rhs.size
    total = sum(p.block_sizes)
    flat = [a.reshape(m, -1) for a in constraints]
    b_scale = 1 + float(np.linalg.norm(rhs))
    c_scale = 1 + _norm(objective)

    xs, zs = _initial_point(p, constraints, rhs)
    y = np.zeros(m)
    status = SolverStatus.MAX_ITERATIONS
    iteration = 0
    measures = (np.inf, np.inf, np.inf)

    for iteration in range(1, options.max_iterations + 1):
        aty = _apply_adjoint(constraints, y)
        rp = rhs - _apply_constraints(constraints, xs)
        rd = [c - g - z for c, g, z in zip(objective, aty, zs, strict=True)]
        xz = _inner(xs, zs)
        mu = xz / total
        pobj = _inner(objective, xs)
        dobj = float(rhs @ y)
        measures = (
            float(np.linalg.norm(rp)) / b_scale,
            _norm(rd) / c_scale,
            xz / (1 + abs(pobj) + abs(dobj)),
        )
        logger.debug(
            f"iter {iteration:3d}: pobj={pobj:+.9e} dobj={dobj:+.9e} "
            f"pinf={measures[0]:.2e} dinf={measures[1]:.2e} gap={measures[2]:.2e}"
        )
        if max(measures) <= options.tolerance:
            status = SolverStatus.OPTIMAL
            break
        if max(abs(pobj), abs(dobj)) > DIVERGENCE_BOUND:
            logger.debug(f"Objective diverged at iteration {iteration}")
            break

        zinv = [_sym(np.linalg.inv(z)) for z in zs]
        schur = np.zeros((m, m))
        for a3, a2, x, zi in zip(constraints, flat, xs, zinv, strict=True):
            g = x @ a3 @ zi
            schur += a2 @ g.reshape(m, -1).T
        schur = _sym(schur)
        solve = _schur_solver(schur, iteration)

        newton = _Newton(constraints, xs, zinv, rp, rd, mu, solve)
        dxa, dya, dza = newton.direction(0.0, None)
        if not np.all(np.isfinite(dya)):
            raise SingularSystemError(float(np.linalg.cond(schur)), iteration)
        ap = min(1.0, _max_step(xs, dxa))
        ad = min(1.0, _max_step(zs, dza))
        mu_aff = _inner(
            [x + ap * d for x, d in zip(xs, dxa, strict=True)],
            [z + ad * d for z, d in zip(zs, dza, strict=True)],
        ) / total
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        corrections = [dx @ dz for dx, dz in zip(dxa, dza, strict=True)]
        dx, dy, dz = newton.direction(sigma, corrections)
        if not np.all(np.isfinite(dy)):
            raise SingularSystemError(float(np.linalg.cond(schur)), iteration)
        gamma = min(0.99, max(options.step_fraction, 0.9 + 0.09 * min(ap, ad)))
        ap = min(1.0, gamma * _max_step(xs, dx))
        ad = min(1.0, gamma * _max_step(zs, dz))
        logger.debug(f"iter {iteration:3d}: sigma={sigma:.3e} step_p={ap:.3e} step_d={ad:.3e}")

        xs = [_sym(x + ap * d) for x, d in zip(xs, dx, strict=True)]
        y = y + ad * dy
        zs = [_sym(z + ad * d) for z, d in zip(zs, dz, strict=True)]

        if max(ap, ad) < 1e-10:
            logger.debug(f"Step length collapsed at iteration {iteration}")
            break

    if status != SolverStatus.OPTIMAL and max(measures) <= ACCEPTABLE_ACCURACY:
        status = SolverStatus.OPTIMAL

    rp = rhs - _apply_constraints(constraints, xs)
    rd = [c - g - z for c, g, z in zip(objective, _apply_adjoint(constraints, y), zs, strict=True)]
    return SdpSolution(
        status=status,
        x=tuple(xs),
        y=y,
        z=tuple(zs),
        primal_objective=_inner(objective, xs),
        dual_objective=float(rhs @ y),
        gap=_inner(xs, zs),
        primal_residual=float(np.linalg.norm(rp)) / b_scale,
        dual_residual=_norm(rd) / c_scale,
        iterations=iteration,
    )


@dataclass(frozen=True)
class _Reduction:
    keep: NDArray[np.intp]
    farkas: RealMatrix | None = field(default=None)


def _reduce_constraints(p: SdpProblem, options: SolverOptions) -> _Reduction:
    """
    Drop linearly dependent constraints (pivoted QR).

    A dependent constraint whose right-hand side disagrees with the combination
    of kept rows makes the problem infeasible; the combination is returned as
    an exact Farkas ray.
    """
    m = p.num_constraints
    amat = np.hstack([a.reshape(m, -1) for a in p.constraints])
    _, r, piv = scipy.linalg.qr(amat.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise SolverFailure("invalid", "all constraint matrices vanish")
    rank = int(np.sum(diag > options.rank_tolerance * diag[0]))
    keep = np.sort(piv[:rank])
    dropped = np.sort(piv[rank:])
    if dropped.size == 0:
        return _Reduction(keep=keep)

    logger.debug(f"Dropping {dropped.size} dependent constraints of {m}")
    coef = scipy.linalg.lstsq(amat[keep].T, amat[dropped].T)[0]
    mismatch = p.rhs[dropped] - coef.T @ p.rhs[keep]
    worst = int(np.argmax(np.abs(mismatch)))
    scale = 1 + float(np.max(np.abs(p.rhs)))
    if abs(mismatch[worst]) <= options.tolerance * scale:
        return _Reduction(keep=keep)

    ray = np.zeros(m)
    ray[dropped[worst]] = 1.0
    ray[keep] = -coef[:, worst]
    ray /= mismatch[worst]
    logger.info(f"Constraints are linearly inconsistent (mismatch {mismatch[worst]:.3e})")
    return _Reduction(keep=keep, farkas=ray / np.linalg.norm(ray))


def _optimize(p: SdpProblem, options: SolverOptions) -> SdpSolution:
    reduction = _reduce_constraints(p, options)
    if reduction.farkas is not None:
        empty = tuple(np.zeros((n, n)) for n in p.block_sizes)
        return SdpSolution(
            status=SolverStatus.INFEASIBLE,
            x=empty,
            y=reduction.farkas,
            z=empty,
            primal_objective=np.inf,
            dual_objective=np.inf,
            gap=np.nan,
            primal_residual=np.nan,
            dual_residual=np.nan,
            iterations=0,
            farkas=reduction.farkas,
        )

    keep = reduction.keep
    constraints = [a[keep] for a in p.constraints]
    sol = _interior_point(p, constraints, p.rhs[keep], options)
    y = np.zeros(p.num_constraints)
    y[keep] = sol.y
    return SdpSolution(
        status=sol.status,
        x=sol.x,
        y=y,
        z=sol.z,
        primal_objective=sol.primal_objective,
        dual_objective=sol.dual_objective,
        gap=sol.gap,
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
        iterations=sol.iterations,
    )


def _phase_one(p: SdpProblem) -> SdpProblem:
    """
    min t  s.t.  A(W) - t A(I) = b,  W >= 0,  t >= 0.

    Any X with A(X) = b gives the feasible point W = X + tI for t large enough.
    """
    shift = -sum(np.trace(a, axis1=1, axis2=2) for a in p.constraints)
    return SdpProblem(
        block_sizes=(*p.block_sizes, 1),
        objective=(*(np.zeros((n, n)) for n in p.block_sizes), np.ones((1, 1))),
        constraints=(*p.constraints, shift.reshape(-1, 1, 1)),
        rhs=p.rhs,
    )


def check_feasible(p: SdpProblem, options: SolverOptions | None = None) -> Feasibility:
    """
    Decide whether {X >= 0 : A(X) = b} is nonempty.

    The objective of ``p`` is ignored.

    Args:
        p: Problem whose constraints define the feasible set
        options: Solver options (default: current settings)

    Returns:
        Feasibility with a point X or a Farkas witness y

    Raises:
        SolverFailure: If the phase-I program itself does not converge
    """
    options = options or get_settings().solver
    sol = _optimize(_phase_one(p), options)

    if sol.status == SolverStatus.INFEASIBLE:
        return Feasibility(feasible=False, x=None, y=sol.farkas, shift=np.inf, solution=sol)
    if not sol.optimal:
        raise SolverFailure(str(sol.status), "phase-I program did not converge", sol.diagnostics())

    shift = float(sol.x[-1][0, 0])
    if shift < options.phase_one_threshold:
        xs = tuple(w - shift * np.eye(len(w)) for w in sol.x[:-1])
        logger.debug(f"Phase-I feasible (shift {shift:.3e})")
        return Feasibility(feasible=True, x=xs, y=None, shift=shift, solution=sol)

    logger.debug(f"Phase-I infeasible (shift {shift:.3e}, b'y {sol.dual_objective:.3e})")
    return Feasibility(feasible=False, x=None, y=sol.y, shift=shift, solution=sol)


def solve(p: SdpProblem, options: SolverOptions | None = None) -> SdpSolution:
    """
    Solve a block SDP.

    Args:
        p: Problem in standard form
        options: Solver options (default: current settings)

    Returns:
        Solution with status ``optimal``, ``infeasible`` (``farkas`` set) or
        ``max-iterations`` (best iterate)

    Raises:
        SingularSystemError: If the Newton system cannot be solved
    """
    options = options or get_settings().solver
    sol = _optimize(p, options)
    if sol.optimal or sol.status == SolverStatus.INFEASIBLE:
        return sol

    feasibility = check_feasible(p, options)
    if feasibility.feasible or feasibility.y is None:
        logger.warning(f"SDP stopped without convergence after {sol.iterations} iterations")
        return sol

    ray = feasibility.y / np.linalg.norm(feasibility.y)
    if float(p.rhs @ ray) < 1e-6:
        return sol
    logger.info("SDP is primal infeasible")
    return SdpSolution(
        status=SolverStatus.INFEASIBLE,
        x=sol.x,
        y=sol.y,
        z=sol.z,
        primal_objective=sol.primal_objective,
        dual_objective=sol.dual_objective,
        gap=sol.gap,
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
        iterations=sol.iterations,
        farkas=ray,
    )


def verify_farkas(p: SdpProblem, y: RealMatrix, tol: float = 1e-8) -> bool:
    """
    Check an infeasibility certificate without trusting the solver.

    After scaling y so that b'y = 1, every block of A*(y) must be negative
    semidefinite up to ``tol`` times the size of the combination.
    """
    y = np.asarray(y, dtype=float)
    value = float(p.rhs @ y)
    if not np.isfinite(value) or value <= 0:
        return False
    y = y / value
    scale = 1 + sum(
        float(np.sum(np.abs(y) * np.sqrt(np.sum(a * a, axis=(1, 2))))) for a in p.constraints
    )
    worst = max(float(np.linalg.eigvalsh(g)[-1]) for g in p.adjoint_map(y))
    return worst <= tol * scale


# --- Hermitian program builder ----------------------------------------------


@dataclass
class _Equality:
    rows: list[int]
    basis: list[Operator]


class HermitianProgram:
    """
    Builder for SDPs over complex Hermitian blocks and nonnegative scalars.

    Hermitian blocks become real symmetric blocks of twice the size; each
    matrix equality is expanded over an orthonormal Hermitian basis so that
    dual multipliers map back to Hermitian operators.
    """

    def __init__(self):
        self._sizes: list[int | None] = []
        self._costs: list[Operator | float] = []
        self._rows: list[tuple[dict[int, RealMatrix], float]] = []
        self._equalities: list[_Equality] = []

    def add_hermitian_block(self, n: int, cost: Operator | None = None) -> int:
        """Add a PSD n x n Hermitian variable; returns its block handle."""
        c = np.zeros((n, n), dtype=complex) if cost is None else np.asarray(cost, dtype=complex)
        if c.shape != (n, n):
            raise DimensionMismatchError(f"cost of shape {c.shape} for a {n}x{n} block")
        self._sizes.append(n)
        self._costs.append(c)
        return len(self._sizes) - 1

    def add_scalar(self, cost: float = 0.0) -> int:
        """Add a nonnegative scalar variable; returns its block handle."""
        self._sizes.append(None)
        self._costs.append(float(cost))
        return len(self._sizes) - 1

    def _matrix_coefficient(self, block: int, coefficient, basis_element: Operator) -> RealMatrix:
        if self._sizes[block] is None:
            g = np.asarray(coefficient, dtype=complex)
            return np.array([[np.trace(basis_element @ g).real]])
        n = self._sizes[block]
        if basis_element.shape != (n, n):
            raise DimensionMismatchError(
                f"{basis_element.shape[0]}-dimensional equality on a {n}-dimensional block"
            )
        return float(np.real(coefficient)) * embed_complex(basis_element) / 2

    def add_matrix_equality(self, terms: Sequence[tuple[int, Any]], rhs: Operator) -> int:
        """
        Add sum(terms) = rhs as an equality of Hermitian matrices.

        Args:
            terms: (block, coefficient) pairs; the coefficient is a real scalar
                for Hermitian blocks and a Hermitian matrix for scalar blocks
            rhs: Hermitian right-hand side

        Returns:
            Handle for :meth:`dual_matrix`
        """
        rhs = np.asarray(rhs, dtype=complex)
        basis = hermitian_basis(rhs.shape[0])
        rows = []
        for element in basis:
            coefficients: dict[int, RealMatrix] = {}
            for block, coefficient in terms:
                entry = self._matrix_coefficient(block, coefficient, element)
                coefficients[block] = coefficients.get(block, 0) + entry
            self._rows.append((coefficients, float(np.trace(element @ rhs).real)))
            rows.append(len(self._rows) - 1)
        self._equalities.append(_Equality(rows=rows, basis=basis))
        return len(self._equalities) - 1

    def add_scalar_equality(self, terms: Sequence[tuple[int, Any]], rhs: float) -> int:
        """
        Add sum_j Tr(Q_j H_j) + sum_k c_k s_k = rhs.

        Hermitian blocks take a Hermitian matrix Q_j, scalar blocks a real c_k.
        """
        coefficients: dict[int, RealMatrix] = {}
        for block, coefficient in terms:
            if self._sizes[block] is None:
                entry = np.array([[float(np.real(coefficient))]])
            else:
                entry = embed_complex(np.asarray(coefficient, dtype=complex)) / 2
            coefficients[block] = coefficients.get(block, 0) + entry
        self._rows.append((coefficients, float(rhs)))
        self._equalities.append(_Equality(rows=[len(self._rows) - 1], basis=[np.ones((1, 1))]))
        return len(self._equalities) - 1

    def to_problem(self) -> SdpProblem:
        sizes = tuple(1 if n is None else 2 * n for n in self._sizes)
        m = len(self._rows)
        objective = []
        for n, cost in zip(self._sizes, self._costs, strict=True):
            objective.append(np.array([[cost]]) if n is None else embed_complex(cost) / 2)
        constraints = [np.zeros((m, s, s)) for s in sizes]
        rhs = np.zeros(m)
        for i, (coefficients, value) in enumerate(self._rows):
            for block, entry in coefficients.items():
                constraints[block][i] = entry
            rhs[i] = value
        return SdpProblem(
            block_sizes=sizes, objective=tuple(objective), constraints=tuple(constraints), rhs=rhs
        )

    def hermitian_value(self, xs: Sequence[RealMatrix], block: int) -> Operator:
        return unembed_complex(xs[block])

    def scalar_value(self, xs: Sequence[RealMatrix], block: int) -> float:
        return float(xs[block][0, 0])

    def dual_matrix(self, y: RealMatrix, handle: int) -> Operator:
        """Hermitian multiplier sum_r y_r B_r of a matrix equality."""
        equality = self._equalities[handle]
        out = sum(y[row] * element for row, element in zip(equality.rows, equality.basis, strict=True))
        return (out + out.conj().T) / 2
