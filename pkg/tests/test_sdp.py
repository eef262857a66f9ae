import numpy as np
import pytest
from numpy.testing import assert_allclose

from channel_steering.errors import DimensionMismatchError, NotHermitianError
from channel_steering.linalg import PAULI
from channel_steering.sdp import (
    HermitianProgram,
    SdpProblem,
    SolverStatus,
    check_feasible,
    embed_complex,
    solve,
    unembed_complex,
    verify_farkas,
)
from channel_steering.samplers import random_density


def _trace_problem(cost, rhs=1.0):
    n = len(cost)
    return SdpProblem(
        block_sizes=(n,),
        objective=(np.asarray(cost, dtype=float),),
        constraints=(np.eye(n).reshape(1, n, n),),
        rhs=np.array([rhs]),
    )


def _random_feasible_problem(rng, sizes, m):
    """Problem with strictly feasible primal and dual by construction."""
    constraints, x0, z0 = [], [], []
    for n in sizes:
        a = rng.normal(size=(m, n, n))
        constraints.append((a + a.transpose(0, 2, 1)) / 2)
        g = rng.normal(size=(n, n))
        x0.append(g @ g.T + np.eye(n))
        h = rng.normal(size=(n, n))
        z0.append(h @ h.T + np.eye(n))
    y0 = rng.normal(size=m)
    rhs = np.array([sum(np.sum(a[i] * x) for a, x in zip(constraints, x0, strict=True)) for i in range(m)])
    objective = tuple(z + np.einsum("i,ijk->jk", y0, a) for z, a in zip(z0, constraints, strict=True))
    return SdpProblem(tuple(sizes), objective, tuple(constraints), rhs)


def test_minimum_eigenvalue_program():
    sol = solve(_trace_problem(np.diag([3.0, 1.0, 2.0])))
    assert sol.status == SolverStatus.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    assert sol.dual_objective == pytest.approx(1.0, abs=1e-7)
    assert_allclose(sol.x[0], np.diag([0.0, 1.0, 0.0]), atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_random_feasible_problems_converge(seed):
    rng = np.random.default_rng(seed)
    p = _random_feasible_problem(rng, sizes=(3, 2), m=4)
    sol = solve(p)
    assert sol.optimal
    assert sol.primal_residual <= 1e-7
    assert sol.dual_residual <= 1e-7
    assert np.linalg.norm(p.constraint_map(sol.x) - p.rhs) <= 1e-6 * (1 + np.linalg.norm(p.rhs))
    assert abs(sol.primal_objective - sol.dual_objective) <= 1e-6 * (1 + abs(sol.primal_objective))
    # weak duality at the returned pair
    assert sol.primal_objective >= sol.dual_objective - 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(200))
def test_solver_health_sweep(seed):
    rng = np.random.default_rng(1000 + seed)
    sizes = tuple(int(n) for n in rng.integers(1, 17, size=rng.integers(1, 4)))
    m = int(rng.integers(1, 1 + min(60, sum(n * (n + 1) // 2 for n in sizes))))
    p = _random_feasible_problem(rng, sizes, m)
    sol = solve(p)
    assert sol.optimal
    assert max(sol.primal_residual, sol.dual_residual) <= 1e-7
    assert sol.gap <= 1e-8 * (1 + abs(sol.primal_objective) + abs(sol.dual_objective))
    assert np.linalg.norm(p.constraint_map(sol.x) - p.rhs) <= 1e-6 * (1 + np.linalg.norm(p.rhs))


def test_negative_trace_is_infeasible_with_verified_certificate():
    p = _trace_problem(np.eye(2), rhs=-1.0)
    sol = solve(p)
    assert sol.status == SolverStatus.INFEASIBLE
    assert sol.farkas is not None
    assert verify_farkas(p, sol.farkas)

    feasibility = check_feasible(p)
    assert not feasibility.feasible
    assert verify_farkas(p, feasibility.y)


def test_inconsistent_equalities_give_exact_ray():
    a = np.eye(2).reshape(1, 2, 2)
    p = SdpProblem((2,), (np.eye(2),), (np.concatenate([a, a]),), np.array([1.0, 2.0]))
    sol = solve(p)
    assert sol.status == SolverStatus.INFEASIBLE
    assert verify_farkas(p, sol.farkas)


@pytest.mark.parametrize("seed", range(20))
def test_constructed_infeasible_problems(seed):
    """<rho, X> < 0 with rho > 0 has no PSD solution."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    rho = random_density(n, seed=rng).real
    rho = (rho + rho.T) / 2 + np.eye(n) * 0.1
    extra = rng.normal(size=(n, n))
    p = SdpProblem(
        (n,),
        (np.eye(n),),
        (np.stack([rho, (extra + extra.T) / 2]),),
        np.array([-float(rng.uniform(0.1, 1.0)), float(rng.normal())]),
    )
    feasibility = check_feasible(p)
    assert not feasibility.feasible
    assert verify_farkas(p, feasibility.y, tol=1e-6)


def test_verify_farkas_rejects_non_certificates():
    p = _trace_problem(np.eye(2), rhs=1.0)
    assert not verify_farkas(p, np.array([1.0]))
    assert not verify_farkas(p, np.array([-1.0]))


def test_check_feasible_returns_a_point():
    p = _trace_problem(np.eye(3), rhs=2.0)
    feasibility = check_feasible(p)
    assert feasibility.feasible
    x = feasibility.x[0]
    assert np.trace(x) == pytest.approx(2.0, abs=1e-7)
    assert np.linalg.eigvalsh(x)[0] >= -1e-7


def test_problem_validation():
    with pytest.raises(NotHermitianError):
        SdpProblem((2,), (np.array([[0.0, 1.0], [0.0, 0.0]]),), (np.eye(2).reshape(1, 2, 2),), [1.0])
    with pytest.raises(DimensionMismatchError):
        SdpProblem((2,), (np.eye(3),), (np.eye(2).reshape(1, 2, 2),), [1.0])
    with pytest.raises(DimensionMismatchError):
        SdpProblem((2,), (np.eye(2),), (np.zeros((0, 2, 2)),), [])


def _random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def test_complex_embedding_preserves_spectrum():
    h = random_density(3, seed=4) - 0.2 * np.eye(3)
    big = embed_complex(h)
    assert_allclose(big, big.T)
    expected = np.sort(np.repeat(np.linalg.eigvalsh(h), 2))
    assert_allclose(np.linalg.eigvalsh(big), expected, atol=1e-12)
    assert_allclose(unembed_complex(big), h, atol=1e-15)
    with pytest.raises(NotHermitianError):
        embed_complex(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("seed", range(200))
def test_complex_embedding_is_an_order_isomorphism(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    a, b = _random_hermitian(rng, n), _random_hermitian(rng, n)
    big_a, big_b = embed_complex(a), embed_complex(b)

    expected = np.sort(np.repeat(np.linalg.eigvalsh(a), 2))
    assert_allclose(np.linalg.eigvalsh(big_a), expected, atol=1e-10)
    assert np.trace(big_a @ big_b) == pytest.approx(2 * np.trace(a @ b).real, abs=1e-10)
    assert_allclose(unembed_complex(big_a), a, atol=1e-14)

    # a PSD shift of a stays PSD after embedding, a negative one does not
    lowest = np.linalg.eigvalsh(a)[0]
    assert np.linalg.eigvalsh(embed_complex(a - lowest * np.eye(n) + 1e-3 * np.eye(n)))[0] > 0
    assert np.linalg.eigvalsh(embed_complex(a - lowest * np.eye(n) - 1e-3 * np.eye(n)))[0] < 0


def test_hermitian_program_minimizes_over_states():
    prog = HermitianProgram()
    block = prog.add_hermitian_block(2, cost=PAULI["y"])
    prog.add_scalar_equality([(block, np.eye(2))], 1.0)
    sol = solve(prog.to_problem())
    assert sol.optimal
    assert sol.primal_objective == pytest.approx(-1.0, abs=1e-7)
    rho = prog.hermitian_value(sol.x, block)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-7)
    assert np.trace(PAULI["y"] @ rho).real == pytest.approx(-1.0, abs=1e-6)


def test_hermitian_program_matrix_equality_and_duals():
    """min t  s.t.  X - t I = -sigma/2 with X >= 0: t = lambda_max(sigma)/2."""
    sigma = random_density(2, seed=9)
    prog = HermitianProgram()
    x = prog.add_hermitian_block(2)
    t = prog.add_scalar(cost=1.0)
    handle = prog.add_matrix_equality([(x, 1.0), (t, -np.eye(2))], -sigma / 2)
    sol = solve(prog.to_problem())
    assert sol.optimal
    assert prog.scalar_value(sol.x, t) == pytest.approx(np.linalg.eigvalsh(sigma)[-1] / 2, abs=1e-7)
    dual = prog.dual_matrix(sol.y, handle)
    # dual feasibility: -F >= 0 and 1 + Tr F >= 0; dual value Tr(F (-sigma/2)) = optimum
    assert np.linalg.eigvalsh(dual)[-1] <= 1e-7
    assert np.trace(dual @ (-sigma / 2)).real == pytest.approx(sol.primal_objective, abs=1e-6)
