"""
Seeded random generators for states, isometries, Kraus sets and POVMs.

Everything is deterministic per seed. Generators return plain arrays; the
typed constructors in ``channels`` and ``steering`` wrap them.
"""

import numpy as np
from scipy.stats import unitary_group

from channel_steering.linalg import Operator

Seed = int | np.random.Generator | None


def rng_from(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def haar_unitary(dim: int, seed: Seed = None) -> Operator:
    if dim == 1:
        phase = rng_from(seed).uniform(0, 2 * np.pi)
        return np.array([[np.exp(1j * phase)]])
    return np.asarray(unitary_group.rvs(dim, random_state=rng_from(seed)), dtype=complex)


def haar_isometry(d_out: int, d_in: int, seed: Seed = None) -> Operator:
    """First ``d_in`` columns of a Haar unitary on the output space."""
    if d_out < d_in:
        raise ValueError(f"no isometry from dimension {d_in} into {d_out}")
    return haar_unitary(d_out, seed)[:, :d_in]


def random_pure_state(d: int, seed: Seed = None) -> Operator:
    v = haar_unitary(d, seed)[:, 0].reshape(-1, 1)
    return v @ v.conj().T


def random_density(d: int, seed: Seed = None, rank: int | None = None) -> Operator:
    """Induced-measure density matrix of the given rank (full rank by default)."""
    rng = rng_from(seed)
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_kraus(d_in: int, d_out: int, count: int, seed: Seed = None) -> list[Operator]:
    """Kraus operators K_i read off a Haar isometry V = sum_i |i> (x) K_i."""
    v = haar_isometry(count * d_out, d_in, seed)
    return [v[i * d_out : (i + 1) * d_out, :] for i in range(count)]


def random_instrument_kraus(
    d_in: int, d_out: int, members: int, rank: int = 1, seed: Seed = None
) -> list[list[Operator]]:
    """Kraus sets of an instrument with ``members`` outcomes, each of ``rank`` operators."""
    ops = random_kraus(d_in, d_out, members * rank, seed)
    return [ops[i * rank : (i + 1) * rank] for i in range(members)]


def random_povm(d: int, outcomes: int, seed: Seed = None) -> list[Operator]:
    effects = []
    for k in random_kraus(d, d, outcomes, seed):
        e = k.conj().T @ k
        effects.append((e + e.conj().T) / 2)
    return effects


def random_povm_family(d: int, settings: int, outcomes: int, seed: Seed = None) -> list[list[Operator]]:
    rng = rng_from(seed)
    return [random_povm(d, outcomes, rng) for _ in range(settings)]


def random_pauli_probabilities(seed: Seed = None) -> list[float]:
    return list(rng_from(seed).dirichlet(np.ones(4)))
