"""
Dense complex-matrix kernel.

Operators are plain ``numpy`` arrays of dtype complex128; subsystem structure
travels alongside as a ``DimSpec`` tuple. Tensor factors are ordered as listed
in the DimSpec, first factor most significant (``np.kron`` convention).
"""

import logging
from collections.abc import Iterable, Sequence
from math import prod

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from channel_steering.errors import DimensionMismatchError, NotHermitianError
from channel_steering.settings import get_settings

logger = logging.getLogger(__name__)

Operator = NDArray[np.complex128]
DimSpec = tuple[int, ...]

PAULI: dict[str, Operator] = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def as_operator(data: ArrayLike) -> Operator:
    """
    Convert input to a finite complex matrix.

    Args:
        data: Anything ``numpy`` can turn into a 2-D array

    Returns:
        A fresh complex128 array

    Raises:
        DimensionMismatchError: If the input is not two-dimensional
        ValueError: If any entry is NaN or infinite
    """
    m = np.array(data, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionMismatchError(f"operator must be a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def frozen(m: ArrayLike) -> Operator:
    """Return a read-only complex copy, for storage in immutable value types."""
    out = as_operator(m)
    out.setflags(write=False)
    return out


def dims_of(m: Operator, dims: Sequence[int]) -> DimSpec:
    """Validate a DimSpec against a square operator and return it as a tuple."""
    spec = tuple(int(d) for d in dims)
    if any(d < 1 for d in spec):
        raise DimensionMismatchError(f"dimensions must be positive, got {spec}")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square operator, got shape {m.shape}")
    if prod(spec) != m.shape[0]:
        raise DimensionMismatchError(f"dims {spec} do not match operator side {m.shape[0]}")
    return spec


def hermitian_part(m: Operator) -> Operator:
    return (m + m.conj().T) / 2


def hermiticity_error(m: Operator) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def fro(m: ArrayLike) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def kron(*ops: ArrayLike) -> Operator:
    """Kronecker product of any number of operators, left to right."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def ket(index: int, dim: int) -> Operator:
    v = np.zeros((dim, 1), dtype=complex)
    v[index, 0] = 1.0
    return v


def projector(vector: ArrayLike) -> Operator:
    v = np.asarray(vector, dtype=complex).reshape(-1, 1)
    return v @ v.conj().T


def partial_trace(m: Operator, dims: Sequence[int], keep: Iterable[int]) -> Operator:
    """
    Trace out every subsystem not listed in ``keep``.

    Args:
        m: Square operator on the product space described by ``dims``
        dims: Subsystem dimensions
        keep: Indices of subsystems to keep (order of ``dims`` is preserved)

    Returns:
        Reduced operator; a 1x1 matrix holding the trace when nothing is kept
    """
    spec = dims_of(m, dims)
    kept = sorted(set(keep))
    if any(i < 0 or i >= len(spec) for i in kept):
        raise DimensionMismatchError(f"keep {kept} out of range for {len(spec)} subsystems")

    n = len(spec)
    t = m.reshape(spec + spec)
    traced = [i for i in range(n) if i not in kept]
    for offset, axis in enumerate(traced):
        current = n - offset
        ax = axis - offset
        t = np.trace(t, axis1=ax, axis2=ax + current)
    side = prod(spec[i] for i in kept)
    return t.reshape(side, side)


def partial_transpose(m: Operator, dims: Sequence[int], subsystem: int | Iterable[int]) -> Operator:
    """Transpose the chosen tensor factor(s); involutive."""
    spec = dims_of(m, dims)
    targets = {subsystem} if isinstance(subsystem, int) else set(subsystem)
    n = len(spec)
    if any(i < 0 or i >= n for i in targets):
        raise DimensionMismatchError(f"subsystem {sorted(targets)} out of range for {n} subsystems")

    axes = list(range(2 * n))
    for i in targets:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    side = m.shape[0]
    return m.reshape(spec + spec).transpose(axes).reshape(side, side)


def permute_subsystems(m: Operator, dims: Sequence[int], order: Sequence[int]) -> Operator:
    """
    Reorder tensor factors.

    ``order[k]`` names the old subsystem that becomes factor ``k``.
    """
    spec = dims_of(m, dims)
    n = len(spec)
    if sorted(order) != list(range(n)):
        raise DimensionMismatchError(f"order {list(order)} is not a permutation of {n} subsystems")
    axes = list(order) + [n + i for i in order]
    side = m.shape[0]
    return m.reshape(spec + spec).transpose(axes).reshape(side, side)


def _require_hermitian(m: Operator, tol: float) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square operator, got shape {m.shape}")
    deviation = hermiticity_error(m)
    if deviation > tol:
        raise NotHermitianError(f"operator deviates from Hermitian by {deviation:.3e} (> {tol:.1e})")


def eig_hermitian(m: Operator) -> tuple[NDArray[np.float64], Operator]:
    """
    Spectral decomposition of a Hermitian operator.

    Returns:
        (eigenvalues ascending, eigenvectors as columns)

    Raises:
        NotHermitianError: If max |m - m†| exceeds the Hermiticity tolerance
    """
    m = np.asarray(m, dtype=complex)
    _require_hermitian(m, get_settings().tolerances.hermitian)
    w, v = scipy.linalg.eigh(hermitian_part(m))
    return w, v


def eigvalsh(m: Operator) -> NDArray[np.float64]:
    """Eigenvalues of the Hermitian part, ascending (no Hermiticity check)."""
    return scipy.linalg.eigvalsh(hermitian_part(np.asarray(m, dtype=complex)))


def min_eigenvalue(m: Operator) -> float:
    return float(eigvalsh(m)[0])


def is_psd(m: Operator, tol: float | None = None) -> bool:
    """
    Positive-semidefiniteness test.

    Args:
        m: Hermitian operator
        tol: Admitted negative eigenvalue (default: settings psd tolerance)

    Returns:
        True iff the minimum eigenvalue is >= -tol
    """
    tol = get_settings().tolerances.psd if tol is None else tol
    m = np.asarray(m, dtype=complex)
    _require_hermitian(m, max(tol, get_settings().tolerances.hermitian))
    return min_eigenvalue(m) >= -tol


def psd_sqrt(m: Operator) -> Operator:
    """Square root of a PSD operator (negative eigenvalues clipped)."""
    w, v = scipy.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def clip_psd(m: Operator) -> Operator:
    """Nearest PSD operator in Frobenius norm."""
    w, v = scipy.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def support_isometry(m: Operator, cutoff: float) -> Operator:
    """Columns spanning the eigenvectors of ``m`` with eigenvalue above ``cutoff``."""
    w, v = scipy.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    return v[:, w > cutoff]


def max_entangled(d: int) -> Operator:
    """ψ₊ = (1/d) Σ_ij |ii⟩⟨jj|, unit trace, computational basis."""
    v = np.eye(d, dtype=complex).reshape(-1, 1) / np.sqrt(d)
    return v @ v.conj().T


def hermitian_basis(n: int) -> list[Operator]:
    """
    Orthonormal (Hilbert-Schmidt) basis of n x n Hermitian matrices.

    Diagonal units first, then symmetric and antisymmetric off-diagonal pairs.
    """
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    s = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = s
            anti = np.zeros((n, n), dtype=complex)
            anti[j, k] = 1j * s
            anti[k, j] = -1j * s
            basis.extend([sym, anti])
    return basis
