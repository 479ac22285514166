"""Dense complex linear algebra helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``, square and
two-dimensional. Every constructor in the package returns fresh arrays and
never mutates its inputs, so values can be shared freely.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable

import numpy as np

from .errors import ContractViolation, DimensionCapError

HERMITIAN_TOL = 1e-10
ALGEBRA_TOL = 1e-12
DIM_CAP = 2**16

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a square complex128 array, or raise."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ContractViolation(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def ket(vector) -> np.ndarray:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return v


def projector(vector) -> np.ndarray:
    """Rank-one projector onto a (normalised) state vector."""
    v = ket(vector)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ContractViolation("cannot project onto the zero vector")
    v = v / norm
    return np.outer(v, np.conj(v))


def kron(a: np.ndarray, b: np.ndarray, cap: int = DIM_CAP) -> np.ndarray:
    """Kronecker product with a guard on the output dimension."""
    a = as_matrix(a)
    b = as_matrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim > cap:
        raise DimensionCapError(f"kron output dimension {dim} exceeds cap {cap}")
    return np.kron(a, b)


def kron_all(ops: Iterable[np.ndarray], cap: int = DIM_CAP) -> np.ndarray:
    ops = list(ops)
    if not ops:
        return identity(1)
    return reduce(lambda x, y: kron(x, y, cap), ops)


def kron_power(a: np.ndarray, n: int, cap: int = DIM_CAP) -> np.ndarray:
    return kron_all([a] * n, cap)


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, dagger(m), rtol=0, atol=tol)


def hermitian_eigenvalues(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, in descending order.

    Raises:
        ContractViolation: if ``m`` is not Hermitian within ``tol``.
    """
    m = as_matrix(m)
    if not is_hermitian(m, tol):
        raise ContractViolation("hermitian_eigenvalues requires a Hermitian matrix")
    h = (m + dagger(m)) / 2
    # real symmetric input takes the cheaper real path; the spectrum is identical
    if not np.any(h.imag):
        vals = np.linalg.eigvalsh(h.real)
    else:
        vals = np.linalg.eigvalsh(h)
    return vals[::-1].copy()


def trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(ab) without forming the product."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.einsum("ij,ji->", a, b))


def is_psd(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return is_hermitian(m, tol) and hermitian_eigenvalues(m, tol)[-1] >= -tol


def is_density_matrix(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return abs(np.trace(m) - 1) <= tol and is_psd(m, tol)


def is_projector(m: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    return is_hermitian(m, tol) and np.allclose(m @ m, m, rtol=0, atol=tol)


def embed_at(factor: np.ndarray, rest: np.ndarray, position: int, n_sites: int,
             site_dim: int) -> np.ndarray:
    """Place ``factor`` on site ``position`` (0-based) of an ``n_sites`` register.

    ``rest`` acts on the remaining ``n_sites - 1`` sites in their natural
    order. The result equals ``kron`` of the per-site operators with ``factor``
    inserted at ``position``, computed by one Kronecker product followed by an
    axis permutation.
    """
    if not 0 <= position < n_sites:
        raise ContractViolation(f"position {position} outside register of {n_sites} sites")
    if factor.shape != (site_dim, site_dim):
        raise ContractViolation("factor does not match site dimension")
    if rest.shape != (site_dim ** (n_sites - 1),) * 2:
        raise ContractViolation("rest does not match the remaining sites")
    full = kron(factor, rest)
    if position == 0:
        return full
    d = site_dim
    t = full.reshape((d,) * (2 * n_sites))
    # current site order is [position, others...]; move the first site into place
    order = list(range(1, n_sites))
    order.insert(position, 0)
    axes = order + [n_sites + i for i in order]
    dim = d**n_sites
    return np.ascontiguousarray(t.transpose(axes)).reshape(dim, dim)
