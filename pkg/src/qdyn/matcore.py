"""Dense complex-matrix kernel.

Operators are plain ``numpy`` complex arrays. Bipartite operators are indexed
as ``M[(a, a'), (b, b')]`` with the first factor's index most significant, i.e.
the ordering produced by ``np.kron``.

Eigen- and singular vectors follow one phase convention: in every returned
vector the entry of largest modulus is real and nonnegative (earliest index
wins on ties).
"""
from __future__ import annotations

import os
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotHermitianError

#: relative Hermiticity tolerance, applied as ``||M - M^dag||_F <= HERM_TOL * ||M||_F``
HERM_TOL = 1e-9
#: relative Frobenius tolerance for decomposition round trips
RECON_TOL = 1e-10
#: per-subsystem dimension cap unless overridden by ``QDYN_MAX_DIM``
DEFAULT_MAX_DIM = 16

Selector = Union[int, str]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(name: str) -> np.ndarray:
    """Return a copy of the Pauli matrix ``"I"``, ``"X"``, ``"Y"`` or ``"Z"``."""
    return _PAULI[name.upper()].copy()


def max_dim() -> int:
    value = os.environ.get("QDYN_MAX_DIM")
    return int(value) if value else DEFAULT_MAX_DIM


def as_matrix(M, square: bool = False) -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def dag(M: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(M)).T


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def is_hermitian(M: np.ndarray, tol: float = HERM_TOL) -> bool:
    M = np.asarray(M)
    scale = max(np.linalg.norm(M), 1.0)
    return bool(np.linalg.norm(M - dag(M)) <= tol * scale)


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real and nonnegative."""
    V = np.array(vectors, dtype=complex, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    mag = np.abs(lead)
    phase = np.where(mag > 0, lead / np.where(mag > 0, mag, 1.0), 1.0)
    return V * np.conj(phase)[None, :]


def _check_bipartite(M: np.ndarray, dims: Sequence[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise DimensionError(f"dimensions must be positive, got {dims}")
    n = int(np.prod(dims))
    if M.shape != (n, n):
        raise DimensionError(f"matrix of shape {M.shape} does not match dims {dims}")
    return dims


def _subsystem(which: Selector, count: int) -> int:
    if isinstance(which, str):
        key = which.upper()
        if len(key) != 1 or not "A" <= key <= "Z":
            raise ValueError(f"bad subsystem selector {which!r}")
        k = ord(key) - ord("A")
    else:
        k = int(which)
    if not 0 <= k < count:
        raise ValueError(f"subsystem {which!r} out of range for {count} factors")
    return k


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def partial_trace(M, dims: Sequence[int], which: Selector = "B") -> np.ndarray:
    """Trace out one tensor factor.

    :param M: square operator on the product space ``dims[0] x dims[1] x ...``.
    :param dims: factor dimensions, most significant first.
    :param which: factor to trace out, as an index or a letter (``"A"`` is factor 0).
    :return: operator on the remaining factors.
    """
    M = as_matrix(M, square=True)
    dims = _check_bipartite(M, dims)
    k = _subsystem(which, len(dims))
    n = len(dims)
    T = M.reshape(dims + dims)
    T = np.trace(T, axis1=k, axis2=n + k)
    rest = int(np.prod(dims)) // dims[k]
    return T.reshape(rest, rest)


def partial_transpose(M, dims: Sequence[int], which: Selector = "A") -> np.ndarray:
    """Transpose the selected tensor factor only."""
    M = as_matrix(M, square=True)
    dims = _check_bipartite(M, dims)
    k = _subsystem(which, len(dims))
    n = len(dims)
    axes = list(range(2 * n))
    axes[k], axes[n + k] = axes[n + k], axes[k]
    return M.reshape(dims + dims).transpose(axes).reshape(M.shape)


def eig_hermitian(H) -> Tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a Hermitian matrix.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the eigenvectors
    as the columns of the unitary ``V``, so that ``H = V diag(w) V^dag``.
    Raises :class:`NotHermitianError` if ``H`` is not Hermitian within ``HERM_TOL``.
    """
    H = as_matrix(H, square=True)
    if not is_hermitian(H):
        raise NotHermitianError("eig_hermitian needs a Hermitian matrix")
    w, V = np.linalg.eigh(0.5 * (H + dag(H)))
    order = np.argsort(w, kind="stable")
    return w[order], fix_phase(V[:, order])


def svd(M) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``M = U diag(s) V^dag`` with ``s`` descending.

    Note the third return value is ``V`` itself, not ``V^dag``. Phases are fixed
    on the columns of ``U`` and carried over to ``V``.
    """
    M = as_matrix(M)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    order = np.argsort(-s, kind="stable")
    U, s, V = U[:, order], s[order], dag(Vh)[:, order]
    Uf = fix_phase(U)
    # same rotation on V keeps U diag(s) V^dag invariant
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sum(Uf * np.conj(U), axis=0)
    return Uf, s, V * ratio[None, :]


def expm(M) -> np.ndarray:
    # scipy uses scaling-and-squaring with Pade approximants
    return scipy.linalg.expm(as_matrix(M, square=True))


def trace_distance(rho, sigma) -> float:
    rho = as_matrix(rho, square=True)
    sigma = as_matrix(sigma, square=True)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shapes differ: {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    w = np.linalg.eigvalsh(0.5 * (diff + dag(diff)))
    return float(0.5 * np.sum(np.abs(w)))


def operator_schmidt(sigma, dims: Sequence[int], rtol: float = 1e-12):
    """Write ``sigma`` as a minimal sum of products ``sum_i xi_i (x) chi_i``.

    The operator is reshuffled so that row indices of the result pair the two
    indices of factor A; the singular values of that matrix count the terms.
    Returns a list of ``(xi, chi)`` pairs, strongest term first.
    """
    sigma = as_matrix(sigma, square=True)
    if len(tuple(dims)) != 2:
        raise DimensionError("operator_schmidt needs a bipartite DimPair")
    dA, dB = _check_bipartite(sigma, dims)
    R = sigma.reshape(dA, dB, dA, dB).transpose(0, 2, 1, 3).reshape(dA * dA, dB * dB)
    U, s, V = svd(R)
    if s.size == 0 or s[0] == 0:
        return [(np.zeros((dA, dA), dtype=complex), np.zeros((dB, dB), dtype=complex))]
    keep = s > rtol * s[0]
    return [
        (s[i] * U[:, i].reshape(dA, dA), np.conj(V[:, i]).reshape(dB, dB))
        for i in np.flatnonzero(keep)
    ]


def from_literal(data, vector: bool = False) -> np.ndarray:
    """Parse the nested ``[[ [re, im], ... ], ...]`` matrix literal.

    With ``vector=True`` the literal is one level shallower: ``[[re, im], ...]``.
    A plain real number is accepted wherever an ``[re, im]`` pair is expected.
    """

    def entry(x):
        if isinstance(x, (list, tuple)):
            if len(x) != 2:
                raise ValueError(f"complex entry must be [re, im], got {x!r}")
            return complex(float(x[0]), float(x[1]))
        return complex(float(x))

    if not isinstance(data, (list, tuple)) or not data:
        raise ValueError("literal must be a nonempty list")
    if vector:
        out = np.array([entry(x) for x in data], dtype=complex)
    else:
        if not all(isinstance(row, (list, tuple)) for row in data):
            raise ValueError("matrix literal must be a list of rows")
        rows = [[entry(x) for x in row] for row in data]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix literal")
        out = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise ValueError("literal has non-finite entries")
    return out


def to_literal(M) -> list:
    A = np.asarray(M, dtype=complex)
    if A.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in A]
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]
