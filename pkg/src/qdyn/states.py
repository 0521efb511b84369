"""Pure states, density operators and rho-ensembles.

Covers Schmidt decomposition and purification, steering of ensembles at a
distance (including the construction of the measurement basis that prepares a
prescribed ensemble), and the von Neumann measurement model with the
projection postulate.

Vectors on a composite space are indexed with the first factor most
significant, matching :func:`numpy.kron`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from . import matcore
from .errors import (
    DimensionError,
    InconsistentEnsembleError,
    InvalidStateError,
    IsometryError,
    ZeroProbabilityError,
)
from .sampling import SeedLike, as_rng, haar_isometry

NORM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
#: outcomes less likely than this are dropped rather than normalized
P_FLOOR = 1e-12
#: eigenvalues / Schmidt weights at or below this count as zero
RANK_TOL = 1e-12
ISOMETRY_TOL = 1e-7


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def as_pure_state(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise InvalidStateError("state has non-finite amplitudes")
    if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
        raise InvalidStateError(f"state norm is {np.linalg.norm(v):.3g}, expected 1")
    return v


def normalize(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidStateError("cannot normalize the zero vector")
    return v / n


def density_violations(rho, psd_tol: float = PSD_TOL) -> List[str]:
    """List the density-operator invariants that ``rho`` breaks (empty if valid)."""
    rho = matcore.as_matrix(rho, square=True)
    problems = []
    if not matcore.is_hermitian(rho):
        problems.append("not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        problems.append(f"trace {tr.real:.12g}{tr.imag:+.3g}j != 1")
    lam_min = float(np.linalg.eigvalsh(0.5 * (rho + matcore.dag(rho)))[0])
    if lam_min < -psd_tol:
        problems.append(f"minimum eigenvalue {lam_min:.12g} < 0")
    return problems


def is_density_operator(rho, psd_tol: float = PSD_TOL) -> bool:
    return not density_violations(rho, psd_tol)


def as_density(rho) -> np.ndarray:
    problems = density_violations(rho)
    if problems:
        raise InvalidStateError("invalid density operator: " + "; ".join(problems))
    return matcore.as_matrix(rho)


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of pure states ``{w_i, |psi_i>}``.

    ``states[i]`` is the i-th state vector. States need not be orthogonal.
    ``labels`` optionally records where each item came from, e.g. the basis
    index of a steering outcome.
    """

    weights: np.ndarray
    states: np.ndarray
    labels: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        S = np.array(self.states, dtype=complex)
        if S.ndim == 1:
            S = S[None, :]
        if S.ndim != 2 or S.shape[0] != w.size or w.size == 0:
            raise DimensionError("need one state per weight")
        if np.any(w < 0) or abs(w.sum() - 1.0) > TRACE_TOL:
            raise InconsistentEnsembleError(f"weights must be nonnegative and sum to 1, got sum {w.sum():.15g}")
        norms = np.linalg.norm(S, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise InvalidStateError("ensemble states must be normalized")
        if self.labels is not None and len(self.labels) != w.size:
            raise DimensionError("need one label per weight")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", _frozen(S))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    def __iter__(self):
        return iter(zip(self.weights, self.states))

    def to_dict(self) -> dict:
        return {"weights": [float(w) for w in self.weights],
                "states": [matcore.to_literal(s) for s in self.states]}

    @classmethod
    def from_dict(cls, data: dict) -> "Ensemble":
        states = [matcore.from_literal(s, vector=True) for s in data["states"]]
        return cls(np.asarray(data["weights"], dtype=float), np.array(states))


@dataclass(frozen=True)
class CompositeState:
    """Pure state on a tensor product with factor dimensions ``dims``."""

    vector: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        v = as_pure_state(self.vector)
        if any(d < 1 for d in dims) or v.size != int(np.prod(dims)):
            raise DimensionError(f"vector of length {v.size} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "vector", _frozen(v))

    def density(self) -> np.ndarray:
        return matcore.projector(self.vector)

    def reduced(self, keep: int = 0) -> np.ndarray:
        """Reduced density operator of factor ``keep`` (all other factors traced out)."""
        T = self.vector.reshape(self.dims)
        T = np.moveaxis(T, keep, 0).reshape(self.dims[keep], -1)
        return T @ T.conj().T

    def as_matrix(self) -> np.ndarray:
        """Coefficient matrix ``Psi[a, b]`` of a bipartite state."""
        _require_bipartite(self)
        return self.vector.reshape(self.dims)


def bipartite(vector, dimA: int, dimB: int) -> CompositeState:
    return CompositeState(vector, (dimA, dimB))


def _require_bipartite(psi: CompositeState) -> None:
    if len(psi.dims) != 2:
        raise DimensionError(f"expected a bipartite state, got dims {psi.dims}")


def mix(E: Ensemble) -> np.ndarray:
    """Density operator ``sum_i w_i |psi_i><psi_i|`` of an ensemble."""
    S = E.states
    return (S.T * E.weights) @ S.conj()


def eigen_ensemble(rho) -> Ensemble:
    """Spectral ensemble of ``rho``: nonzero eigenvalues descending with their eigenvectors."""
    w, V = matcore.eig_hermitian(as_density(rho))
    keep = np.flatnonzero(w > RANK_TOL)[::-1]
    weights = w[keep] / w[keep].sum()
    return Ensemble(weights, V[:, keep].T)


class Schmidt(NamedTuple):
    weights: np.ndarray
    left: np.ndarray  # rows: orthonormal states of factor I
    right: np.ndarray  # rows: orthonormal states of factor II


def schmidt(psi: CompositeState) -> Schmidt:
    """Schmidt decomposition ``|Psi> = sum_i sqrt(w_i) |psi_i>|phi_i>``, weights descending."""
    _require_bipartite(psi)
    U, s, V = matcore.svd(psi.as_matrix())
    w = s**2
    keep = w > RANK_TOL
    # Psi[a, b] = sum_i s_i U[a, i] conj(V[b, i])
    return Schmidt(w[keep], U[:, keep].T, np.conj(V[:, keep]).T)


def purify(rho) -> CompositeState:
    """Purification with an ancilla whose dimension equals ``rank(rho)``."""
    E = eigen_ensemble(rho)
    d, r = E.dim, len(E)
    vec = np.zeros((d, r), dtype=complex)
    for k, (w, e) in enumerate(E):
        vec[:, k] = np.sqrt(w) * e
    return CompositeState(normalize(vec.reshape(-1)), (d, r))


def pad_ancilla(psi: CompositeState, ancilla_dim: int) -> CompositeState:
    """Append an ancilla in ``|0>`` to factor II: ``|Psi> -> |Psi>|0>``."""
    _require_bipartite(psi)
    dA, dB = psi.dims
    out = np.zeros((dA, dB, ancilla_dim), dtype=complex)
    out[:, :, 0] = psi.as_matrix()
    return CompositeState(out.reshape(-1), (dA, dB * ancilla_dim))


def _check_basis(basis, dim: int) -> np.ndarray:
    B = np.atleast_2d(np.asarray(basis, dtype=complex))
    if B.shape[1] != dim:
        raise DimensionError(f"basis vectors have length {B.shape[1]}, factor has dim {dim}")
    gram = B.conj() @ B.T
    if np.max(np.abs(gram - np.eye(B.shape[0]))) > NORM_TOL:
        raise InvalidStateError("basis is not orthonormal")
    return B


def _branches(psi: CompositeState, basis) -> Tuple[np.ndarray, np.ndarray]:
    """Unnormalized conditional vectors ``(1 (x) <phi_i|)|Psi>`` (rows) and the basis."""
    _require_bipartite(psi)
    B = _check_basis(basis, psi.dims[1])
    V = (psi.as_matrix() @ B.conj().T).T
    total = float(np.sum(np.abs(V) ** 2))
    if abs(total - 1.0) > NORM_TOL:
        raise InvalidStateError(f"outcome probabilities sum to {total:.15g}; basis does not cover the state")
    return V, B


def outcome_probabilities(psi: CompositeState, basis) -> np.ndarray:
    """``p_i = Tr rho (1 (x) P_phi_i)`` for every basis element, none dropped."""
    V, _ = _branches(psi, basis)
    return np.sum(np.abs(V) ** 2, axis=1)


def steer(psi: CompositeState, basis) -> Ensemble:
    """Ensemble prepared on factor I by measuring factor II in ``basis``.

    Outcome ``i`` occurs with probability ``Tr rho (1 (x) P_phi_i)`` and leaves
    factor I in the normalized conditional state. Outcomes below ``P_FLOOR``
    are dropped; ``labels`` holds the basis index of each kept outcome.
    """
    V, _ = _branches(psi, basis)
    p = np.sum(np.abs(V) ** 2, axis=1)
    kept = np.flatnonzero(p >= P_FLOOR)
    states = V[kept] / np.sqrt(p[kept])[:, None]
    weights = p[kept] / p[kept].sum()
    return Ensemble(weights, states, labels=tuple(int(i) for i in kept))


class HJWBasis(NamedTuple):
    basis: np.ndarray  # rows: orthonormal basis of the (possibly enlarged) factor II
    state: CompositeState  # the input state, padded with an ancilla when enlarged


def hjw_basis(psi: CompositeState, E: Ensemble, tol: float = 1e-8) -> HJWBasis:
    """Measurement basis on factor II that steers factor I into the ensemble ``E``.

    If ``E`` has more elements than factor II has dimensions, factor II is
    enlarged by an ancilla in ``|0>``. Basis element ``i < len(E)`` prepares
    ``E``'s i-th state with probability ``w_i``; any further elements have
    probability zero.

    :raises InconsistentEnsembleError: ``mix(E)`` differs from the reduced state.
    :raises IsometryError: the ensemble does not lie in the support of the reduced state.
    """
    _require_bipartite(psi)
    dA, dB = psi.dims
    if E.dim != dA:
        raise DimensionError(f"ensemble lives in dim {E.dim}, factor I has dim {dA}")
    rho_I = psi.reduced(0)
    gap = matcore.trace_distance(mix(E), rho_I)
    if gap > tol:
        raise InconsistentEnsembleError(f"mix(E) differs from the reduced state by {gap:.3g} in trace distance")

    n = len(E)
    ancilla = -(-n // dB)
    work = pad_ancilla(psi, ancilla) if ancilla > 1 else psi
    dBp = work.dims[1]

    lam, left, right = schmidt(work)
    r = lam.size
    # sqrt(w_i) psi_i = sum_k U_ik sqrt(lam_k) e_k
    overlaps = E.states.conj() @ left.T  # <psi_i | e_k>, conjugated below
    U = np.conj(overlaps) * np.sqrt(E.weights)[:, None] / np.sqrt(lam)[None, :]
    defect = np.max(np.abs(U.conj().T @ U - np.eye(r)))
    residual = np.max(np.abs(np.sqrt(E.weights)[:, None] * E.states - U @ (np.sqrt(lam)[:, None] * left)))
    if defect > ISOMETRY_TOL or residual > ISOMETRY_TOL:
        raise IsometryError(f"isometry check failed (orthonormality {defect:.3g}, support residual {residual:.3g})")
    # polar factor: nearest exact isometry
    P, _, Qh = np.linalg.svd(U, full_matrices=False)
    U = P @ Qh

    W = np.hstack([U, scipy.linalg.null_space(U.conj().T)]) if n > r else U
    G = np.vstack([right, scipy.linalg.null_space(right.conj()).T]) if dBp > r else right
    # phi_i = sum_m conj(W_im) g_m, then sum_i U_ik phi_i = g_k = right_k
    phis = W.conj() @ G[:n]
    basis = np.vstack([phis, G[n:]]) if dBp > n else phis
    return HJWBasis(basis, work)


def von_neumann_premeasurement(psi: CompositeState, basis, apparatus_dim: int) -> CompositeState:
    """``sum_i sqrt(w_i)|psi_i>|phi_i>|A_i>`` with pointer states ``|A_i> = |i>``."""
    V, B = _branches(psi, basis)
    m = B.shape[0]
    if apparatus_dim < m:
        raise DimensionError(f"apparatus dimension {apparatus_dim} < {m} outcomes")
    dA, dB = psi.dims
    out = np.zeros((dA, dB, apparatus_dim), dtype=complex)
    for i in range(m):
        out[:, :, i] = np.outer(V[i], B[i])
    return CompositeState(out.reshape(-1), (dA, dB, apparatus_dim))


def destructive_measurement(psi: CompositeState, basis, apparatus_dim: int) -> CompositeState:
    """``sum_i sqrt(w_i)|psi_i>|A_i>``: the measured factor is replaced by the apparatus."""
    V, B = _branches(psi, basis)
    m = B.shape[0]
    if apparatus_dim < m:
        raise DimensionError(f"apparatus dimension {apparatus_dim} < {m} outcomes")
    out = np.zeros((psi.dims[0], apparatus_dim), dtype=complex)
    out[:, :m] = V.T
    return CompositeState(out.reshape(-1), (psi.dims[0], apparatus_dim))


def project(psi: CompositeState, P, factor: int) -> Tuple[float, CompositeState]:
    """Projection postulate: apply ``P`` on one factor and renormalize.

    :return: ``(probability, collapsed state)``.
    :raises ZeroProbabilityError: if the outcome probability is below ``P_FLOOR``.
    """
    P = matcore.as_matrix(P, square=True)
    d = psi.dims[factor]
    if P.shape != (d, d):
        raise DimensionError(f"projector is {P.shape}, factor {factor} has dim {d}")
    if np.max(np.abs(P @ P - P)) > NORM_TOL or np.max(np.abs(P - matcore.dag(P))) > NORM_TOL:
        raise InvalidStateError("P is not an orthogonal projector")
    T = np.moveaxis(np.tensordot(P, psi.vector.reshape(psi.dims), axes=([1], [factor])), 0, factor)
    v = T.reshape(-1)
    prob = float(np.vdot(v, v).real)
    if prob < P_FLOOR:
        raise ZeroProbabilityError(f"outcome has probability {prob:.3g}")
    return prob, CompositeState(v / np.sqrt(prob), psi.dims)


def random_ensemble(rho, n: int, seed: SeedLike = None) -> Ensemble:
    """An ``n``-element rho-ensemble from a Haar-random ``n x rank`` isometry."""
    spec = eigen_ensemble(rho)
    r = len(spec)
    if n < r:
        raise ValueError(f"need n >= rank(rho) = {r}, got {n}")
    U = haar_isometry(n, r, as_rng(seed))
    vecs = U @ (np.sqrt(spec.weights)[:, None] * spec.states)
    w = np.sum(np.abs(vecs) ** 2, axis=1)
    return Ensemble(w / w.sum(), vecs / np.sqrt(w)[:, None])


class EnsembleMatch(NamedTuple):
    max_weight_error: float
    min_overlap: float
    pairs: Tuple[Tuple[int, int], ...]


def match_ensembles(E: Ensemble, F: Ensemble) -> EnsembleMatch:
    """Pair items of two ensembles up to order and global phase.

    Greedy: repeatedly take the unmatched pair with the largest ``|<psi|phi>|``.
    Overlaps equal to within ``1e-9`` are ranked by closeness of the weights,
    then by index. Unmatched leftovers count as weight errors.
    """
    O = np.abs(E.states.conj() @ F.states.T)
    dw = np.abs(E.weights[:, None] - F.weights[None, :])
    free_e, free_f = set(range(len(E))), set(range(len(F)))
    pairs, weight_err, overlaps = [], 0.0, []
    flat = np.lexsort((dw.ravel(), -np.round(O.ravel(), 9)))
    for idx in flat:
        i, j = divmod(int(idx), O.shape[1])
        if i in free_e and j in free_f:
            free_e.discard(i)
            free_f.discard(j)
            pairs.append((i, j))
            weight_err = max(weight_err, abs(E.weights[i] - F.weights[j]))
            overlaps.append(O[i, j])
    for i in free_e:
        weight_err = max(weight_err, float(E.weights[i]))
    for j in free_f:
        weight_err = max(weight_err, float(F.weights[j]))
    return EnsembleMatch(float(weight_err), float(min(overlaps)), tuple(pairs))
