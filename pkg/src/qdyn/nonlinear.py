"""Nonlinear evolution laws and tests of linearity.

A :class:`StateMap` acts on density operators, a :class:`PureStateMap` on state
vectors. Both stand for one application over a fixed, implicit time interval.
Either can be fed to :func:`linearity_defect` and
:func:`jordan_evolved_reduced`, which only ever evaluate the map on the pure
members of an ensemble.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import matcore
from .errors import DimensionError, InconsistentEnsembleError
from .maps import LinearMap
from .sampling import SeedLike, haar_state, trial_rngs
from .states import CompositeState, Ensemble, eigen_ensemble, mix, random_ensemble

ENSEMBLE_TOL = 1e-8


@dataclass(frozen=True)
class StateMap:
    dim: int
    action: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = ""

    def __call__(self, rho) -> np.ndarray:
        return self.action(np.asarray(rho, dtype=complex))

    def on_pure(self, psi) -> np.ndarray:
        return self(matcore.projector(psi))


@dataclass(frozen=True)
class PureStateMap:
    dim: int
    action: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = ""

    def __call__(self, psi) -> np.ndarray:
        return self.action(np.asarray(psi, dtype=complex))

    def on_pure(self, psi) -> np.ndarray:
        return matcore.projector(self(psi))


AnyMap = Union[StateMap, PureStateMap]


def from_linear(M: LinearMap, name: str = "linear") -> StateMap:
    return StateMap(M.dim, M, name)


def unitary_conjugation(U) -> StateMap:
    U = matcore.as_matrix(U, square=True)
    return StateMap(U.shape[0], lambda rho: U @ rho @ U.conj().T, "unitary")


def power_map(k: int, dim: int) -> StateMap:
    """``rho -> rho^k / Tr(rho^k)``. Fixes every pure state and the maximally mixed state."""

    def act(rho):
        R = np.linalg.matrix_power(rho, k)
        return R / np.trace(R)

    return StateMap(dim, act, f"power:{k}")


def mean_field_rotation(A, B, strength: float) -> PureStateMap:
    """``psi -> exp(-i strength <psi|A|psi> B) psi``, a rotation driven by an expectation value."""
    A = matcore.as_matrix(A, square=True)
    B = matcore.as_matrix(B, square=True)
    w, V = matcore.eig_hermitian(B)

    def act(psi):
        angle = strength * np.vdot(psi, A @ psi).real
        return V @ (np.exp(-1j * angle * w) * (V.conj().T @ psi))

    return PureStateMap(A.shape[0], act, "mean-field-rotation")


def evolve_ensemble(M: AnyMap, E: Ensemble) -> np.ndarray:
    """``sum_i w_i M(P_psi_i)``: the evolved mixture of an ensemble's members."""
    return sum(w * M.on_pure(psi) for w, psi in E)


def ensemble_pair_defect(M: AnyMap, E: Ensemble, F: Ensemble) -> float:
    """Trace distance between the evolved mixtures of two ensembles of the same state."""
    return matcore.trace_distance(evolve_ensemble(M, E), evolve_ensemble(M, F))


class DefectReport(NamedTuple):
    defect: float
    witness: Tuple[Ensemble, Ensemble]
    ensemble_defect: float
    direct_defect: Optional[float]


def linearity_defect(M: AnyMap, rho, pairs: int, seed: SeedLike = None, max_extra: int = 3) -> DefectReport:
    """Largest disagreement between evolved ensembles of ``rho``.

    Each pair draws two ``rho``-ensembles with ``random_ensemble`` (sizes from
    ``rank`` to ``rank + max_extra``) and compares ``sum_i w_i M(P_psi_i)``
    across them. For a :class:`StateMap`, which is also defined on ``rho``
    itself, ``M(rho)`` is compared with each evolved ensemble as well
    (``direct_defect``). Zero everywhere is necessary for ``M`` to extend to a
    linear map.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rho = np.asarray(rho, dtype=complex)
    rank = len(eigen_ensemble(rho))
    direct = M(rho) if isinstance(M, StateMap) else None
    best, best_pair, best_direct = -1.0, None, None if direct is None else 0.0
    for rng in trial_rngs(seed, pairs):
        E = random_ensemble(rho, rank + int(rng.integers(0, max_extra + 1)), rng)
        F = random_ensemble(rho, rank + int(rng.integers(0, max_extra + 1)), rng)
        mE, mF = evolve_ensemble(M, E), evolve_ensemble(M, F)
        gap = matcore.trace_distance(mE, mF)
        if gap > best:
            best, best_pair = gap, (E, F)
        if direct is not None:
            best_direct = max(best_direct, matcore.trace_distance(direct, mE), matcore.trace_distance(direct, mF))
    total = best if best_direct is None else max(best, best_direct)
    return DefectReport(float(total), best_pair, float(best), best_direct)


def _schmidt_phase(matrix: np.ndarray, phase_rate: float) -> np.ndarray:
    norm = np.linalg.norm(matrix)
    U, s, V = matcore.svd(matrix / norm)
    w = s**2
    return norm * (U * (s * np.exp(1j * w * phase_rate))) @ V.conj().T


def eq8_evolution(psi: CompositeState, theta: float, t: float) -> CompositeState:
    """``sum_i sqrt(w_i)|r_i>|f_i>  ->  sum_i sqrt(w_i) exp(i w_i theta t)|r_i>|f_i>``.

    Each Schmidt term picks up a phase set by its own weight, so the map is
    nonlinear on vectors while the reduced state of either factor is unchanged.
    Degenerate weights share one phase, which makes the result independent of
    the Schmidt basis chosen.
    """
    if theta == 0:
        raise ValueError("theta must be nonzero")
    if len(psi.dims) != 2:
        raise DimensionError("eq8_evolution needs a bipartite state")
    out = _schmidt_phase(psi.as_matrix(), theta * t)
    return CompositeState(out.reshape(-1), psi.dims)


def _phase_any_norm(v: np.ndarray, dims, theta: float, t: float) -> np.ndarray:
    # degree-one homogeneous extension: E(c psi) = c E(psi) for c > 0
    return _schmidt_phase(v.reshape(dims), theta * t).reshape(-1)


def eq8_nonlinearity_witness(theta: float, t: float, psi1: CompositeState, psi2: CompositeState,
                             a: complex, b: complex) -> float:
    """``|| E(a psi1 + b psi2) - (a E(psi1) + b E(psi2)) ||`` for the weight-phase evolution ``E``.

    The superposition is normalized before evolving and rescaled afterwards.
    """
    if theta == 0:
        raise ValueError("theta must be nonzero")
    if psi1.dims != psi2.dims:
        raise DimensionError("states live on different spaces")
    combo = a * psi1.vector + b * psi2.vector
    if np.linalg.norm(combo) == 0:
        raise ValueError("the superposition vanishes")
    lhs = _phase_any_norm(combo, psi1.dims, theta, t)
    rhs = a * eq8_evolution(psi1, theta, t).vector + b * eq8_evolution(psi2, theta, t).vector
    return float(np.linalg.norm(lhs - rhs))


def _check_jordan_inputs(E: Ensemble, rho, s) -> Tuple[np.ndarray, np.ndarray]:
    rho = matcore.as_matrix(rho, square=True)
    s = np.asarray(s, dtype=float).reshape(-1)
    if E.dim != rho.shape[0]:
        raise DimensionError("ensemble and rho live in different dimensions")
    gap = matcore.trace_distance(mix(E), rho)
    if gap > ENSEMBLE_TOL:
        raise InconsistentEnsembleError(f"ensemble mixes to a state {gap:.3g} away from rho")
    if s.size < len(E):
        raise DimensionError(f"need at least {len(E)} record probabilities, got {s.size}")
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-10:
        raise ValueError("record probabilities must be nonnegative and sum to 1")
    return rho, s


def jordan_states(E: Ensemble, rho, s: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """The correlated and uncorrelated system-record states with the same reduced state.

    ``Pi_bar = sum_i w_i P_psi_i (x) P_alpha_i`` and
    ``Pi = rho (x) sum_i s_i P_alpha_i``, with ``|alpha_i>`` the computational
    basis of a record system of dimension ``len(s)``.
    """
    rho, s = _check_jordan_inputs(E, rho, s)
    r = s.size
    records = np.eye(r, dtype=complex)
    Pi_bar = sum(w * np.kron(matcore.projector(psi), np.outer(records[i], records[i]))
                 for i, (w, psi) in enumerate(E))
    Pi = np.kron(rho, np.diag(s).astype(complex))
    return Pi_bar, Pi


class JordanResult(NamedTuple):
    rho_bar: np.ndarray
    rho: np.ndarray
    distance: float


def jordan_evolved_reduced(M: AnyMap, E: Ensemble, rho, s: Sequence[float],
                           second: Optional[Ensemble] = None) -> JordanResult:
    """Evolve both branches member by member and compare the system's reduced states.

    The correlated branch evolves the members of ``E``; the uncorrelated branch
    evolves the members of ``second`` (default: the eigen-ensemble of ``rho``),
    each paired with every record state. Zero distance for every choice of
    ensembles is the mixture-independence assumption; a positive value
    measures its failure.
    """
    rho, s = _check_jordan_inputs(E, rho, s)
    second = eigen_ensemble(rho) if second is None else second
    _check_jordan_inputs(second, rho, np.ones(len(second)) / len(second))
    d, r = rho.shape[0], s.size
    records = np.eye(r, dtype=complex)
    P = [np.outer(records[j], records[j]) for j in range(r)]
    bar = sum(w * np.kron(M.on_pure(psi), P[i]) for i, (w, psi) in enumerate(E))
    plain = sum(w * s[j] * np.kron(M.on_pure(psi), P[j]) for w, psi in second for j in range(r))
    rho_bar = matcore.partial_trace(bar, (d, r), "B")
    rho_plain = matcore.partial_trace(plain, (d, r), "B")
    return JordanResult(rho_bar, rho_plain, matcore.trace_distance(rho_bar, rho_plain))


@dataclass(frozen=True)
class WeinbergObservable:
    """Real function on state vectors, evaluated on normalized representatives."""

    dim: int
    value: Callable[[np.ndarray], float] = field(repr=False)
    name: str = ""

    def __call__(self, psi) -> float:
        v = np.asarray(psi, dtype=complex).reshape(-1)
        return float(self.value(v / np.linalg.norm(v)))


def bilinear_observable(A) -> WeinbergObservable:
    """``psi -> <psi|A|psi>`` for Hermitian ``A``: an ordinary expectation value."""
    A = matcore.as_matrix(A, square=True)
    return WeinbergObservable(A.shape[0], lambda v: np.vdot(v, A @ v).real, "bilinear")


def squared_expectation(A) -> WeinbergObservable:
    """``psi -> <psi|A|psi>^2``: nonlinear in the projector."""
    A = matcore.as_matrix(A, square=True)
    return WeinbergObservable(A.shape[0], lambda v: np.vdot(v, A @ v).real ** 2, "squared")


def phase_invariance_defect(f: WeinbergObservable, trials: int, seed: SeedLike = None) -> float:
    worst = 0.0
    for rng in trial_rngs(seed, trials):
        psi = haar_state(f.dim, rng)
        alpha = rng.uniform(0, 2 * np.pi)
        worst = max(worst, abs(f(np.exp(1j * alpha) * psi) - f(psi)))
    return worst


def weinberg_expectation(D: Ensemble, f: WeinbergObservable) -> float:
    """``sum_i w_i f(psi_i)`` over a finite-support distribution of pure states."""
    return float(sum(w * f(psi) for w, psi in D))


def first_moment(D: Ensemble) -> np.ndarray:
    """``sum_i w_i P_psi_i``: all that a density operator retains of the distribution."""
    return mix(D)
