"""Linear maps on operator space.

A :class:`LinearMap` stores its superoperator in the column-stacking
convention: ``vec(X)`` stacks the columns of ``X`` top to bottom, so
``vec(X)[a + d*b] = X[a, b]`` and ``vec(A X B) = (B^T (x) A) vec(X)``.

The Choi matrix is ``(M (x) id)(sum_ij |ii><jj|)``, indexed
``C[(a, i), (b, j)] = M(|i><j|)[a, b]``.

Kraus operators follow the convention ``X -> sum_k M_k^dag X M_k``. A map
``X -> K X K^dag`` therefore has the single Kraus operator ``K^dag``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import matcore
from .errors import DimensionError, NotCompletelyPositiveError
from .sampling import SeedLike, haar_state, random_density, trial_rngs
from .states import density_violations

#: relative PSD tolerance: eigenvalues >= -CP_TOL * ||C||_F count as nonnegative
CP_TOL = 1e-9
KRAUS_PSD_TOL = 1e-9


def vec(X) -> np.ndarray:
    return np.asarray(X, dtype=complex).reshape(-1, order="F")


def unvec(v, dim: Optional[int] = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size))) if dim is None else dim
    return v.reshape(d, d, order="F")


@dataclass(frozen=True)
class LinearMap:
    """Linear map on ``dim x dim`` operators, stored as a superoperator."""

    dim: int
    superop: np.ndarray = field(repr=False)

    def __post_init__(self):
        S = matcore.as_matrix(self.superop, square=True)
        if S.shape[0] != self.dim**2:
            raise DimensionError(f"superoperator of side {S.shape[0]} does not act on {self.dim}x{self.dim} operators")
        S = S.copy()
        S.flags.writeable = False
        object.__setattr__(self, "superop", S)

    def __call__(self, X) -> np.ndarray:
        X = matcore.as_matrix(X, square=True)
        if X.shape[0] != self.dim:
            raise DimensionError(f"map acts on dim {self.dim}, got operator of dim {X.shape[0]}")
        return unvec(self.superop @ vec(X), self.dim)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        if other.dim != self.dim:
            raise DimensionError("cannot add maps of different dimension")
        return LinearMap(self.dim, self.superop + other.superop)

    def __rmul__(self, c) -> "LinearMap":
        return LinearMap(self.dim, complex(c) * self.superop)

    def then(self, other: "LinearMap") -> "LinearMap":
        """Composition: apply ``self`` first, then ``other``."""
        return LinearMap(self.dim, other.superop @ self.superop)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "superoperator": matcore.to_literal(self.superop)}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearMap":
        """Read ``{"dim", "superoperator"}`` or ``{"kraus": [...]}``."""
        if "kraus" in data:
            return kraus_map([matcore.from_literal(K) for K in data["kraus"]])
        return cls(int(data["dim"]), matcore.from_literal(data["superoperator"]))


def matrix_units(dim: int):
    for j in range(dim):
        for i in range(dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[i, j] = 1.0
            yield i, j, E


def from_function(f: Callable[[np.ndarray], np.ndarray], dim: int) -> LinearMap:
    """Superoperator of a linear action, read off from its images of matrix units."""
    S = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i, j, E in matrix_units(dim):
        S[:, i + dim * j] = vec(f(E))
    return LinearMap(dim, S)


def identity_map(dim: int) -> LinearMap:
    return LinearMap(dim, np.eye(dim * dim, dtype=complex))


def unitary_map(U) -> LinearMap:
    """``rho -> U rho U^dag``."""
    U = matcore.as_matrix(U, square=True)
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise ValueError("unitary_map needs a unitary matrix")
    return LinearMap(U.shape[0], np.kron(U.conj(), U))


def transpose_map(dim: int) -> LinearMap:
    """``rho -> rho^T``: positive and trace preserving, not completely positive."""
    S = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            S[b + dim * a, a + dim * b] = 1.0
    return LinearMap(dim, S)


def depolarizing_map(dim: int, p: float) -> LinearMap:
    """``rho -> (1 - p) rho + p Tr(rho) I/d``; completely depolarizing at ``p = 1``."""
    trace_part = np.outer(vec(np.eye(dim)), vec(np.eye(dim)).conj()) / dim
    return LinearMap(dim, (1 - p) * np.eye(dim * dim) + p * trace_part)


def kraus_to_superop(kraus: Sequence[np.ndarray]) -> np.ndarray:
    kraus = [matcore.as_matrix(M, square=True) for M in kraus]
    # vec(M^dag X M) = (M^T (x) M^dag) vec(X)
    return sum(np.kron(M.T, M.conj().T) for M in kraus)


def kraus_map(kraus: Sequence[np.ndarray]) -> LinearMap:
    """Map ``X -> sum_k M_k^dag X M_k``."""
    if len(kraus) == 0:
        raise ValueError("need at least one Kraus operator")
    S = kraus_to_superop(kraus)
    return LinearMap(int(round(np.sqrt(S.shape[0]))), S)


def to_choi(M: LinearMap) -> np.ndarray:
    d = M.dim
    # superop indices (b, a, j, i) -> Choi indices (a, i, b, j)
    return M.superop.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def from_choi(C) -> LinearMap:
    C = matcore.as_matrix(C, square=True)
    d = int(round(np.sqrt(C.shape[0])))
    if d * d != C.shape[0]:
        raise DimensionError(f"Choi matrix side {C.shape[0]} is not a square number")
    return LinearMap(d, C.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d))


def kraus_from_choi(C, rtol: float = 1e-13) -> List[np.ndarray]:
    """Operator-sum form of a completely positive map from its Choi matrix.

    Each eigenvector ``v`` of ``C`` with eigenvalue ``mu > 0`` gives
    ``K = sqrt(mu) v.reshape(d, d)`` with ``M(X) = sum K X K^dag``; the returned
    operators are ``K^dag`` to match the ``sum M^dag X M`` convention.

    :raises NotCompletelyPositiveError: if ``C`` has an eigenvalue below ``-1e-9``.
    """
    C = matcore.as_matrix(C, square=True)
    d = int(round(np.sqrt(C.shape[0])))
    mu, V = matcore.eig_hermitian(C)
    if mu[0] < -KRAUS_PSD_TOL:
        raise NotCompletelyPositiveError(f"Choi matrix has eigenvalue {mu[0]:.6g}; no operator-sum form exists")
    cutoff = rtol * max(mu[-1], 1.0)
    ops = [np.sqrt(m) * V[:, k].reshape(d, d) for k, m in enumerate(mu) if m > cutoff][::-1]
    if not ops:
        return [np.zeros((d, d), dtype=complex)]
    return [K.conj().T for K in ops]


@dataclass(frozen=True)
class TPVerdict:
    holds: bool
    defect: float


@dataclass(frozen=True)
class CPVerdict:
    holds: bool
    min_eigenvalue: float
    tolerance: float


def is_trace_preserving(M: LinearMap, tol: float = 1e-9) -> TPVerdict:
    """``Tr M(|i><j|) = delta_ij`` on all matrix units; defect is the worst deviation."""
    d = M.dim
    # Tr X = <vec(I), vec(X)>, so the row vec(I)^dag S must equal vec(I)^dag
    row = vec(np.eye(d)).conj() @ M.superop
    defect = float(np.max(np.abs(row - vec(np.eye(d)).conj())))
    return TPVerdict(defect <= tol, defect)


def is_completely_positive(M: LinearMap, rtol: float = CP_TOL) -> CPVerdict:
    C = to_choi(M)
    Ch = 0.5 * (C + C.conj().T)
    lam = float(np.linalg.eigvalsh(Ch)[0])
    tol = rtol * np.linalg.norm(C)
    hermitian = np.linalg.norm(C - C.conj().T) <= rtol * max(np.linalg.norm(C), 1.0)
    return CPVerdict(bool(hermitian and lam >= -tol), lam, float(tol))


class Positivity(str, enum.Enum):
    VIOLATED = "violated"
    NO_VIOLATION_FOUND = "no-violation-found"
    PROVEN = "proven-cp"


@dataclass(frozen=True)
class PositivityReport:
    status: Positivity
    min_eigenvalue: float
    trials: int
    witness: Optional[np.ndarray] = field(default=None, repr=False)


def _min_eig(X: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (X + X.conj().T))[0])


def is_positive_sampled(M: LinearMap, trials: int, seed: SeedLike = None, rtol: float = CP_TOL) -> PositivityReport:
    """Search for a PSD input that ``M`` maps to a non-PSD output.

    Even trials use Haar-random pure projectors, odd trials Ginibre mixtures of
    random rank. A witness is conclusive; finding none is not a proof, unless
    the map is completely positive, which is then reported as ``PROVEN``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = M.dim
    worst = np.inf
    for t, rng in enumerate(trial_rngs(seed, trials)):
        if t % 2 == 0:
            psi = haar_state(d, rng)
            rho = np.outer(psi, psi.conj())
        else:
            rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        out = M(rho)
        lam = _min_eig(out)
        worst = min(worst, lam)
        non_herm = np.linalg.norm(out - out.conj().T) > rtol * max(np.linalg.norm(out), 1.0)
        if non_herm or lam < -rtol * max(np.linalg.norm(out), 1.0):
            return PositivityReport(Positivity.VIOLATED, lam, t + 1, rho)
    status = Positivity.PROVEN if is_completely_positive(M, rtol).holds else Positivity.NO_VIOLATION_FOUND
    return PositivityReport(status, float(worst), trials)


def extend(M: LinearMap, dim_prime: int) -> LinearMap:
    """Superoperator of ``M (x) id`` on the ``dim * dim_prime`` composite."""
    d, e = M.dim, dim_prime
    S4 = M.superop.reshape(d, d, d, d)
    Ie = np.eye(e)
    # out index (b, b', a, a'), in index (j, j', i, i'); id carries a'=i', b'=j'
    T = np.einsum("baji,BJ,AI->bBaAjJiI", S4, Ie, Ie)
    D = d * e
    return LinearMap(D, T.reshape(D * D, D * D))


def apply_extended(M: LinearMap, X, dim_prime: int) -> np.ndarray:
    """``(M (x) id)(X)`` without forming the composite superoperator."""
    d, e = M.dim, dim_prime
    X = matcore.as_matrix(X, square=True)
    if X.shape[0] != d * e:
        raise DimensionError(f"operator of dim {X.shape[0]} is not on a {d}x{e} composite")
    S4 = M.superop.reshape(d, d, d, d)
    out = np.einsum("baji,iAjB->aAbB", S4, X.reshape(d, e, d, e))
    return out.reshape(d * e, d * e)


@dataclass(frozen=True)
class PreservationReport:
    holds: bool
    trials: int
    min_eigenvalue: float
    problems: tuple = ()
    witness: Optional[np.ndarray] = field(default=None, repr=False)


def density_preservation_test(M: LinearMap, dim_prime: int, trials: int, seed: SeedLike = None,
                              rtol: float = CP_TOL) -> PreservationReport:
    """Check that ``M (x) id`` maps sampled composite density operators to density operators.

    Half the samples are Haar-random pure states on the composite, half are
    Ginibre mixtures of random rank. This is a semi-decision: it stops at the
    first counterexample, otherwise it reports no violation in ``trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    D = M.dim * dim_prime
    worst = np.inf
    for t, rng in enumerate(trial_rngs(seed, trials)):
        if t % 2 == 0:
            psi = haar_state(D, rng)
            sigma = np.outer(psi, psi.conj())
        else:
            sigma = random_density(D, rng, rank=int(rng.integers(1, D + 1)))
        out = apply_extended(M, sigma, dim_prime)
        worst = min(worst, _min_eig(out))
        problems = density_violations(out, psd_tol=rtol * max(np.linalg.norm(out), 1.0))
        if problems:
            return PreservationReport(False, t + 1, _min_eig(out), tuple(problems), sigma)
    return PreservationReport(True, trials, float(worst))


def compare_positivity_notions(M: LinearMap, dim_prime: int, trials: int, seed: SeedLike = None) -> dict:
    """Complete positivity next to the sampled density-preservation condition.

    Agreement between the two is empirical only; it settles nothing about maps
    whose extension preserves density operators without being CP.
    """
    cp = is_completely_positive(M)
    dp = density_preservation_test(M, dim_prime, trials, seed)
    return {"completely_positive": cp.holds, "min_choi_eigenvalue": cp.min_eigenvalue,
            "density_preserving": dp.holds, "trials": dp.trials, "agree": cp.holds == dp.holds}


def sends_pure_to_pure(M: LinearMap, trials: int, seed: SeedLike = None, tol: float = 1e-8) -> bool:
    """Sampled gate: every image of a Haar-random pure state is a pure density operator."""
    for rng in trial_rngs(seed, trials):
        psi = haar_state(M.dim, rng)
        out = M(np.outer(psi, psi.conj()))
        if density_violations(out) or abs(np.trace(out @ out).real - 1.0) > tol:
            return False
    return True


def inner_product_defect(M: LinearMap, pairs: int, seed: SeedLike = None) -> float:
    """Largest change of ``|<phi|psi>|`` over sampled pairs of pure inputs.

    For pure outputs ``|<phi'|psi'>|^2 = Tr(M(P_phi) M(P_psi))``.
    """
    worst = 0.0
    for rng in trial_rngs(seed, pairs):
        phi, psi = haar_state(M.dim, rng), haar_state(M.dim, rng)
        before = abs(np.vdot(phi, psi))
        after = np.sqrt(max(np.trace(M(np.outer(phi, phi.conj())) @ M(np.outer(psi, psi.conj()))).real, 0.0))
        worst = max(worst, abs(after - before))
    return worst
