"""Lindblad generators and their finite-time propagators.

``hbar = 1``; time is dimensionless. :func:`propagate` evaluates the exact
exponential of the Liouvillian and cross-checks it against fixed-step RK4;
disagreement raises instead of warning.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from . import matcore
from .errors import DimensionError, IntegrationMismatchError, NotHermitianError
from .maps import LinearMap, is_completely_positive, is_trace_preserving, unvec, vec
from .states import as_density

#: RK4 step as a fraction of the characteristic time ``1 / ||L||_2``
RK4_STEP_FRACTION = 1e-3
AGREEMENT_TOL = 1e-7


@dataclass(frozen=True)
class LindbladGenerator:
    H: np.ndarray
    jumps: Tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        H = matcore.as_matrix(self.H, square=True)
        if not matcore.is_hermitian(H):
            raise NotHermitianError("Hamiltonian must be Hermitian")
        jumps = tuple(matcore.as_matrix(L, square=True) for L in self.jumps)
        for L in jumps:
            if L.shape != H.shape:
                raise DimensionError(f"jump operator {L.shape} does not match H {H.shape}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side of the master equation evaluated directly on ``rho``."""
        H = self.H
        out = -1j * (H @ rho - rho @ H)
        for L in self.jumps:
            LdL = L.conj().T @ L
            out = out + L @ rho @ L.conj().T - 0.5 * (rho @ LdL + LdL @ rho)
        return out

    def to_dict(self) -> dict:
        return {"H": matcore.to_literal(self.H), "jumps": [matcore.to_literal(L) for L in self.jumps]}

    @classmethod
    def from_dict(cls, data: dict) -> "LindbladGenerator":
        return cls(matcore.from_literal(data["H"]), tuple(matcore.from_literal(L) for L in data.get("jumps", [])))


def amplitude_damping(gamma: float, omega: float = 0.0) -> LindbladGenerator:
    """Qubit decay ``|1> -> |0>`` at rate ``gamma`` with optional ``H = omega sz / 2``."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return LindbladGenerator(0.5 * omega * matcore.pauli("Z"), (np.sqrt(gamma) * lower,))


def dephasing(gamma: float) -> LindbladGenerator:
    return LindbladGenerator(np.zeros((2, 2)), (np.sqrt(gamma) * matcore.pauli("Z"),))


def liouvillian(G: LindbladGenerator) -> LinearMap:
    """Generator superoperator ``L`` with ``vec(drho/dt) = L vec(rho)``."""
    d = G.dim
    I = np.eye(d)
    L = -1j * (np.kron(I, G.H) - np.kron(G.H.T, I))
    for J in G.jumps:
        JdJ = J.conj().T @ J
        L = L + np.kron(J.conj(), J) - 0.5 * (np.kron(I, JdJ) + np.kron(JdJ.T, I))
    return LinearMap(d, L)


def propagator(G: LindbladGenerator, t: float) -> LinearMap:
    """Finite-time map ``exp(t L)``."""
    if t < 0:
        raise ValueError("the semigroup runs forward only; t must be >= 0")
    return LinearMap(G.dim, matcore.expm(t * liouvillian(G).superop))


def rk4_propagator(L: np.ndarray, t: float, dt: float) -> np.ndarray:
    """RK4 with steps of at most ``dt``, applied to every basis vector at once.

    For a linear ODE one RK4 step is the fixed matrix below; stepping all
    basis vectors is the same as raising it to the number of steps.
    """
    n = max(1, math.ceil(t / dt - 1e-12))
    h = t / n
    I = np.eye(L.shape[0], dtype=complex)
    k1 = L
    k2 = L @ (I + 0.5 * h * k1)
    k3 = L @ (I + 0.5 * h * k2)
    k4 = L @ (I + h * k3)
    step = I + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return np.linalg.matrix_power(step, n)


def default_step(G: LindbladGenerator) -> float:
    norm = np.linalg.norm(liouvillian(G).superop, 2)
    return RK4_STEP_FRACTION / norm if norm > 0 else np.inf


def propagate(G: LindbladGenerator, rho0, t: float, dt: float = None, check: bool = True) -> np.ndarray:
    """Density operator at time ``t``.

    :param dt: RK4 step for the cross-check, default ``1e-3`` characteristic times.
    :param check: run the RK4 cross-check.
    :raises IntegrationMismatchError: if the two paths differ by more than ``1e-7``
        in trace distance.
    """
    if t < 0:
        raise ValueError("the semigroup runs forward only; t must be >= 0")
    rho0 = as_density(rho0)
    if rho0.shape[0] != G.dim:
        raise DimensionError(f"state of dim {rho0.shape[0]} does not match generator dim {G.dim}")
    if t == 0:
        return rho0.copy()
    L = liouvillian(G).superop
    exact = unvec(matcore.expm(t * L) @ vec(rho0), G.dim)
    if check:
        step = default_step(G) if dt is None else dt
        if np.isfinite(step):
            stepped = unvec(rk4_propagator(L, t, step) @ vec(rho0), G.dim)
            gap = matcore.trace_distance(0.5 * (exact + exact.conj().T), 0.5 * (stepped + stepped.conj().T))
            if gap > AGREEMENT_TOL:
                raise IntegrationMismatchError(f"exponential and RK4 differ by {gap:.3g} at t={t}")
    return exact


@dataclass(frozen=True)
class CPTPEntry:
    t: float
    trace_defect: float
    min_choi_eigenvalue: float
    passed: bool


def cptp_certificate(G: LindbladGenerator, times: Sequence[float]) -> List[CPTPEntry]:
    """Trace-preservation defect and minimum Choi eigenvalue of ``exp(t L)`` per time."""
    if any(t < 0 for t in times):
        raise ValueError("certificate times must be >= 0")
    entries = []
    for t in times:
        M = propagator(G, float(t))
        tp = is_trace_preserving(M)
        cp = is_completely_positive(M)
        entries.append(CPTPEntry(float(t), tp.defect, cp.min_eigenvalue, tp.holds and cp.holds))
    return entries


def purity(rho) -> float:
    rho = matcore.as_matrix(rho, square=True)
    return float(np.trace(rho @ rho).real)
