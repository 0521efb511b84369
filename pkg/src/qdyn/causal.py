"""Causal structure of 1+1 Minkowski space and lightcone-triggered collapse.

Coordinates are in lightseconds with ``c = 1``. A region is a finite set of
sample events. A remote measurement at event ``y`` changes the local state of
the other system either once the worldline point enters the causal future of
``y`` (:attr:`CollapseModel.CAUSAL`) or as soon as it is simultaneous with
``y`` in the lab frame (:attr:`CollapseModel.INSTANTANEOUS`). The density
operators agree in both models; only the proper/improper tag differs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import matcore
from .errors import NotSpacelikeError, OutcomeError
from .sampling import SeedLike, as_rng
from .states import CompositeState, Ensemble, _check_basis, outcome_probabilities, steer

LIGHTSECOND_KM = 299792.458
#: order-of-magnitude separation needed to close the loophole, in km
DELTA_KM = 3e4
#: the same separation in lightseconds, rounded as usually quoted
DEFAULT_DELTA = 0.1


@dataclass(frozen=True)
class Event:
    t: float
    x: float

    def __post_init__(self):
        t, x = float(self.t), float(self.x)
        if not (math.isfinite(t) and math.isfinite(x)):
            raise ValueError("event coordinates must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)


Region = Sequence[Event]


def as_region(S: Union[Event, Iterable[Event]]) -> Tuple[Event, ...]:
    events = (S,) if isinstance(S, Event) else tuple(S)
    if not events:
        raise ValueError("a region needs at least one event")
    return events


def in_chronological_future(p: Event, S: Union[Event, Region]) -> bool:
    """``p`` lies strictly inside the future lightcone of some event of ``S``."""
    return any(p.t > s.t and abs(p.x - s.x) < p.t - s.t for s in as_region(S))


def in_causal_future(p: Event, S: Union[Event, Region]) -> bool:
    """``p`` lies in or on the future lightcone of some event of ``S`` (including ``S`` itself)."""
    return any(p.t >= s.t and abs(p.x - s.x) <= p.t - s.t for s in as_region(S))


def invariant_separation(O_I: Region, O_II: Region) -> float:
    """Smallest proper distance ``sqrt(dx^2 - dt^2)`` between sample events of two regions.

    :raises NotSpacelikeError: if any pair is timelike or null separated.
    """
    best = math.inf
    for p in as_region(O_I):
        for q in as_region(O_II):
            s2 = (p.x - q.x) ** 2 - (p.t - q.t) ** 2
            if s2 <= 0:
                raise NotSpacelikeError(f"events {p} and {q} are not spacelike separated")
            best = min(best, math.sqrt(s2))
    return best


class CollapseModel(enum.Enum):
    CAUSAL = "causal"
    INSTANTANEOUS = "instantaneous"


class Measurement(NamedTuple):
    """Measurement of factor II at event ``y`` in ``basis`` (rows), with ``outcome`` if known."""

    y: Event
    basis: np.ndarray
    outcome: Optional[int] = None


class LocalState(NamedTuple):
    rho: np.ndarray
    proper: bool
    ensemble: Optional[Ensemble]


def collapse_reached(p: Event, y: Event, model: CollapseModel) -> bool:
    if model is CollapseModel.CAUSAL:
        return in_causal_future(p, y)
    return p.t >= y.t


def local_state(p: Event, psi: CompositeState, measurement: Optional[Measurement],
                model: CollapseModel) -> LocalState:
    """State of factor I at event ``p``.

    Before the collapse reaches ``p`` this is the reduced state, an improper
    mixture. Afterwards it is the conditional state of the observed outcome,
    or, with the outcome unknown, the steered ensemble, now a proper mixture
    with the same density operator.

    :raises OutcomeError: if ``measurement.outcome`` does not index the basis.
    """
    rho_I = psi.reduced(0)
    if measurement is None:
        return LocalState(rho_I, False, None)
    basis = _check_basis(measurement.basis, psi.dims[1])
    k = measurement.outcome
    if k is not None and not (0 <= k < basis.shape[0]):
        raise OutcomeError(f"outcome {k} is not in range(0, {basis.shape[0]})")
    if not collapse_reached(p, measurement.y, model):
        return LocalState(rho_I, False, None)
    E = steer(psi, basis)
    if k is None:
        return LocalState(rho_I, True, E)
    for label, (w, state) in zip(E.labels, E):
        if label == k:
            return LocalState(matcore.projector(state), True, Ensemble([1.0], [state], labels=(k,)))
    raise OutcomeError(f"outcome {k} has zero probability")


def marginal_local_state(p: Event, psi: CompositeState, y: Event, basis, model: CollapseModel) -> np.ndarray:
    """``sum_k p_k rho_k`` over the outcome-conditioned local states at ``p``."""
    probs = outcome_probabilities(psi, basis)
    out = np.zeros((psi.dims[0],) * 2, dtype=complex)
    for k, pk in enumerate(probs):
        if pk > 0:
            out += pk * local_state(p, psi, Measurement(y, basis, k), model).rho
    return out


def joint_distribution(psi: CompositeState, basis_I, basis_II) -> np.ndarray:
    """``P[j, k] = |(<b_j| (x) <phi_k|) |Psi>|^2``."""
    BI = _check_basis(basis_I, psi.dims[0])
    BII = _check_basis(basis_II, psi.dims[1])
    amp = BI.conj() @ psi.as_matrix() @ BII.conj().T
    return np.abs(amp) ** 2


def proper_at_time(delta: float, model: CollapseModel, y: Event = Event(0.0, 0.0)) -> float:
    """Earliest time at which the system at ``x = delta`` carries a proper mixture."""
    if model is CollapseModel.CAUSAL:
        return y.t + abs(delta - y.x)
    return y.t


@dataclass(frozen=True)
class CollapseReport:
    delta: float
    model: CollapseModel
    t_I: float
    trials: int
    exact: np.ndarray
    frequencies: np.ndarray
    max_sigma: float
    within_3sigma: bool
    proper_at: float
    proper_at_measurement: bool
    meets_threshold: bool


def _sequential_counts(P: np.ndarray, trials: int, rng: np.random.Generator) -> np.ndarray:
    # outcome at O_II first, then O_I from the collapsed conditional state
    pII = P.sum(axis=0)
    kcounts = rng.multinomial(trials, pII / pII.sum())
    counts = np.zeros_like(P, dtype=np.int64)
    for k, n in enumerate(kcounts):
        if n:
            counts[:, k] = rng.multinomial(n, P[:, k] / pII[k])
    return counts


def collapse_locality_experiment(delta: float, psi: CompositeState, basis_II, basis_I,
                                 model: CollapseModel, trials: int, seed: SeedLike = None,
                                 t_I: float = 0.0) -> CollapseReport:
    """Measure factor II at ``(0, 0)`` and factor I at ``(t_I, delta)`` over many runs.

    If the collapse has reached O_I by ``t_I``, each run samples the O_II
    outcome and then the O_I outcome from the collapsed state. Otherwise both
    outcomes are sampled together from the uncollapsed state. The two
    procedures share one exact joint distribution, so no run statistics can
    tell the models apart; only ``proper_at`` differs.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(seed)
    P = joint_distribution(psi, basis_I, basis_II)
    t_proper = proper_at_time(delta, model)
    reached = t_I >= t_proper
    if reached:
        counts = _sequential_counts(P, trials, rng)
    else:
        counts = rng.multinomial(trials, (P / P.sum()).ravel()).reshape(P.shape)
    freq = counts / trials
    sigma = np.sqrt(P * (1 - P) / trials)
    dev = np.abs(freq - P)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, dev / sigma, np.where(dev > 0, np.inf, 0.0))
    max_sigma = float(z.max())
    return CollapseReport(float(delta), model, float(t_I), int(trials), P, freq, max_sigma,
                          max_sigma <= 3.0, float(t_proper), bool(reached),
                          bool(delta >= DEFAULT_DELTA - 1e-12))
