"""Seeded random states, isometries and density operators.

Every sampler takes an explicit ``numpy.random.Generator``; nothing here touches
global random state. ``trial_rngs`` derives independent per-trial generators so
that results do not depend on the order in which trials are evaluated.
"""
from __future__ import annotations

from typing import List, Optional, Union

import numpy as np

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rngs(seed: SeedLike, trials: int) -> List[np.random.Generator]:
    """One independent generator per trial, derived from ``seed``."""
    if isinstance(seed, np.random.Generator):
        seq = np.random.SeedSequence(seed.integers(0, 2**63))
    elif isinstance(seed, np.random.SeedSequence):
        seq = seed
    else:
        seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in seq.spawn(trials)]


def ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``rows x cols`` matrix with orthonormal columns."""
    if cols > rows:
        raise ValueError(f"an isometry needs rows >= cols, got {rows}x{cols}")
    Q, R = np.linalg.qr(ginibre(rows, cols, rng))
    d = np.diag(R)
    # QR phase fix so that the distribution is Haar, not QR-biased
    return Q * (d / np.abs(d))[None, :]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(dim, dim, rng)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = ginibre(dim, 1, rng)[:, 0]
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Ginibre mixture ``G G^dag / Tr(G G^dag)`` of the given rank (full by default)."""
    rank = dim if rank is None else rank
    G = ginibre(dim, rank, rng)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    G = ginibre(dim, dim, rng)
    H = 0.5 * (G + G.conj().T)
    return norm * H / np.linalg.norm(H, 2)
