"""Named trace-preserving maps used as test probes."""
from __future__ import annotations

from typing import Dict

import numpy as np

from . import matcore
from .lindblad import amplitude_damping, dephasing, propagator
from .maps import LinearMap, depolarizing_map, identity_map, transpose_map, unitary_map
from .sampling import haar_unitary

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def map_suite(seed: int = 1234) -> Dict[str, LinearMap]:
    rng = np.random.default_rng(seed)
    suite = {
        "identity-2": identity_map(2),
        "unitary-hadamard": unitary_map(HADAMARD),
        "unitary-sx": unitary_map(matcore.pauli("X")),
        "unitary-haar-3": unitary_map(haar_unitary(3, rng)),
        "depolarizing-0.25": depolarizing_map(2, 0.25),
        "depolarizing-0.5": depolarizing_map(2, 0.5),
        "depolarizing-1": depolarizing_map(2, 1.0),
        "depolarizing-3-0.4": depolarizing_map(3, 0.4),
        "damping-t0.5": propagator(amplitude_damping(1.0), 0.5),
        "damping-t3": propagator(amplitude_damping(1.0, omega=2.0), 3.0),
        "dephasing-t1": propagator(dephasing(0.3), 1.0),
        "transpose-2": transpose_map(2),
        "transpose-3": transpose_map(3),
        "id0.9-transpose0.1": 0.9 * identity_map(2) + 0.1 * transpose_map(2),
        "id0.5-transpose0.5": 0.5 * identity_map(2) + 0.5 * transpose_map(2),
        # 1.2 rho - 0.2 Tr(rho) I/d: not even positive
        "overshoot-1.2": depolarizing_map(2, -0.2),
    }
    return suite
