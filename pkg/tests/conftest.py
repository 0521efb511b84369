import numpy as np
import pytest

from qdyn import matcore

SX = matcore.pauli("X")
SY = matcore.pauli("Y")
SZ = matcore.pauli("Z")
I2 = np.eye(2, dtype=complex)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def equator_triple():
    """Three equal-weight qubit states 120 degrees apart on the Bloch equator."""
    return np.array([[1, np.exp(2j * np.pi * k / 3)] for k in range(3)]) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
