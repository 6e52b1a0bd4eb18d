"""Shared utilities for fluxknit tests.

The dense operators here are built entry by entry from bit patterns, without
going through the state-vector engine, so they can serve as oracles for it.
"""
import logging
import math
from typing import List, Sequence

import numpy as np

from fluxknit.statevec import StateVector
from fluxknit.typing import ComplexArray

logger = logging.getLogger(__name__)

ZERO = np.array([1.0, 0.0], dtype=np.complex128)
PLUS = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2)
MINUS = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2)


def dense_operator(matrix: ComplexArray, positions: Sequence[int], num_qubits: int) -> ComplexArray:
    """2^n matrix of `matrix` acting on positions (first position = gate MSB).

    Args:
        matrix: 2^k x 2^k gate matrix
        positions: Register positions, qubit 0 being the least-significant bit
        num_qubits: Register size

    Returns:
        ComplexArray: The embedded operator
    """
    k = len(positions)
    dim = 2 ** num_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        g_in = 0
        for position in positions:
            g_in = (g_in << 1) | (col >> position & 1)
        for g_out in range(2 ** k):
            row = col
            for j, position in enumerate(positions):
                bit = g_out >> (k - 1 - j) & 1
                row = (row & ~(1 << position)) | (bit << position)
            out[row, col] += matrix[g_out, g_in]
    return out


def product_state(vectors: Sequence[ComplexArray]) -> ComplexArray:
    """Amplitudes of a product state; vectors[p] is the qubit at position p."""
    amps = np.array([1.0], dtype=np.complex128)
    for vector in vectors:
        amps = np.kron(vector, amps)
    return amps


def chain_product(num_data: int, data: Sequence[ComplexArray]) -> ComplexArray:
    """Chain product state with the given data vectors and every switch in |0>."""
    vectors: List[ComplexArray] = []
    for position in range(2 * num_data - 1):
        vectors.append(data[position // 2] if position % 2 == 0 else ZERO)
    return product_state(vectors)


def random_state(generator: np.random.Generator, num_qubits: int) -> StateVector:
    raw = generator.standard_normal(2 ** num_qubits) + 1j * generator.standard_normal(2 ** num_qubits)
    return StateVector.from_amplitudes(raw)


def random_qubit(generator: np.random.Generator) -> ComplexArray:
    raw = generator.standard_normal(2) + 1j * generator.standard_normal(2)
    return raw / np.linalg.norm(raw)


def overlap(a: ComplexArray, b: ComplexArray) -> float:
    """|<a|b>|, which is 1 for equal states up to global phase."""
    return abs(complex(np.vdot(a, b)))


def controlled(matrix: ComplexArray) -> ComplexArray:
    """4x4 controlled version of a 2x2 matrix, control on the first wire."""
    out = np.eye(4, dtype=np.complex128)
    out[2:, 2:] = matrix
    return out
