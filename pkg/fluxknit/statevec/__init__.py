"""Dense state-vector engine.

Qubit 0 is the least-significant bit of a basis-state label. Gates act on the
subspace of their targets, the first listed target being the most-significant
bit of the gate's own basis label.
"""

import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..gates import Gate, hadamard
from ..typing import Basis, ComplexArray, Outcome, QubitIndex, RealArray
from ..util import NORM_TOL, STATE_TOL, InvariantViolation, check_invariant

logger = logging.getLogger(__name__)

MAX_QUBITS = 24

Target = Union[int, QubitIndex]


class SeededStream:
    """Counter-based random stream.

    Draw n of stream `key` under `seed` comes from a generator seeded with
    (seed, *key, n), so results do not depend on how many other streams ran.
    """

    def __init__(self, seed: int, key: Sequence[int] = ()) -> None:
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = seed
        self.key = tuple(key)
        self.counter = 0

    def next_generator(self) -> np.random.Generator:
        generator = np.random.default_rng([self.seed, *self.key, self.counter])
        self.counter += 1
        return generator

    def random(self) -> float:
        return float(self.next_generator().random())

    def spawn(self, *key: int) -> 'SeededStream':
        return SeededStream(self.seed, (*self.key, *key))

    def __repr__(self) -> str:
        return f"SeededStream(seed={self.seed}, key={self.key}, counter={self.counter})"


class StateVector:
    """Dense amplitudes of an n-qubit register with squared norm 1."""

    def __init__(self, num_qubits: int, amps: ComplexArray) -> None:
        if num_qubits < 1 or num_qubits > MAX_QUBITS:
            raise ValueError(f"num_qubits must be 1..{MAX_QUBITS}, got {num_qubits}")
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.shape != (2 ** num_qubits,):
            raise ValueError(f"expected {2 ** num_qubits} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.real(np.vdot(amps, amps)))
        if abs(norm - 1.0) > STATE_TOL:
            raise ValueError(f"amplitudes have squared norm {norm:.12f}, expected 1")
        self.num_qubits = num_qubits
        self.amps = amps

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex] | ComplexArray) -> 'StateVector':
        """Wrap and normalize an amplitude array."""
        array = np.asarray(amps, dtype=np.complex128)
        size = array.shape[0]
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count {size} is not a power of two")
        norm = float(np.linalg.norm(array))
        if norm == 0.0:
            raise ValueError("zero vector is not a state")
        return cls(size.bit_length() - 1, array / norm)

    def copy(self) -> 'StateVector':
        return StateVector(self.num_qubits, self.amps.copy())

    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self.amps, self.amps)))

    def probabilities(self) -> RealArray:
        return np.abs(self.amps) ** 2

    def probability_of_one(self, position: int) -> float:
        """Marginal probability that the qubit at position reads 1 in the Z basis."""
        _check_position(self, position)
        probs = self.probabilities().reshape([2] * self.num_qubits)
        axis = self.num_qubits - 1 - position
        return float(np.sum(np.take(probs, 1, axis=axis)))

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


def _position(target: Target) -> int:
    return target.position if isinstance(target, QubitIndex) else int(target)


def _check_position(state: StateVector, position: int) -> None:
    if position < 0 or position >= state.num_qubits:
        raise ValueError(f"qubit position {position} out of range for {state.num_qubits} qubits")


def _axis(state: StateVector, position: int) -> int:
    # Tensor axis 0 is the most-significant bit
    return state.num_qubits - 1 - position


def init_register(num_qubits: int, basis_index: int = 0) -> StateVector:
    """Computational basis state |basis_index> on num_qubits qubits."""
    if num_qubits < 1 or num_qubits > MAX_QUBITS:
        raise ValueError(f"num_qubits must be 1..{MAX_QUBITS}, got {num_qubits}")
    if basis_index < 0 or basis_index >= 2 ** num_qubits:
        raise ValueError(f"basis index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
    amps[basis_index] = 1.0
    return StateVector(num_qubits, amps)


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[Target]) -> StateVector:
    """Apply a k-qubit gate (k <= 3) on targets and return the new state."""
    positions = [_position(t) for t in targets]
    k = len(positions)
    if k not in (1, 2, 3):
        raise ValueError(f"gates act on 1..3 qubits, got {k} targets")
    if gate.dim != 2 ** k:
        raise ValueError(f"gate {gate.label} has dimension {gate.dim}, expected {2 ** k} for {k} targets")
    if len(set(positions)) != k:
        raise ValueError(f"duplicate targets {positions}")
    for position in positions:
        _check_position(state, position)
    if not gate.unitary or not gate.is_unitary():
        raise ValueError(f"gate {gate.label} is not unitary")

    n = state.num_qubits
    axes = [_axis(state, p) for p in positions]
    psi = state.amps.reshape([2] * n)
    op = gate.matrix.reshape([2] * (2 * k))
    # Contract the gate's input legs with the target axes; output legs land first
    result = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    result = np.moveaxis(result, list(range(k)), axes)
    amps = np.ascontiguousarray(result).reshape(2 ** n)
    drift = abs(float(np.real(np.vdot(amps, amps))) - state.norm_squared())
    check_invariant(drift <= NORM_TOL, f"norm drifted by {drift:.3e} applying {gate.label}")
    out = StateVector(n, amps)
    logger.debug(f"Applied {gate.label} on positions {positions}")
    return out


def measure(
    state: StateVector,
    target: Target,
    basis: Basis,
    rng: SeededStream,
) -> Tuple[Outcome, float, StateVector]:
    """Projective single-qubit measurement with Born sampling.

    Returns the outcome ('0'/'1' in the Z basis, '+'/'-' in the X basis), the
    probability of that outcome, and the renormalized post-measurement state.
    """
    position = _position(target)
    _check_position(state, position)
    if basis not in ('z', 'x'):
        raise ValueError(f"unknown measurement basis '{basis}'")

    work = apply_gate(state, hadamard(), [position]) if basis == 'x' else state
    p1 = min(max(work.probability_of_one(position), 0.0), 1.0)
    bit = 0 if rng.random() < 1.0 - p1 else 1
    prob = p1 if bit == 1 else 1.0 - p1
    collapsed = project(work, position, bit)
    if basis == 'x':
        collapsed = apply_gate(collapsed, hadamard(), [position])
        outcome: Outcome = '+' if bit == 0 else '-'
    else:
        outcome = '1' if bit else '0'
    logger.debug(f"Measured position {position} in {basis} basis: {outcome} (p={prob:.6f})")
    return outcome, prob, collapsed


def project(state: StateVector, position: int, bit: int) -> StateVector:
    """Project the qubit at position onto |bit> and renormalize."""
    _check_position(state, position)
    psi = state.amps.reshape([2] * state.num_qubits).copy()
    axis = _axis(state, position)
    index: List[Union[slice, int]] = [slice(None)] * state.num_qubits
    index[axis] = 1 - bit
    psi[tuple(index)] = 0.0
    amps = psi.reshape(2 ** state.num_qubits)
    norm = float(np.linalg.norm(amps))
    if norm < 1e-150:
        raise InvariantViolation(f"projection of position {position} onto |{bit}> has zero probability")
    return StateVector(state.num_qubits, amps / norm)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clamped to [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"size mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    value = abs(complex(np.vdot(a.amps, b.amps))) ** 2
    return min(max(value, 0.0), 1.0)


def reduced_density_matrix(state: StateVector, position: int) -> ComplexArray:
    """2x2 reduced density matrix of one qubit."""
    _check_position(state, position)
    psi = np.moveaxis(state.amps.reshape([2] * state.num_qubits), _axis(state, position), 0)
    rows = psi.reshape(2, -1)
    return rows @ rows.conj().T


def purity(state: StateVector, position: int) -> float:
    rho = reduced_density_matrix(state, position)
    return float(np.real(np.trace(rho @ rho)))


def replace_qubit(
    state: StateVector,
    position: int,
    vector: Sequence[complex] | ComplexArray,
    tol: float = NORM_TOL,
) -> StateVector:
    """Swap an unentangled qubit's state for `vector` (normalized here).

    Raises ValueError when the qubit is entangled with the rest of the register.
    """
    new = np.asarray(vector, dtype=np.complex128)
    if new.shape != (2,):
        raise ValueError(f"single-qubit state needs 2 amplitudes, got {new.shape}")
    norm = float(np.linalg.norm(new))
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError("single-qubit state must be a finite non-zero vector")
    new = new / norm

    value = purity(state, position)
    if value < 1.0 - tol:
        raise ValueError(f"qubit at position {position} is entangled (marginal purity {value:.12f})")

    n = state.num_qubits
    axis = _axis(state, position)
    rows = np.moveaxis(state.amps.reshape([2] * n), axis, 0).reshape(2, -1)
    _, vecs = np.linalg.eigh(rows @ rows.conj().T)
    current = vecs[:, -1]
    rest = current.conj() @ rows
    rest = rest / np.linalg.norm(rest)
    rebuilt = np.outer(new, rest).reshape([2] * n)
    amps = np.moveaxis(rebuilt, 0, axis).reshape(2 ** n)
    return StateVector(n, np.ascontiguousarray(amps))


def embed(gate: Gate, targets: Sequence[Target], num_qubits: int) -> ComplexArray:
    """Dense 2^n matrix of gate acting on targets, built column by column."""
    dim = 2 ** num_qubits
    columns = [apply_gate(init_register(num_qubits, j), gate, targets).amps for j in range(dim)]
    return np.array(columns, dtype=np.complex128).T


def dump_amplitudes(state: StateVector, threshold: float = 0.0) -> List[Tuple[int, complex]]:
    """Non-negligible amplitudes as (basis index, amplitude)."""
    return [(i, complex(a)) for i, a in enumerate(state.amps) if abs(a) > threshold]
