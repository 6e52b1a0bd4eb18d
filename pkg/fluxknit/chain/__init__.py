"""Zigzag chain of data and switch qubits driven by fluxon sweeps.

Layout: d1, s1, d2, s2, ..., dN in register positions 0, 1, 2, ... Block i is
(s_i; d_i, d_{i+1}). A sweep applies the switch-conditioned block gate to
every resonant block in spatial order; biased-off blocks are skipped.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .. import statevec
from ..gates import Gate, block_unitary
from ..statevec import SeededStream, StateVector
from ..typing import Basis, ComplexArray, Direction, Outcome, QubitIndex, SwitchPrep
from ..util import NORM_TOL

logger = logging.getLogger(__name__)

SQRT_HALF = 1 / math.sqrt(2)

SWITCH_STATES: Dict[SwitchPrep, Tuple[complex, complex]] = {
    'zero': (1.0, 0.0),
    'one': (0.0, 1.0),
    'plus': (SQRT_HALF, SQRT_HALF),
}

QubitRef = Union[QubitIndex, str]
QubitInit = Union[int, Sequence[complex]]


@dataclass
class ChainConfig:
    """Chain topology and switch biasing.

    coupling_g and hbar are metadata for t_pi only.
    """
    num_data: int
    switch_enabled: List[bool] = field(default_factory=lambda: [])
    coupling_g: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.num_data < 2:
            raise ValueError(f"a chain needs at least 2 data qubits, got {self.num_data}")
        if 2 * self.num_data - 1 > statevec.MAX_QUBITS:
            raise ValueError(f"chain of {self.num_data} data qubits exceeds the {statevec.MAX_QUBITS}-qubit register cap")
        if not self.switch_enabled:
            self.switch_enabled = [True] * (self.num_data - 1)
        if len(self.switch_enabled) != self.num_data - 1:
            raise ValueError(f"expected {self.num_data - 1} switch flags, got {len(self.switch_enabled)}")

    @property
    def num_switches(self) -> int:
        return self.num_data - 1

    @property
    def num_qubits(self) -> int:
        return 2 * self.num_data - 1


def t_pi(config: ChainConfig) -> float:
    """Interaction time hbar*pi/(g*sqrt(2)) after which data and switch decouple."""
    if not config.coupling_g > 0:
        raise ValueError(f"coupling g must be positive, got {config.coupling_g}")
    return config.hbar * math.pi / (config.coupling_g * math.sqrt(2))


def _qubit(ref: QubitRef) -> QubitIndex:
    return QubitIndex.parse(ref) if isinstance(ref, str) else ref


def _single_qubit_vector(value: QubitInit) -> ComplexArray:
    if isinstance(value, int):
        if value not in (0, 1):
            raise ValueError(f"basis value must be 0 or 1, got {value}")
        return np.array([1.0, 0.0] if value == 0 else [0.0, 1.0], dtype=np.complex128)
    vector = np.asarray(value, dtype=np.complex128)
    if vector.shape != (2,):
        raise ValueError(f"single-qubit state needs 2 amplitudes, got {vector.shape}")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValueError("single-qubit state must be non-zero")
    return vector / norm


class ChainState:
    """A chain configuration together with its full register."""

    def __init__(self, config: ChainConfig, register: StateVector) -> None:
        if register.num_qubits != config.num_qubits:
            raise ValueError(f"register has {register.num_qubits} qubits, chain needs {config.num_qubits}")
        self.config = config
        self.register = register

    @property
    def num_data(self) -> int:
        return self.config.num_data

    def copy(self) -> 'ChainState':
        config = ChainConfig(
            self.config.num_data,
            list(self.config.switch_enabled),
            self.config.coupling_g,
            self.config.hbar,
        )
        return ChainState(config, self.register.copy())

    def check_qubit(self, qubit: QubitIndex) -> None:
        limit = self.num_data if qubit.role == 'data' else self.config.num_switches
        if qubit.label < 1 or qubit.label > limit:
            raise ValueError(f"qubit {qubit} is not on a chain with {self.num_data} data qubits")

    def check_switch(self, index: int) -> None:
        if index < 1 or index > self.config.num_switches:
            raise ValueError(f"switch index {index} out of range 1..{self.config.num_switches}")

    def set_switch(self, index: int, enabled: bool) -> 'ChainState':
        """Bias switch s_index on (resonant) or off; off blocks act as identity in sweeps."""
        self.check_switch(index)
        self.config.switch_enabled[index - 1] = enabled
        logger.debug(f"Switch s{index} {'enabled' if enabled else 'biased off'}")
        return self

    def prepare_qubit(self, qubit: QubitRef, value: QubitInit) -> 'ChainState':
        """Reset one unentangled qubit to a new single-qubit state."""
        qubit = _qubit(qubit)
        self.check_qubit(qubit)
        try:
            self.register = statevec.replace_qubit(self.register, qubit.position, _single_qubit_vector(value))
        except ValueError as e:
            raise ValueError(f"cannot prepare {qubit}: {e}") from e
        return self

    def prepare_switch(self, index: int, state: SwitchPrep) -> 'ChainState':
        """Put switch s_index in |0>, |1> or |+>; it must not be entangled."""
        self.check_switch(index)
        if state not in SWITCH_STATES:
            raise ValueError(f"unknown switch preparation '{state}'")
        return self.prepare_qubit(QubitIndex.switch(index), list(SWITCH_STATES[state]))

    def block_order(self, direction: Direction) -> List[int]:
        blocks = list(range(1, self.num_data))
        if direction == 'ltr':
            return blocks
        if direction == 'rtl':
            return blocks[::-1]
        raise ValueError(f"unknown sweep direction '{direction}'")

    def fluxon_sweep(self, direction: Direction = 'ltr') -> 'ChainState':
        """One fluxon pass: the block gate on each resonant block, in spatial order."""
        gate = block_unitary()
        applied: List[int] = []
        for block in self.block_order(direction):
            if not self.config.switch_enabled[block - 1]:
                continue
            targets = [QubitIndex.switch(block), QubitIndex.data(block), QubitIndex.data(block + 1)]
            self.register = statevec.apply_gate(self.register, gate, targets)
            applied.append(block)
        logger.debug(f"Fluxon sweep {direction}: blocks {applied}")
        return self

    def apply_single_layer(self, layer: Mapping[QubitRef, Optional[Gate]]) -> 'ChainState':
        """Simultaneous single-qubit gates; None entries are skipped."""
        for ref, gate in layer.items():
            if gate is None:
                continue
            qubit = _qubit(ref)
            self.check_qubit(qubit)
            self.register = statevec.apply_gate(self.register, gate, [qubit])
        return self

    def measure_switch(
        self, index: int, rng: SeededStream, basis: Basis = 'x'
    ) -> Tuple[Outcome, float, 'ChainState']:
        self.check_switch(index)
        return self.measure(QubitIndex.switch(index), basis, rng)

    def measure(self, qubit: QubitRef, basis: Basis, rng: SeededStream) -> Tuple[Outcome, float, 'ChainState']:
        qubit = _qubit(qubit)
        self.check_qubit(qubit)
        outcome, prob, self.register = statevec.measure(self.register, qubit, basis, rng)
        return outcome, prob, self

    def switches_zero_probability(self) -> float:
        """Probability that every switch reads |0> in the Z basis."""
        probs = self.register.probabilities()
        mask = 0
        for index in range(1, self.num_data):
            mask |= 1 << QubitIndex.switch(index).position
        indices = np.arange(probs.shape[0])
        return float(np.sum(probs[(indices & mask) == 0]))

    def switches_decoupled(self, tol: float = NORM_TOL) -> bool:
        return self.switches_zero_probability() >= 1.0 - tol

    def data_amplitudes(self) -> ComplexArray:
        """Amplitudes over data bits (d1 = least significant) with all switches in |0>."""
        indices = [register_index(self.num_data, bits) for bits in range(2 ** self.num_data)]
        return self.register.amps[indices].copy()


def register_index(num_data: int, data_bits: int, switch_bits: int = 0) -> int:
    """Flat basis index from data bits (d1 = bit 0) and switch bits (s1 = bit 0)."""
    full = 0
    for k in range(num_data):
        if data_bits >> k & 1:
            full |= 1 << QubitIndex.data(k + 1).position
    for k in range(num_data - 1):
        if switch_bits >> k & 1:
            full |= 1 << QubitIndex.switch(k + 1).position
    return full


def new_chain(
    config: ChainConfig,
    data: Optional[Mapping[int, QubitInit]] = None,
    switches: Optional[Mapping[int, SwitchPrep]] = None,
) -> ChainState:
    """Product state with every qubit in |0> unless given in data/switches (1-based labels)."""
    data = data or {}
    switches = switches or {}
    vectors: List[ComplexArray] = [np.array([1.0, 0.0], dtype=np.complex128)] * config.num_qubits
    for label, value in data.items():
        if label < 1 or label > config.num_data:
            raise ValueError(f"data qubit d{label} is not on a chain with {config.num_data} data qubits")
        vectors[QubitIndex.data(label).position] = _single_qubit_vector(value)
    for label, prep in switches.items():
        if label < 1 or label > config.num_switches:
            raise ValueError(f"switch s{label} is not on a chain with {config.num_data} data qubits")
        if prep not in SWITCH_STATES:
            raise ValueError(f"unknown switch preparation '{prep}'")
        vectors[QubitIndex.switch(label).position] = _single_qubit_vector(list(SWITCH_STATES[prep]))

    amps = np.array([1.0], dtype=np.complex128)
    # Position 0 is the least-significant bit, so it goes last in the Kronecker product
    for vector in vectors:
        amps = np.kron(vector, amps)
    logger.debug(f"New chain: {config.num_data} data qubits, switches {config.switch_enabled}")
    return ChainState(config, StateVector(config.num_qubits, amps))
