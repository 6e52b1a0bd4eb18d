"""Pass programs: the instruction stream a compiled operation runs as."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..gates import Gate
from ..typing import Basis, Direction, Outcome, QubitIndex, SwitchPrep

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SingleLayer:
    """Simultaneous single-qubit gates, at most one per qubit."""
    gates: Tuple[Tuple[QubitIndex, Gate], ...]

    def __post_init__(self) -> None:
        qubits = [q for q, _ in self.gates]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"layer addresses a qubit twice: {[str(q) for q in qubits]}")
        for qubit, gate in self.gates:
            if gate.dim != 2:
                raise ValueError(f"layer gate {gate.label} on {qubit} is not single-qubit")

    @classmethod
    def of(cls, gates: Dict[QubitIndex, Gate]) -> 'SingleLayer':
        return cls(tuple(sorted(gates.items(), key=lambda item: (item[0].role, item[0].label))))


@dataclass(frozen=True)
class Sweep:
    direction: Direction = 'ltr'


@dataclass(frozen=True)
class SetSwitch:
    index: int
    enabled: bool


@dataclass(frozen=True)
class PrepareSwitch:
    index: int
    state: SwitchPrep


@dataclass(frozen=True)
class MeasureSwitch:
    index: int
    basis: Basis = 'x'


Instruction = Union[SingleLayer, Sweep, SetSwitch, PrepareSwitch, MeasureSwitch]


@dataclass(frozen=True)
class MeasurementRecord:
    qubit: str
    basis: Basis
    outcome: Outcome
    probability: float


@dataclass(frozen=True)
class WirePermutation:
    """Where each logical data qubit physically sits.

    `where[k - 1]` is the physical data label holding logical d_k.
    """
    where: Tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.where) != list(range(1, len(self.where) + 1)):
            raise ValueError(f"not a permutation: {self.where}")

    @classmethod
    def identity(cls, num_data: int) -> 'WirePermutation':
        return cls(tuple(range(1, num_data + 1)))

    @property
    def is_identity(self) -> bool:
        return self.where == tuple(range(1, len(self.where) + 1))

    def physical(self, logical: int) -> int:
        return self.where[logical - 1]

    def logical_at(self, physical: int) -> int:
        return self.where.index(physical) + 1

    def swapped(self, a: int, b: int) -> 'WirePermutation':
        """Exchange whatever sits on physical labels a and b."""
        where = list(self.where)
        for k, position in enumerate(where):
            if position == a:
                where[k] = b
            elif position == b:
                where[k] = a
        return WirePermutation(tuple(where))

    def after_sweep(self, enabled: Sequence[bool], direction: Direction) -> 'WirePermutation':
        """Each resonant block swaps its data pair, in sweep order."""
        blocks = list(range(1, len(enabled) + 1))
        if direction == 'rtl':
            blocks.reverse()
        result = self
        for block in blocks:
            if enabled[block - 1]:
                result = result.swapped(block, block + 1)
        return result


@dataclass(frozen=True)
class PassProgram:
    num_data: int
    instructions: Tuple[Instruction, ...] = field(default_factory=tuple)

    def then(self, *instructions: Instruction) -> 'PassProgram':
        return PassProgram(self.num_data, self.instructions + tuple(instructions))

    def has_measurements(self) -> bool:
        return any(isinstance(i, MeasureSwitch) for i in self.instructions)

    def validate(self) -> None:
        """Every referenced qubit exists on a chain of num_data data qubits."""
        if self.num_data < 2:
            raise ValueError(f"programs need at least 2 data qubits, got {self.num_data}")
        for instruction in self.instructions:
            if isinstance(instruction, SingleLayer):
                for qubit, _ in instruction.gates:
                    limit = self.num_data if qubit.role == 'data' else self.num_data - 1
                    if not 1 <= qubit.label <= limit:
                        raise ValueError(f"program references undeclared qubit {qubit}")
            elif isinstance(instruction, (SetSwitch, PrepareSwitch, MeasureSwitch)):
                if not 1 <= instruction.index <= self.num_data - 1:
                    raise ValueError(f"program references undeclared switch s{instruction.index}")

    def track_permutation(self, enabled: Optional[Sequence[bool]] = None) -> WirePermutation:
        """Wire permutation after the whole program, all switches on unless given."""
        return self.permutation_before(len(self.instructions), enabled)

    def permutation_before(self, stop: int, enabled: Optional[Sequence[bool]] = None) -> WirePermutation:
        flags: List[bool] = list(enabled) if enabled is not None else [True] * (self.num_data - 1)
        perm = WirePermutation.identity(self.num_data)
        for instruction in self.instructions[:stop]:
            if isinstance(instruction, SetSwitch):
                flags[instruction.index - 1] = instruction.enabled
            elif isinstance(instruction, Sweep):
                perm = perm.after_sweep(flags, instruction.direction)
        return perm
