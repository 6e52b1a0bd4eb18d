"""Common types used across the codebase."""

from dataclasses import dataclass
from typing import Literal, NewType

import numpy as np
import numpy.typing as npt

# Literal types for string constants
Role = Literal['data', 'switch']
Basis = Literal['z', 'x']
Direction = Literal['ltr', 'rtl']
SwitchPrep = Literal['zero', 'one', 'plus']

# Z-basis outcomes are '0'/'1', X-basis outcomes are '+'/'-'
Outcome = Literal['0', '1', '+', '-']

# Flat register position of a qubit (qubit 0 is the least-significant bit)
Position = NewType('Position', int)

# Dense complex arrays
ComplexArray = npt.NDArray[np.complex128]
RealArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class QubitIndex:
    """A chain qubit by role and 1-based label (d1..dN, s1..s(N-1)).

    The flat position follows the zigzag interleaving d1, s1, d2, s2, ..., dN.
    """
    role: Role
    label: int

    @property
    def position(self) -> Position:
        if self.role == 'data':
            return Position(2 * (self.label - 1))
        return Position(2 * self.label - 1)

    @classmethod
    def data(cls, label: int) -> 'QubitIndex':
        return cls('data', label)

    @classmethod
    def switch(cls, label: int) -> 'QubitIndex':
        return cls('switch', label)

    @classmethod
    def parse(cls, text: str) -> 'QubitIndex':
        """Parse `dK` / `sK` labels."""
        text = text.strip().lower()
        if len(text) < 2 or text[0] not in ('d', 's') or not text[1:].isdigit():
            raise ValueError(f"bad qubit label '{text}'")
        role: Role = 'data' if text[0] == 'd' else 'switch'
        return cls(role, int(text[1:]))

    def __str__(self) -> str:
        return f"{'d' if self.role == 'data' else 's'}{self.label}"
