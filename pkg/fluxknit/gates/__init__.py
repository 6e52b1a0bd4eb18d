"""Named gates and conditional operators of the zigzag chain.

Basis convention: for a 2- or 3-qubit gate the first listed target is the
most-significant bit of the gate's basis label, so the 4x4 matrices below are
written in the order |00>, |01>, |10>, |11> read as |first, second>.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Sequence, Tuple

import numpy as np

from ..typing import ComplexArray
from ..util import GATE_TOL, UNITARY_TOL

logger = logging.getLogger(__name__)

Axis = Literal['x', 'y', 'z']

_PAULI: Dict[str, List[List[complex]]] = {
    'x': [[0, 1], [1, 0]],
    'y': [[0, -1j], [1j, 0]],
    'z': [[1, 0], [0, -1]],
}


@dataclass(frozen=True)
class Gate:
    """Immutable dim x dim matrix with a name tag.

    `unitary` is False only for the U+/U- conditional operators, which are
    projector-weighted halves of the block unitary and never applied as gates.
    """
    matrix: ComplexArray
    label: str
    unitary: bool = True
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"gate {self.label}: matrix must be square, got {matrix.shape}")
        # Dense semantics of whole programs also use this type, so any 2^n goes
        if matrix.shape[0] < 2 or matrix.shape[0] & (matrix.shape[0] - 1):
            raise ValueError(f"gate {self.label}: dimension {matrix.shape[0]} is not a power of two")
        if not np.all(np.isfinite(matrix)):
            raise ValueError(f"gate {self.label}: non-finite entries")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'dim', matrix.shape[0])

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        eye = np.eye(self.dim, dtype=np.complex128)
        return bool(np.max(np.abs(self.matrix @ self.matrix.conj().T - eye)) <= tol)

    def apply_to(self, vector: Sequence[complex]) -> ComplexArray:
        """Matrix-vector product in the gate's own basis."""
        return self.matrix @ np.asarray(vector, dtype=np.complex128)

    def __matmul__(self, other: 'Gate') -> 'Gate':
        return compose(self, other)

    def __repr__(self) -> str:
        return f"Gate({self.label}, dim={self.dim})"


ConditionalOperator = Gate


def from_matrix(matrix: Sequence[Sequence[complex]] | ComplexArray, label: str = 'U') -> Gate:
    """Wrap a matrix as a gate, rejecting non-unitary input."""
    gate = Gate(np.asarray(matrix, dtype=np.complex128), label)
    if not gate.is_unitary():
        raise ValueError(f"gate {label} is not unitary within {UNITARY_TOL}")
    return gate


def identity(dim: int = 2) -> Gate:
    return Gate(np.eye(dim, dtype=np.complex128), 'I' if dim == 2 else f'I{dim}')


def pauli(axis: Axis) -> Gate:
    if axis not in _PAULI:
        raise ValueError(f"unknown Pauli axis '{axis}'")
    return Gate(np.array(_PAULI[axis], dtype=np.complex128), axis.upper())


def hadamard() -> Gate:
    return Gate(np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2), 'H')


def rotation(axis: Axis, theta: float) -> Gate:
    """R_axis(theta) = I cos(theta/2) - i sigma_axis sin(theta/2)."""
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    sigma = pauli(axis).matrix
    matrix = np.eye(2, dtype=np.complex128) * math.cos(theta / 2) - 1j * sigma * math.sin(theta / 2)
    return Gate(matrix, f'R{axis.upper()}({theta:.6g})')


def phase(delta: float) -> Gate:
    """diag(1, e^{i delta}); carries the global phase of a controlled-V onto the control."""
    return Gate(np.diag([1.0, np.exp(1j * delta)]).astype(np.complex128), f'PHASE({delta:.6g})')


def u0() -> Gate:
    """JP+SWAP gate: block evolution over t_pi with the switch in |0>."""
    return Gate(np.array([
        [1, 0, 0, 0],
        [0, 0, -1, 0],
        [0, -1, 0, 0],
        [0, 0, 0, -1],
    ], dtype=np.complex128), 'U0')


def u1() -> Gate:
    """Block evolution over t_pi with the switch in |1>."""
    return Gate(-np.array([
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, -1],
    ], dtype=np.complex128), 'U1')


def jp() -> Gate:
    """Joint-phase gate: reverses the sign of |00> only."""
    return Gate(np.diag([-1, 1, 1, 1]).astype(np.complex128), 'JP')


def swap2() -> Gate:
    return Gate(np.array([
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ], dtype=np.complex128), 'SWAP')


def cnot() -> Gate:
    """Controlled-NOT, control on the first wire."""
    return Gate(np.array([
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ], dtype=np.complex128), 'CNOT')


def cz() -> Gate:
    return Gate(np.diag([1, 1, 1, -1]).astype(np.complex128), 'CZ')


def cns() -> Gate:
    """CNOT followed by SWAP: |c, t> -> |t xor c, c>."""
    return Gate(swap2().matrix @ cnot().matrix, 'CNS')


def block_unitary() -> Gate:
    """Switch-conditioned block gate on (s; d_i, d_{i+1}).

    |0><0|_s (x) U0 + |1><1|_s (x) U1, the switch being the most-significant
    wire.
    """
    matrix = np.zeros((8, 8), dtype=np.complex128)
    matrix[:4, :4] = u0().matrix
    matrix[4:, 4:] = u1().matrix
    return Gate(matrix, 'BLOCK')


def u_plus() -> Gate:
    """(U0 + U1)/2 = -|01><10| - |10><01|; flags differing neighbours."""
    return Gate((u0().matrix + u1().matrix) / 2, 'U+', unitary=False)


def u_minus() -> Gate:
    """(U0 - U1)/2 = |00><00| - |11><11|; flags equal neighbours.

    The |11><11| sign is negative here, while the printed form of this operator
    has it positive. Derived from the U0/U1 matrices, not transcribed.
    """
    return Gate((u0().matrix - u1().matrix) / 2, 'U-', unitary=False)


def random_unitary(generator: np.random.Generator, dim: int = 2) -> Gate:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (generator.standard_normal((dim, dim)) + 1j * generator.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return Gate(q * (d / np.abs(d)), 'V')


def compose(a: Gate, b: Gate) -> Gate:
    """Matrix product a @ b (b acts first)."""
    if a.dim != b.dim:
        raise ValueError(f"cannot compose {a.label} (dim {a.dim}) with {b.label} (dim {b.dim})")
    return Gate(a.matrix @ b.matrix, f'{a.label}*{b.label}', unitary=a.unitary and b.unitary)


def tensor(a: Gate, b: Gate) -> Gate:
    """Kronecker product; a occupies the most-significant wires."""
    return Gate(np.kron(a.matrix, b.matrix), f'{a.label}(x){b.label}', unitary=a.unitary and b.unitary)


def dagger(a: Gate) -> Gate:
    return Gate(a.matrix.conj().T, f'{a.label}^', unitary=a.unitary)


def global_phase(a: Gate, b: Gate) -> complex:
    """Unit phase lambda minimising ||a - lambda b||_F (1 when a is orthogonal to b)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    overlap = complex(np.vdot(b.matrix, a.matrix))
    if abs(overlap) < 1e-300:
        return 1.0 + 0.0j
    return overlap / abs(overlap)


def phase_distance(a: Gate, b: Gate) -> float:
    """min over unit lambda of ||a - lambda b||_F."""
    lam = global_phase(a, b)
    return float(np.linalg.norm(a.matrix - lam * b.matrix))


def equal_up_to_global_phase(a: Gate, b: Gate, tol: float = GATE_TOL) -> bool:
    return phase_distance(a, b) <= tol


# Single-qubit words over {I, X, Z, H}. A word "HX" is the matrix product H.X,
# so X acts first.
_LETTERS = 'IXZH'


def word_matrix(word: str) -> ComplexArray:
    letters = {'I': identity(), 'X': pauli('x'), 'Z': pauli('z'), 'H': hadamard()}
    matrix = np.eye(2, dtype=np.complex128)
    for letter in word:
        if letter not in letters:
            raise ValueError(f"unknown letter '{letter}' in word '{word}'")
        matrix = matrix @ letters[letter].matrix
    return matrix


def dressing_words(max_length: int = 2) -> Iterator[str]:
    """All words of length 1..max_length, shortest first."""
    for length in range(1, max_length + 1):
        for letters in itertools.product(_LETTERS, repeat=length):
            yield ''.join(letters)


def distinct_words(max_length: int = 2) -> List[str]:
    """One representative word per matrix class modulo global phase."""
    representatives: List[str] = []
    matrices: List[Gate] = []
    for word in dressing_words(max_length):
        gate = Gate(word_matrix(word), word)
        if not any(equal_up_to_global_phase(gate, seen) for seen in matrices):
            representatives.append(word)
            matrices.append(gate)
    return representatives


@dataclass(frozen=True)
class Dressing:
    """Single-qubit layers around U0: post . U0 . pre == phase * CNS."""
    pre: Tuple[str, str]
    post: Tuple[str, str]
    residual: float

    def pre_gates(self) -> Tuple[Gate, Gate]:
        return Gate(word_matrix(self.pre[0]), self.pre[0]), Gate(word_matrix(self.pre[1]), self.pre[1])

    def post_gates(self) -> Tuple[Gate, Gate]:
        return Gate(word_matrix(self.post[0]), self.post[0]), Gate(word_matrix(self.post[1]), self.post[1])

    def dressed(self) -> Gate:
        pre = np.kron(word_matrix(self.pre[0]), word_matrix(self.pre[1]))
        post = np.kron(word_matrix(self.post[0]), word_matrix(self.post[1]))
        return Gate(post @ u0().matrix @ pre, 'dressed-U0')

    @property
    def chainable(self) -> bool:
        """True when the middle wire of a cascade needs no gate between blocks.

        In a cascade the second wire of block k is the first wire of block k+1,
        so it receives post[1] and then pre[0].
        """
        between = Gate(word_matrix(self.pre[0]) @ word_matrix(self.post[1]), 'between')
        return equal_up_to_global_phase(between, identity())


def search_cns_dressings(max_length: int = 2, tol: float = GATE_TOL) -> List[Dressing]:
    """Every (pre, post) pair of single-qubit words turning U0 into CNS up to phase."""
    words = distinct_words(max_length)
    mats = np.array([word_matrix(w) for w in words])
    pairs = list(itertools.product(range(len(words)), repeat=2))
    layers = np.array([np.kron(mats[a], mats[b]) for a, b in pairs])
    target = cns().matrix
    # products[p, q] = layers[p] @ U0 @ layers[q]
    products = np.einsum('pij,jk,qkl->pqil', layers, u0().matrix, layers)
    overlaps = np.einsum('il,pqil->pq', target.conj(), products)
    magnitudes = np.abs(overlaps)
    lam = np.where(magnitudes > 0, overlaps / np.where(magnitudes > 0, magnitudes, 1), 1)
    residuals = np.linalg.norm(products - lam[:, :, None, None] * target, axis=(2, 3))

    found: List[Dressing] = []
    for p, q in zip(*np.nonzero(residuals <= tol)):
        post_pair, pre_pair = pairs[int(p)], pairs[int(q)]
        found.append(Dressing(
            pre=(words[pre_pair[0]], words[pre_pair[1]]),
            post=(words[post_pair[0]], words[post_pair[1]]),
            residual=float(residuals[p, q]),
        ))
    logger.debug(f"Dressing search over {len(words)} words found {len(found)} CNS dressings")
    return found
