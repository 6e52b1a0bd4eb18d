"""Compile CNS gates, fan-out and controlled-V into fluxon pass programs.

Every enabled block of a sweep with its switch in |0> acts on the data pair as
U0 = -SWAP.JP. Tracking the swap as a relabeling of wires, a block is a plain
JP between the two logical qubits it touches, so the compiler addresses every
layer gate to the current physical location of its logical qubit.
"""

import cmath
import functools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import gates
from ..chain import ChainConfig, ChainState, new_chain
from ..gates import Dressing, Gate
from ..statevec import SeededStream, embed
from ..typing import ComplexArray, Direction, QubitIndex
from ..util import UNITARY_TOL, InvariantViolation, check_invariant
from .program import (
    Instruction, MeasureSwitch, MeasurementRecord, PassProgram, PrepareSwitch, SetSwitch,
    SingleLayer, Sweep, WirePermutation,
)

logger = logging.getLogger(__name__)

__all__ = [
    'EulerAngles', 'Instruction', 'MeasureSwitch', 'MeasurementRecord', 'PassProgram',
    'PrepareSwitch', 'SetSwitch', 'SingleLayer', 'Sweep', 'WirePermutation',
    'abc_factors', 'assign_control', 'cns_dressing', 'compile_controlled_v',
    'compile_fanout', 'controlled_v_matrix', 'execute', 'program_semantics', 'zyz_decompose',
]

_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class EulerAngles:
    """V = e^{i delta} Rz(alpha) Ry(theta) Rz(beta)."""
    delta: float
    alpha: float
    theta: float
    beta: float

    def matrix(self) -> ComplexArray:
        rz_a = gates.rotation('z', self.alpha).matrix
        ry_t = gates.rotation('y', self.theta).matrix
        rz_b = gates.rotation('z', self.beta).matrix
        return cmath.exp(1j * self.delta) * (rz_a @ ry_t @ rz_b)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.delta, self.alpha, self.theta, self.beta)


def _wrap(angle: float) -> Tuple[float, int]:
    """Angle folded into (-pi, pi] and the number of 2*pi turns removed.

    Angles within _DEGENERATE_TOL of either end land on pi exactly.
    """
    turns = 0
    while angle > math.pi:
        angle -= 2 * math.pi
        turns += 1
    while angle <= -math.pi + _DEGENERATE_TOL:
        angle += 2 * math.pi
        turns -= 1
    if angle > math.pi - _DEGENERATE_TOL:
        angle = math.pi
    return angle, turns


def zyz_decompose(v: Gate | ComplexArray) -> EulerAngles:
    """Euler angles of a 2x2 unitary with theta in [0, pi].

    When theta is 0 or pi only alpha +/- beta is defined; beta is fixed to 0.
    """
    matrix = np.asarray(v.matrix if isinstance(v, Gate) else v, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValueError(f"zyz_decompose needs a 2x2 matrix, got {matrix.shape}")
    if np.max(np.abs(matrix @ matrix.conj().T - np.eye(2))) > UNITARY_TOL:
        raise ValueError("zyz_decompose input is not unitary")

    delta = cmath.phase(complex(np.linalg.det(matrix))) / 2
    su2 = cmath.exp(-1j * delta) * matrix
    cos_half = abs(su2[0, 0])
    sin_half = abs(su2[1, 0])
    theta = 2 * math.atan2(sin_half, cos_half)

    if sin_half < _DEGENERATE_TOL:
        alpha, beta = 2 * cmath.phase(su2[1, 1]), 0.0
    elif cos_half < _DEGENERATE_TOL:
        alpha, beta = 2 * cmath.phase(su2[1, 0]), 0.0
    else:
        total = 2 * cmath.phase(su2[1, 1])
        diff = 2 * cmath.phase(su2[1, 0])
        alpha, beta = (total + diff) / 2, (total - diff) / 2

    # Each 2*pi turn of an Rz flips its sign; push the sign into delta
    alpha, turns_a = _wrap(alpha)
    beta, turns_b = _wrap(beta)
    if (turns_a + turns_b) % 2:
        delta += math.pi
    delta, _ = _wrap(delta)

    angles = EulerAngles(delta, alpha, theta, beta)
    error = float(np.linalg.norm(angles.matrix() - matrix))
    check_invariant(error < 1e-9, f"ZYZ reconstruction error {error:.3e} for {matrix.tolist()}")
    return angles


def abc_factors(angles: EulerAngles) -> Tuple[Gate, Gate, Gate]:
    """A, B, C with A.B.C = I and e^{i delta} A.X.B.X.C = V."""
    alpha, theta, beta = angles.alpha, angles.theta, angles.beta
    a = gates.compose(gates.rotation('z', alpha), gates.rotation('y', theta / 2))
    b = gates.compose(gates.rotation('y', -theta / 2), gates.rotation('z', -(alpha + beta) / 2))
    c = gates.rotation('z', (beta - alpha) / 2)
    return (
        gates.Gate(a.matrix, 'A'),
        gates.Gate(b.matrix, 'B'),
        gates.Gate(c.matrix, 'C'),
    )


# Dressing read off the CNS circuit diagram; checked before falling back to search
CANDIDATE_DRESSING = Dressing(pre=('X', 'XH'), post=('HX', 'X'), residual=0.0)


@functools.lru_cache(maxsize=None)
def cns_dressing() -> Dressing:
    """Single-qubit layers with post . U0 . pre = CNS up to phase, usable in cascades."""
    residual = gates.phase_distance(CANDIDATE_DRESSING.dressed(), gates.cns())
    if residual <= gates.GATE_TOL:
        logger.debug(f"Candidate CNS dressing verified (residual {residual:.2e})")
        return Dressing(CANDIDATE_DRESSING.pre, CANDIDATE_DRESSING.post, residual)

    logger.warning(f"Candidate CNS dressing fails (residual {residual:.3e}); searching")
    found = gates.search_cns_dressings()
    chainable = [d for d in found if d.chainable]
    if not chainable:
        raise InvariantViolation(
            f"no chainable CNS dressing of U0 among {len(found)} dressings; "
            f"U0={gates.u0().matrix.tolist()}"
        )
    logger.info(f"Using searched CNS dressing pre={chainable[0].pre} post={chainable[0].post}")
    return chainable[0]


def _word_gate(word: str) -> Gate:
    return Gate(gates.word_matrix(word), word)


def _switch_settings(num_data: int, first: int, last: int) -> List[Instruction]:
    """Resonant blocks first..last-1, everything else biased off."""
    return [SetSwitch(i, first <= i < last) for i in range(1, num_data)]


def compile_fanout(num_data: int, first: int = 1, last: Optional[int] = None) -> PassProgram:
    """CNS(first, first+1); ...; CNS(last-1, last) as one LTR pass plus two layers."""
    last = num_data if last is None else last
    if num_data < 2:
        raise ValueError(f"fan-out needs at least 2 data qubits, got {num_data}")
    if not 1 <= first < last <= num_data:
        raise ValueError(f"bad fan-out range d{first}..d{last} on {num_data} data qubits")

    dressing = cns_dressing()
    pre_first, pre_rest = (_word_gate(w) for w in dressing.pre)
    post_rest, post_last = (_word_gate(w) for w in dressing.post)

    pre: Dict[QubitIndex, Gate] = {QubitIndex.data(first): pre_first}
    post: Dict[QubitIndex, Gate] = {QubitIndex.data(last): post_last}
    for k in range(first + 1, last + 1):
        pre[QubitIndex.data(k)] = pre_rest
    for k in range(first, last):
        post[QubitIndex.data(k)] = post_rest

    program = PassProgram(num_data).then(
        *_switch_settings(num_data, first, last),
        SingleLayer.of(pre),
        Sweep('ltr'),
        SingleLayer.of(post),
    )
    logger.debug(
        f"Fan-out d{first}..d{last}: logical d{first} ends on d{program.track_permutation().physical(first)}"
    )
    return program


def compile_controlled_v(control: int, target: int, v: Gate | ComplexArray, num_data: int) -> PassProgram:
    """Round-trip program applying V to d_target iff d_control is |1>.

    The control rides the fluxon to the target and back; its JP with every
    qubit in between happens twice and cancels, while the target sees
    JP . (X H B H X) . JP between the outer layers, which is CNOT.B.CNOT up to
    the X/H dressing.
    """
    for label in (control, target):
        if not 1 <= label <= num_data:
            raise ValueError(f"d{label} is not on a chain with {num_data} data qubits")
    if control == target:
        raise ValueError("control and target must differ")

    matrix = v.matrix if isinstance(v, Gate) else np.asarray(v, dtype=np.complex128)
    angles = zyz_decompose(matrix)
    a, b, c = abc_factors(angles)
    x, h = gates.pauli('x'), gates.hadamard()

    lo, hi = min(control, target), max(control, target)
    outbound: Direction = 'ltr' if control < target else 'rtl'
    inbound: Direction = 'rtl' if outbound == 'ltr' else 'ltr'

    program = PassProgram(num_data).then(
        *_switch_settings(num_data, lo, hi),
        SingleLayer.of({
            QubitIndex.data(control): x,
            QubitIndex.data(target): Gate(x.matrix @ h.matrix @ c.matrix, 'XHC'),
        }),
        Sweep(outbound),
    )

    enabled = [False] * (num_data - 1)
    parked = program.track_permutation(enabled).physical(target)
    program = program.then(
        SingleLayer.of({QubitIndex.data(parked): Gate(x.matrix @ h.matrix @ b.matrix @ h.matrix @ x.matrix, 'XHBHX')}),
        Sweep(inbound),
        SingleLayer.of({
            QubitIndex.data(control): Gate(gates.phase(angles.delta).matrix @ x.matrix, 'PX'),
            QubitIndex.data(target): Gate(a.matrix @ h.matrix @ x.matrix, 'AHX'),
        }),
    )

    final = program.track_permutation(enabled)
    check_invariant(final.is_identity, f"controlled-V program leaves wires permuted: {final.where}")
    logger.debug(
        f"Controlled-V d{control}->d{target}: angles {angles.as_tuple()}, target parked on d{parked}"
    )
    return program


def assign_control(program: PassProgram, start: int) -> PassProgram:
    """Bias off every switch left of d_start so passes begin at d_start.

    Qubits left of d_start keep their layer gates; instructions re-enabling
    their switches are dropped.
    """
    if not 1 <= start <= program.num_data:
        raise ValueError(f"start qubit d{start} out of range 1..{program.num_data}")

    kept: List[Instruction] = [SetSwitch(i, False) for i in range(1, start)]
    for instruction in program.instructions:
        if isinstance(instruction, SetSwitch) and instruction.index < start:
            continue
        kept.append(instruction)
    return PassProgram(program.num_data, tuple(kept))


def execute(
    program: PassProgram,
    chain: ChainState,
    rng: Optional[SeededStream] = None,
) -> List[MeasurementRecord]:
    """Run a program on a chain in place; returns the measurement records."""
    program.validate()
    if program.num_data != chain.num_data:
        raise ValueError(f"program is for {program.num_data} data qubits, chain has {chain.num_data}")
    records: List[MeasurementRecord] = []
    for instruction in program.instructions:
        if isinstance(instruction, SingleLayer):
            chain.apply_single_layer({q: g for q, g in instruction.gates})
        elif isinstance(instruction, Sweep):
            chain.fluxon_sweep(instruction.direction)
        elif isinstance(instruction, SetSwitch):
            chain.set_switch(instruction.index, instruction.enabled)
        elif isinstance(instruction, PrepareSwitch):
            chain.prepare_switch(instruction.index, instruction.state)
        else:
            if rng is None:
                raise ValueError("program measures but no random stream was given")
            outcome, prob, _ = chain.measure_switch(instruction.index, rng, instruction.basis)
            records.append(MeasurementRecord(f"s{instruction.index}", instruction.basis, outcome, prob))
    return records


def program_semantics(program: PassProgram, num_data: Optional[int] = None) -> Gate:
    """Dense unitary of a measurement-free program on the data qubits.

    Columns come from running the program on every data basis state with the
    switches in |0>; every switch must end in |0> again.
    """
    n = program.num_data if num_data is None else num_data
    if n != program.num_data:
        raise ValueError(f"program is for {program.num_data} data qubits, not {n}")
    if program.has_measurements():
        raise ValueError("program_semantics needs a measurement-free program")

    columns: List[ComplexArray] = []
    for bits in range(2 ** n):
        chain = new_chain(ChainConfig(n), data={k + 1: bits >> k & 1 for k in range(n)})
        execute(program, chain)
        if not chain.switches_decoupled():
            raise InvariantViolation(
                f"switches fail to decouple on data input {bits:0{n}b}: "
                f"P(all |0>)={chain.switches_zero_probability():.12f}"
            )
        columns.append(chain.data_amplitudes())
    matrix = np.array(columns, dtype=np.complex128).T
    semantics = Gate(matrix, 'program')
    if not semantics.is_unitary():
        raise InvariantViolation("program semantics are not unitary on the data register")
    return semantics


def controlled_v_matrix(control: int, target: int, v: Gate | ComplexArray, num_data: int) -> ComplexArray:
    """Dense controlled-V on data qubits (d1 = least-significant bit)."""
    matrix = v.matrix if isinstance(v, Gate) else np.asarray(v, dtype=np.complex128)
    dim = 2 ** num_data
    out = np.zeros((dim, dim), dtype=np.complex128)
    c_bit, t_bit = control - 1, target - 1
    for col in range(dim):
        if not col >> c_bit & 1:
            out[col, col] = 1.0
            continue
        t_in = col >> t_bit & 1
        for t_out in (0, 1):
            row = (col & ~(1 << t_bit)) | (t_out << t_bit)
            out[row, col] += matrix[t_out, t_in]
    return out


def cascade_matrix(pairs: Sequence[Tuple[int, int]], gate: Gate, num_data: int) -> ComplexArray:
    """Dense product of a two-qubit gate applied to (first, second) data pairs in order."""
    result = np.eye(2 ** num_data, dtype=np.complex128)
    for first, second in pairs:
        result = embed(gate, [first - 1, second - 1], num_data) @ result
    return result
