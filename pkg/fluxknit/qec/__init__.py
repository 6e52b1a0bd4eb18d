"""Three-qubit phase-flip code on a logical block of the chain.

A logical block i holds d_i, d_{i+1}, d_{i+2} with switches s_i and s_{i+1}.
Logical |0> is |+++> and logical |1> is |--->. A phase flip on one data qubit
is a bit flip in the +/- basis, which the detection pass reads out through the
switches: a switch in |+> drives its block with (U0+U1)/2 on |+> and
(U0-U1)/2 on |->, so an X-basis reading of '-' means the pair agreed.
"""

import concurrent.futures
import functools
import logging
import math
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from statsmodels.stats.proportion import proportion_confint  # type: ignore[import-untyped]

from .. import gates
from ..chain import ChainConfig, ChainState, new_chain
from ..compiler import PassProgram, SingleLayer, compile_fanout, execute
from ..statevec import SeededStream, StateVector, fidelity
from ..typing import ComplexArray, Direction, Outcome, QubitIndex
from ..util import InvariantViolation, check_invariant

logger = logging.getLogger(__name__)

# Fidelity below 1 - FAILURE_THRESHOLD after a cycle counts as a logical error
FAILURE_THRESHOLD = 1e-6
RECOVERY_TOL = 1e-9
DETERMINISTIC_TOL = 1e-10

# Bloch vector (1, 1, 1)/sqrt(3): every logical Pauli error leaves fidelity 1/3
WITNESS_THETA = math.acos(1 / math.sqrt(3))
WITNESS_PHI = math.pi / 4

# Block offsets 0, 1, 2 stand for d_i, d_{i+1}, d_{i+2}; None is "no error"
ErrorCase = Optional[int]


@dataclass(frozen=True)
class LogicalBlock:
    """Logical qubit on blocks i and i+1 of an N-data-qubit chain."""
    index: int
    num_data: int = 0

    def __post_init__(self) -> None:
        if self.num_data == 0:
            object.__setattr__(self, 'num_data', self.index + 2)
        if self.index < 1 or self.index + 2 > self.num_data:
            raise ValueError(
                f"logical block {self.index} needs d{self.index}..d{self.index + 2} "
                f"on a chain of {self.num_data} data qubits"
            )

    @property
    def data_labels(self) -> Tuple[int, int, int]:
        return (self.index, self.index + 1, self.index + 2)

    @property
    def switch_labels(self) -> Tuple[int, int]:
        return (self.index, self.index + 1)

    def data_qubit(self, offset: int) -> QubitIndex:
        if offset not in (0, 1, 2):
            raise ValueError(f"block offset must be 0, 1 or 2, got {offset}")
        return QubitIndex.data(self.index + offset)

    def offset_of(self, label: int) -> int:
        if label not in self.data_labels:
            raise ValueError(f"d{label} is not in logical block {self.index} (d{self.index}..d{self.index + 2})")
        return label - self.index

    def describe(self, case: ErrorCase) -> str:
        return 'none' if case is None else str(self.data_qubit(case))


@dataclass(frozen=True)
class Syndrome:
    """X-basis outcomes of (s_i, s_{i+1})."""
    first: Outcome
    second: Outcome

    def __post_init__(self) -> None:
        for outcome in (self.first, self.second):
            if outcome not in ('+', '-'):
                raise ValueError(f"syndrome outcomes are '+' or '-', got '{outcome}'")

    @classmethod
    def parse(cls, text: str) -> 'Syndrome':
        """Accepts '+-', '(+,-)' and similar spellings."""
        signs = [c for c in text if c in '+-']
        if len(signs) != 2:
            raise ValueError(f"bad syndrome '{text}'")
        first, second = signs
        return cls(first, second)  # type: ignore[arg-type]

    @classmethod
    def all(cls) -> List['Syndrome']:
        return [cls(a, b) for a in ('-', '+') for b in ('-', '+')]  # type: ignore[arg-type]

    def __str__(self) -> str:
        return f"({self.first},{self.second})"


@dataclass(frozen=True)
class ErrorModel:
    """Independent sigma_z on each block data qubit with probability p."""
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability must be in [0, 1], got {self.p}")

    def sample(self, rng: SeededStream) -> Tuple[int, ...]:
        """Flipped block offsets; one generator draw covers all three qubits."""
        draws = rng.next_generator().random(3)
        return tuple(offset for offset in range(3) if draws[offset] < self.p)

    def pattern_probability(self, flips: Sequence[int]) -> float:
        k = len(set(flips))
        return self.p ** k * (1.0 - self.p) ** (3 - k)


@dataclass(frozen=True)
class RecoveryWord:
    """X on the x offsets, then Z on the z offsets."""
    xs: Tuple[int, ...] = ()
    zs: Tuple[int, ...] = ()

    @property
    def weight(self) -> int:
        return len(self.xs) + len(self.zs)

    def operations(self, block: LogicalBlock) -> List[str]:
        return [f"X {block.data_qubit(o)}" for o in self.xs] + [f"Z {block.data_qubit(o)}" for o in self.zs]

    def apply(self, chain: ChainState, block: LogicalBlock) -> ChainState:
        if self.xs:
            chain.apply_single_layer({block.data_qubit(o): gates.pauli('x') for o in self.xs})
        if self.zs:
            chain.apply_single_layer({block.data_qubit(o): gates.pauli('z') for o in self.zs})
        return chain


class QecReport(BaseModel):
    """One encode, inject, extract, decode and recover cycle."""
    format: int = 1
    num_data: int
    block: int
    direction: Direction
    amp0: Tuple[float, float]
    amp1: Tuple[float, float]
    injected: List[str] = Field(default_factory=list)
    syndrome: str
    syndrome_probabilities: Tuple[float, float]
    decoded: str
    recovery: List[str] = Field(default_factory=list)
    fidelity_before: float
    fidelity_after: float
    logical_error: bool
    seed: int
    trial: int = 0


class ErrorRateEstimate(BaseModel):
    """Monte Carlo logical error rate with its Wilson 95% interval."""
    p: float
    trials: int
    failures: int
    estimate: float
    ci_low: float
    ci_high: float
    analytic: float


def witness_amplitudes(theta: float = WITNESS_THETA, phi: float = WITNESS_PHI) -> Tuple[complex, complex]:
    return complex(math.cos(theta / 2)), complex(np.exp(1j * phi) * math.sin(theta / 2))


def _check_amplitudes(amp0: complex, amp1: complex) -> None:
    norm = abs(amp0) ** 2 + abs(amp1) ** 2
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"|amp0|^2 + |amp1|^2 = {norm:.12f}, expected 1")


def _h_layer(block: LogicalBlock) -> SingleLayer:
    return SingleLayer.of({QubitIndex.data(label): gates.hadamard() for label in block.data_labels})


def encoding_program(block: LogicalBlock) -> PassProgram:
    """Fan-out d_i -> d_{i+1}, d_{i+2} in one LTR pass, then H on the block."""
    first, _, last = block.data_labels
    return compile_fanout(block.num_data, first=first, last=last).then(_h_layer(block))


def encode(block: LogicalBlock, amp0: complex, amp1: complex) -> ChainState:
    """Fresh chain holding amp0|+++> + amp1|---> on the block, everything else |0>."""
    _check_amplitudes(amp0, amp1)
    chain = new_chain(ChainConfig(block.num_data), data={block.index: [amp0, amp1]})
    execute(encoding_program(block), chain)
    check_invariant(chain.switches_decoupled(), "switches left entangled after encoding")
    logger.debug(f"Encoded ({amp0:.6f}, {amp1:.6f}) on block {block.index}")
    return chain


def encoded_reference(block: LogicalBlock, amp0: complex, amp1: complex) -> ChainState:
    """Dense construction of the encoded state, independent of the pass program."""
    _check_amplitudes(amp0, amp1)
    plus = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2)
    minus = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2)
    zero = np.array([1.0, 0.0], dtype=np.complex128)

    def product(vector: ComplexArray) -> ComplexArray:
        amps = np.array([1.0], dtype=np.complex128)
        for position in range(2 * block.num_data - 1):
            in_block = position % 2 == 0 and position // 2 + 1 in block.data_labels
            amps = np.kron(vector if in_block else zero, amps)
        return amps

    config = ChainConfig(block.num_data)
    return ChainState(config, StateVector(config.num_qubits, amp0 * product(plus) + amp1 * product(minus)))


def inject(
    chain: ChainState,
    block: LogicalBlock,
    errors: Union[Sequence[int], ErrorModel],
    rng: Optional[SeededStream] = None,
) -> Tuple[ChainState, Tuple[int, ...]]:
    """Apply sigma_z to the given data labels, or to a pattern sampled from an ErrorModel.

    Returns the chain and the flipped block offsets.
    """
    if isinstance(errors, ErrorModel):
        if rng is None:
            raise ValueError("sampling an error model needs a random stream")
        flips = errors.sample(rng)
    else:
        flips = tuple(sorted({block.offset_of(label) for label in errors}))
    if flips:
        chain.apply_single_layer({block.data_qubit(o): gates.pauli('z') for o in flips})
    logger.debug(f"Injected phase flips on {[str(block.data_qubit(o)) for o in flips]}")
    return chain, flips


def _extract(
    chain: ChainState,
    block: LogicalBlock,
    rng: SeededStream,
    direction: Direction,
) -> Tuple[Syndrome, Tuple[float, float], ChainState]:
    if chain.num_data != block.num_data:
        raise ValueError(f"block is for {block.num_data} data qubits, chain has {chain.num_data}")
    saved = list(chain.config.switch_enabled)
    for index in range(1, chain.num_data):
        chain.set_switch(index, index in block.switch_labels)
    try:
        chain.apply_single_layer({QubitIndex.data(label): gates.hadamard() for label in block.data_labels})
        for index in block.switch_labels:
            try:
                chain.prepare_switch(index, 'plus')
            except ValueError as e:
                raise ValueError(f"syndrome extraction needs unentangled switches: {e}") from e
        chain.fluxon_sweep(direction)
        first, p_first, _ = chain.measure_switch(block.index, rng, 'x')
        second, p_second, _ = chain.measure_switch(block.index + 1, rng, 'x')
    finally:
        for index, enabled in enumerate(saved, start=1):
            chain.set_switch(index, enabled)
    syndrome = Syndrome(first, second)
    logger.debug(f"Syndrome {syndrome} on block {block.index} (p={p_first:.6f}, {p_second:.6f})")
    return syndrome, (p_first, p_second), chain


def extract_syndrome(
    chain: ChainState,
    block: LogicalBlock,
    rng: SeededStream,
    direction: Direction = 'ltr',
) -> Tuple[Syndrome, ChainState]:
    """H on the block, switches to |+>, one sweep over the block, X-basis switch readout.

    The switches are left in the measured |+>/|-> state; `recover` resets them.
    """
    syndrome, _, chain = _extract(chain, block, rng, direction)
    return syndrome, chain


def _witness_block() -> LogicalBlock:
    return LogicalBlock(1, 3)


@functools.lru_cache(maxsize=None)
def derived_decode_table(direction: Direction = 'ltr') -> Dict[Syndrome, ErrorCase]:
    """Syndrome of each correctable case, found by running the protocol."""
    block = _witness_block()
    amp0, amp1 = witness_amplitudes()
    table: Dict[Syndrome, ErrorCase] = {}
    for case in (None, 0, 1, 2):
        chain = encode(block, amp0, amp1)
        inject(chain, block, [] if case is None else [block.index + case])
        syndrome, probs, _ = _extract(chain, block, SeededStream(0), direction)
        if min(probs) < 1.0 - DETERMINISTIC_TOL:
            raise InvariantViolation(
                f"syndrome for {block.describe(case)} is not deterministic: outcome probabilities {probs}"
            )
        if syndrome in table:
            raise InvariantViolation(
                f"{direction} syndrome {syndrome} shared by {block.describe(table[syndrome])} and {block.describe(case)}"
            )
        table[syndrome] = case
    rows = ", ".join(f"{s}: {block.describe(c)}" for s, c in table.items())
    logger.debug(f"Derived {direction} decode table: {rows}")
    return table


# Decoding table as published with the protocol, in block offsets
PUBLISHED_DECODE_TABLE: Dict[Syndrome, ErrorCase] = {
    Syndrome('+', '+'): 2,
    Syndrome('+', '-'): 1,
    Syndrome('-', '+'): 0,
    Syndrome('-', '-'): None,
}


def decode(syndrome: Syndrome, direction: Direction = 'ltr') -> ErrorCase:
    return derived_decode_table(direction)[syndrome]


@dataclass(frozen=True)
class DecodeRow:
    syndrome: Syndrome
    derived: ErrorCase
    published: ErrorCase

    @property
    def agrees(self) -> bool:
        return self.derived == self.published


def decode_table_report(direction: Direction = 'ltr') -> List[DecodeRow]:
    """Derived table next to the published one; disagreements are logged."""
    table = derived_decode_table(direction)
    rows = [DecodeRow(s, table[s], PUBLISHED_DECODE_TABLE[s]) for s in Syndrome.all()]
    block = _witness_block()
    for row in rows:
        if not row.agrees:
            logger.warning(
                f"{direction} syndrome {row.syndrome}: simulation gives {block.describe(row.derived)}, "
                f"published table gives {block.describe(row.published)}"
            )
    return rows


def _all_words() -> List[RecoveryWord]:
    words: List[RecoveryWord] = []
    for x_mask in range(8):
        for z_mask in range(8):
            xs = tuple(o for o in range(3) if x_mask >> o & 1)
            zs = tuple(o for o in range(3) if z_mask >> o & 1)
            words.append(RecoveryWord(xs, zs))
    return sorted(words, key=lambda w: (w.weight, w.xs, w.zs))


def _finish(chain: ChainState, block: LogicalBlock, word: RecoveryWord) -> ChainState:
    word.apply(chain, block)
    chain.apply_single_layer({QubitIndex.data(label): gates.hadamard() for label in block.data_labels})
    for index in block.switch_labels:
        chain.prepare_switch(index, 'zero')
    return chain


@functools.lru_cache(maxsize=None)
def recovery_words(direction: Direction = 'ltr') -> Dict[Syndrome, RecoveryWord]:
    """Lowest-weight Pauli word per syndrome that restores the encoded state."""
    block = _witness_block()
    witnesses = [witness_amplitudes(), (complex(0.6), complex(0.0, 0.8))]
    words: Dict[Syndrome, RecoveryWord] = {}
    for syndrome, case in derived_decode_table(direction).items():
        measured: List[Tuple[ChainState, ChainState]] = []
        for amp0, amp1 in witnesses:
            chain = encode(block, amp0, amp1)
            inject(chain, block, [] if case is None else [block.index + case])
            _, _, chain = _extract(chain, block, SeededStream(0), direction)
            measured.append((encoded_reference(block, amp0, amp1), chain))

        for word in _all_words():
            if all(
                fidelity(_finish(post.copy(), block, word).register, ref.register) >= 1.0 - RECOVERY_TOL
                for ref, post in measured
            ):
                words[syndrome] = word
                break
        else:
            dump = measured[0][1].register.amps
            raise InvariantViolation(
                f"no Pauli word recovers {block.describe(case)} after {direction} syndrome {syndrome}; "
                f"post-measurement amplitudes {[(i, complex(a)) for i, a in enumerate(dump) if abs(a) > 1e-9]}"
            )
        logger.debug(f"Recovery for {syndrome}: {words[syndrome].operations(block)}")
    return words


def recover(
    chain: ChainState,
    syndrome: Syndrome,
    block: LogicalBlock,
    direction: Direction = 'ltr',
) -> ChainState:
    """Syndrome-indexed Pauli word, the H layer back to the +/- basis, switches to |0>."""
    word = recovery_words(direction)[syndrome]
    return _finish(chain, block, word)


def run_cycle(
    block: LogicalBlock,
    amp0: complex,
    amp1: complex,
    errors: Union[Sequence[int], ErrorModel],
    seed: int = 0,
    trial: int = 0,
    direction: Direction = 'ltr',
    threshold: float = FAILURE_THRESHOLD,
) -> QecReport:
    """One full correction cycle; flips are data labels or a sampled ErrorModel."""
    rng = SeededStream(seed, (trial,))
    reference = encoded_reference(block, amp0, amp1)
    chain = encode(block, amp0, amp1)
    chain, flips = inject(chain, block, errors, rng)
    before = fidelity(chain.register, reference.register)
    syndrome, probs, chain = _extract(chain, block, rng, direction)
    case = decode(syndrome, direction)
    word = recovery_words(direction)[syndrome]
    _finish(chain, block, word)
    after = fidelity(chain.register, reference.register)
    return QecReport(
        num_data=block.num_data,
        block=block.index,
        direction=direction,
        amp0=(complex(amp0).real, complex(amp0).imag),
        amp1=(complex(amp1).real, complex(amp1).imag),
        injected=[str(block.data_qubit(o)) for o in flips],
        syndrome=f"{syndrome.first}{syndrome.second}",
        syndrome_probabilities=probs,
        decoded=block.describe(case),
        recovery=word.operations(block),
        fidelity_before=before,
        fidelity_after=after,
        logical_error=after < 1.0 - threshold,
        seed=seed,
        trial=trial,
    )


def analytic_error_rate(p: float) -> float:
    """Probability of two or more flips out of three: 3p^2 - 2p^3."""
    return 3 * p ** 2 - 2 * p ** 3


@functools.lru_cache(maxsize=None)
def pattern_failures(
    direction: Direction = 'ltr',
    theta: float = WITNESS_THETA,
    phi: float = WITNESS_PHI,
    threshold: float = FAILURE_THRESHOLD,
) -> Tuple[bool, ...]:
    """Failure flag of the full cycle for each of the 8 flip patterns (bit o = offset o)."""
    block = _witness_block()
    amp0, amp1 = witness_amplitudes(theta, phi)
    failures: List[bool] = []
    for mask in range(8):
        labels = [block.index + o for o in range(3) if mask >> o & 1]
        report = run_cycle(block, amp0, amp1, labels, direction=direction, threshold=threshold)
        if min(report.syndrome_probabilities) < 1.0 - DETERMINISTIC_TOL:
            raise InvariantViolation(f"flip pattern {labels} gives a random syndrome {report.syndrome_probabilities}")
        failures.append(report.logical_error)
    logger.debug(f"Failing flip patterns ({direction}): {[m for m in range(8) if failures[m]]}")
    return tuple(failures)


def _count_failures(model: ErrorModel, seed: int, trials: range, failures: Tuple[bool, ...]) -> int:
    count = 0
    for trial in trials:
        flips = model.sample(SeededStream(seed, (trial,)))
        mask = sum(1 << o for o in flips)
        count += failures[mask]
    return count


def logical_error_rate(
    p: float,
    trials: int,
    seed: int = 0,
    direction: Direction = 'ltr',
    concurrency: int = 0,
    theta: float = WITNESS_THETA,
    phi: float = WITNESS_PHI,
    threshold: float = FAILURE_THRESHOLD,
) -> ErrorRateEstimate:
    """Monte Carlo failure fraction of the correction cycle under ErrorModel(p).

    Trial t draws its flips from the stream (seed, t). The cycle is deterministic
    for a fixed flip pattern, so each of the 8 patterns is simulated once.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    model = ErrorModel(p)
    failures_by_pattern = pattern_failures(direction, theta, phi, threshold)

    if concurrency > 1 and trials > 1:
        chunk = math.ceil(trials / concurrency)
        ranges = [range(start, min(start + chunk, trials)) for start in range(0, trials, chunk)]
        with concurrent.futures.ThreadPoolExecutor(max_workers=concurrency) as executor:
            futures: Sequence[Future[int]] = [
                executor.submit(_count_failures, model, seed, r, failures_by_pattern) for r in ranges
            ]
            concurrent.futures.wait(futures)
            failures = sum(future.result() for future in futures)
    else:
        failures = _count_failures(model, seed, range(trials), failures_by_pattern)

    low, high = proportion_confint(failures, trials, alpha=0.05, method='wilson')
    estimate = ErrorRateEstimate(
        p=p,
        trials=trials,
        failures=failures,
        estimate=failures / trials,
        ci_low=float(low),
        ci_high=float(high),
        analytic=analytic_error_rate(p),
    )
    logger.info(
        f"p={p}: {failures}/{trials} failures, estimate {estimate.estimate:.6f} "
        f"[{estimate.ci_low:.6f}, {estimate.ci_high:.6f}], analytic {estimate.analytic:.6f}"
    )
    return estimate
