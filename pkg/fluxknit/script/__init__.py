"""The .fknit program format: parser, printer and interpreter.

One directive per line, `#` starts a comment:

    chain N [g]
    prep dK (re,im) (re,im)
    sq <qubit|all-data|all-switch> <X|Y|Z|H|RX a|RY a|RZ a|PHASE a>
    switch sK <on|off|zero|one|plus>
    sweep <ltr|rtl>
    cv dC dT <delta> <alpha> <theta> <beta>
    measure <qubit> <z|x>
    dump

Angles are decimals or multiples of pi (`pi/2`, `-3*pi/4`).
"""

import logging
import math
import re
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .. import gates
from ..chain import ChainConfig, ChainState, new_chain, t_pi
from ..compiler import (
    EulerAngles, MeasureSwitch, PassProgram, PrepareSwitch, SetSwitch, SingleLayer, Sweep,
    compile_controlled_v, execute, zyz_decompose,
)
from ..gates import Gate
from ..statevec import SeededStream
from ..typing import Basis, Direction, QubitIndex
from ..util import InvariantViolation

logger = logging.getLogger(__name__)

SINGLE_GATES = ('X', 'Y', 'Z', 'H')
PARAM_GATES = ('RX', 'RY', 'RZ', 'PHASE')
SWITCH_ACTIONS = ('on', 'off', 'zero', 'one', 'plus')
GROUP_TARGETS = ('all-data', 'all-switch')

# A parenthesised complex pair is one token even with blanks inside
_TOKEN = re.compile(r'\([^)]*\)|[^\s(]+')
_PI_MULTIPLE = re.compile(r'^(?P<sign>[+-]?)(?:(?P<num>\d+(?:\.\d*)?)\*)?pi(?:/(?P<den>\d+(?:\.\d*)?))?$')

# Angles below this print as absent rotations when lowering programs to text
_ZERO_ANGLE = 1e-13


class ScriptError(ValueError):
    """A diagnostic tied to a position in a .fknit source."""

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, col {self.column}: {self.message}"


@dataclass(frozen=True)
class ChainDecl:
    num_data: int
    coupling_g: Optional[float] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Prep:
    qubit: QubitIndex
    amp0: complex
    amp1: complex
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SingleQubit:
    target: str
    gate: str
    param: Optional[float] = None
    line: int = field(default=0, compare=False)

    def to_gate(self) -> Gate:
        if self.gate in SINGLE_GATES:
            return gates.hadamard() if self.gate == 'H' else gates.pauli(self.gate.lower())  # type: ignore[arg-type]
        angle = self.param if self.param is not None else 0.0
        if self.gate == 'PHASE':
            return gates.phase(angle)
        return gates.rotation(self.gate[1].lower(), angle)  # type: ignore[arg-type]


@dataclass(frozen=True)
class SwitchDirective:
    index: int
    action: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SweepDirective:
    direction: Direction
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ControlledV:
    control: int
    target: int
    angles: EulerAngles
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Measure:
    qubit: QubitIndex
    basis: Basis
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Dump:
    line: int = field(default=0, compare=False)


Directive = Union[Prep, SingleQubit, SwitchDirective, SweepDirective, ControlledV, Measure, Dump]


@dataclass(frozen=True)
class Script:
    chain: ChainDecl
    directives: Tuple[Directive, ...] = ()

    @property
    def num_data(self) -> int:
        return self.chain.num_data


@dataclass(frozen=True)
class _Token:
    text: str
    column: int


def _tokens(line: str) -> List[_Token]:
    code = line.split('#', 1)[0]
    return [_Token(m.group(0), m.start() + 1) for m in _TOKEN.finditer(code)]


def parse_angle(text: str) -> float:
    """Decimal or pi multiple; raises ValueError otherwise."""
    match = _PI_MULTIPLE.match(text.strip().lower())
    if match:
        value = math.pi * float(match.group('num') or 1.0) / float(match.group('den') or 1.0)
        return -value if match.group('sign') == '-' else value
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"angle must be finite, got {text}")
    return value


def parse_complex(text: str) -> complex:
    """`(re,im)` decimal pair."""
    if not (text.startswith('(') and text.endswith(')')):
        raise ValueError(f"expected (re,im), got '{text}'")
    parts = [p.strip() for p in text[1:-1].split(',')]
    if len(parts) != 2:
        raise ValueError(f"expected (re,im), got '{text}'")
    re_part, im_part = float(parts[0]), float(parts[1])
    if not (math.isfinite(re_part) and math.isfinite(im_part)):
        raise ValueError(f"amplitude must be finite, got '{text}'")
    return complex(re_part, im_part)


class _LineParser:
    """Parses the tokens of one directive line."""

    def __init__(self, tokens: List[_Token], line: int, num_data: int) -> None:
        self.tokens = tokens
        self.line = line
        self.num_data = num_data

    def error(self, message: str, token: Optional[_Token] = None) -> ScriptError:
        column = token.column if token else (self.tokens[0].column if self.tokens else 1)
        return ScriptError(message, self.line, column)

    def arity(self, *allowed: int) -> None:
        count = len(self.tokens) - 1
        if count not in allowed:
            expected = ' or '.join(str(a) for a in allowed)
            raise self.error(f"'{self.tokens[0].text}' takes {expected} argument(s), got {count}")

    def qubit(self, token: _Token, role: Optional[str] = None) -> QubitIndex:
        try:
            qubit = QubitIndex.parse(token.text)
        except ValueError:
            raise self.error(f"bad qubit '{token.text}'", token)
        if role is not None and qubit.role != role:
            kind = 'data qubit dK' if role == 'data' else 'switch sK'
            raise self.error(f"expected a {kind}, got '{token.text}'", token)
        limit = self.num_data if qubit.role == 'data' else self.num_data - 1
        if not 1 <= qubit.label <= limit:
            raise self.error(f"undeclared qubit {qubit}", token)
        return qubit

    def angle(self, token: _Token) -> float:
        try:
            return parse_angle(token.text)
        except ValueError:
            raise self.error(f"bad angle '{token.text}'", token)

    def amplitude(self, token: _Token) -> complex:
        try:
            return parse_complex(token.text)
        except ValueError as e:
            raise self.error(str(e), token)

    def choice(self, token: _Token, options: Sequence[str], what: str, fold: bool = True) -> str:
        text = token.text.lower() if fold else token.text.upper()
        if text not in options:
            raise self.error(f"unknown {what} '{token.text}' (expected {'|'.join(options)})", token)
        return text

    def directive(self) -> Directive:
        name = self.tokens[0].text.lower()
        args = self.tokens[1:]
        if name == 'prep':
            self.arity(3)
            return Prep(self.qubit(args[0], 'data'), self.amplitude(args[1]), self.amplitude(args[2]), self.line)
        if name == 'sq':
            self.arity(2, 3)
            target = args[0].text.lower()
            if target not in GROUP_TARGETS:
                target = str(self.qubit(args[0]))
            gate = self.choice(args[1], SINGLE_GATES + PARAM_GATES, 'gate', fold=False)
            if gate in PARAM_GATES:
                if len(args) != 3:
                    raise self.error(f"gate {gate} needs an angle", args[1])
                return SingleQubit(target, gate, self.angle(args[2]), self.line)
            if len(args) != 2:
                raise self.error(f"gate {gate} takes no angle", args[2])
            return SingleQubit(target, gate, None, self.line)
        if name == 'switch':
            self.arity(2)
            qubit = self.qubit(args[0], 'switch')
            return SwitchDirective(qubit.label, self.choice(args[1], SWITCH_ACTIONS, 'switch action'), self.line)
        if name == 'sweep':
            self.arity(1)
            direction = self.choice(args[0], ('ltr', 'rtl'), 'direction')
            return SweepDirective('ltr' if direction == 'ltr' else 'rtl', self.line)
        if name == 'cv':
            self.arity(6)
            control = self.qubit(args[0], 'data')
            target = self.qubit(args[1], 'data')
            if control == target:
                raise self.error("control and target must differ", args[1])
            delta, alpha, theta, beta = (self.angle(t) for t in args[2:])
            return ControlledV(control.label, target.label, EulerAngles(delta, alpha, theta, beta), self.line)
        if name == 'measure':
            self.arity(2)
            basis = self.choice(args[1], ('z', 'x'), 'basis')
            return Measure(self.qubit(args[0]), 'z' if basis == 'z' else 'x', self.line)
        if name == 'dump':
            self.arity(0)
            return Dump(self.line)
        if name == 'chain':
            raise self.error("chain is declared twice")
        raise self.error(f"unknown directive '{self.tokens[0].text}'")


def _chain_decl(tokens: List[_Token], line: int) -> ChainDecl:
    if len(tokens) not in (2, 3):
        raise ScriptError(f"'chain' takes 1 or 2 argument(s), got {len(tokens) - 1}", line, tokens[0].column)
    try:
        num_data = int(tokens[1].text)
    except ValueError:
        raise ScriptError(f"bad chain size '{tokens[1].text}'", line, tokens[1].column)
    if num_data < 2:
        raise ScriptError(f"a chain needs at least 2 data qubits, got {num_data}", line, tokens[1].column)
    try:
        ChainConfig(num_data)
    except ValueError as e:
        raise ScriptError(str(e), line, tokens[1].column)
    coupling: Optional[float] = None
    if len(tokens) == 3:
        try:
            coupling = float(tokens[2].text)
        except ValueError:
            raise ScriptError(f"bad coupling '{tokens[2].text}'", line, tokens[2].column)
        if not coupling > 0 or not math.isfinite(coupling):
            raise ScriptError(f"coupling g must be positive, got {tokens[2].text}", line, tokens[2].column)
    return ChainDecl(num_data, coupling, line)


def parse_program(text: str) -> Script:
    """Parse .fknit source; raises ScriptError with the offending line and column."""
    chain: Optional[ChainDecl] = None
    directives: List[Directive] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokens(raw)
        if not tokens:
            continue
        if chain is None:
            if tokens[0].text.lower() != 'chain':
                raise ScriptError(f"expected 'chain N' before '{tokens[0].text}'", number, tokens[0].column)
            chain = _chain_decl(tokens, number)
            continue
        directives.append(_LineParser(tokens, number, chain.num_data).directive())
    if chain is None:
        raise ScriptError("missing 'chain N' declaration", max(1, len(text.splitlines())))
    logger.debug(f"Parsed script: chain {chain.num_data}, {len(directives)} directives")
    return Script(chain, tuple(directives))


def _number(value: float) -> str:
    return repr(float(value))


def _complex_text(value: complex) -> str:
    return f"({_number(value.real)},{_number(value.imag)})"


def format_directive(directive: Directive) -> str:
    if isinstance(directive, Prep):
        return f"prep {directive.qubit} {_complex_text(directive.amp0)} {_complex_text(directive.amp1)}"
    if isinstance(directive, SingleQubit):
        angle = f" {_number(directive.param)}" if directive.param is not None else ''
        return f"sq {directive.target} {directive.gate}{angle}"
    if isinstance(directive, SwitchDirective):
        return f"switch s{directive.index} {directive.action}"
    if isinstance(directive, SweepDirective):
        return f"sweep {directive.direction}"
    if isinstance(directive, ControlledV):
        angles = ' '.join(_number(a) for a in directive.angles.as_tuple())
        return f"cv d{directive.control} d{directive.target} {angles}"
    if isinstance(directive, Measure):
        return f"measure {directive.qubit} {directive.basis}"
    return "dump"


def print_script(script: Script) -> str:
    """Canonical text; parse(print_script(s)) == s."""
    head = f"chain {script.chain.num_data}"
    if script.chain.coupling_g is not None:
        head += f" {_number(script.chain.coupling_g)}"
    return '\n'.join([head] + [format_directive(d) for d in script.directives]) + '\n'


# Program <-> script conversion

def _layer_directives(qubit: QubitIndex, gate: Gate) -> List[Directive]:
    for name in SINGLE_GATES:
        named = SingleQubit(str(qubit), name).to_gate()
        if gates.equal_up_to_global_phase(gate, named, 1e-10):
            return [SingleQubit(str(qubit), name)]
    angles = zyz_decompose(gate)
    out: List[Directive] = []
    for axis, angle in (('RZ', angles.beta), ('RY', angles.theta), ('RZ', angles.alpha)):
        if abs(angle) > _ZERO_ANGLE:
            out.append(SingleQubit(str(qubit), axis, angle))
    return out


def from_program(program: PassProgram, coupling_g: Optional[float] = None) -> Script:
    """Lower a pass program to script directives; layer gates keep their action up to phase."""
    directives: List[Directive] = []
    for instruction in program.instructions:
        if isinstance(instruction, SingleLayer):
            for qubit, gate in instruction.gates:
                directives.extend(_layer_directives(qubit, gate))
        elif isinstance(instruction, Sweep):
            directives.append(SweepDirective(instruction.direction))
        elif isinstance(instruction, SetSwitch):
            directives.append(SwitchDirective(instruction.index, 'on' if instruction.enabled else 'off'))
        elif isinstance(instruction, PrepareSwitch):
            directives.append(SwitchDirective(instruction.index, instruction.state))
        else:
            directives.append(Measure(QubitIndex.switch(instruction.index), instruction.basis))
    return Script(ChainDecl(program.num_data, coupling_g), tuple(directives))


def _expand_target(target: str, num_data: int) -> List[QubitIndex]:
    if target == 'all-data':
        return [QubitIndex.data(k) for k in range(1, num_data + 1)]
    if target == 'all-switch':
        return [QubitIndex.switch(k) for k in range(1, num_data)]
    return [QubitIndex.parse(target)]


def cv_program(directive: ControlledV, num_data: int, restore: Optional[Sequence[bool]] = None) -> PassProgram:
    """Compiled `cv`; with `restore`, switch biases are set back to those flags afterwards."""
    program = compile_controlled_v(directive.control, directive.target, directive.angles.matrix(), num_data)
    if restore is None:
        return program
    flags = list(restore)
    for instruction in program.instructions:
        if isinstance(instruction, SetSwitch):
            flags[instruction.index - 1] = instruction.enabled
    return program.then(*(
        SetSwitch(index, wanted)
        for index, (wanted, current) in enumerate(zip(restore, flags), start=1)
        if wanted != current
    ))


def to_program(script: Script) -> PassProgram:
    """Pass program of a script; `cv` lines are compiled in place.

    prep, dump and data-qubit measurements have no program form.
    """
    n = script.num_data
    program = PassProgram(n)
    enabled = [True] * (n - 1)
    for directive in script.directives:
        if isinstance(directive, SingleQubit):
            gate = directive.to_gate()
            for qubit in _expand_target(directive.target, n):
                program = program.then(SingleLayer.of({qubit: gate}))
        elif isinstance(directive, SwitchDirective):
            if directive.action in ('on', 'off'):
                enabled[directive.index - 1] = directive.action == 'on'
                program = program.then(SetSwitch(directive.index, enabled[directive.index - 1]))
            else:
                state = 'zero' if directive.action == 'zero' else 'one' if directive.action == 'one' else 'plus'
                program = program.then(PrepareSwitch(directive.index, state))
        elif isinstance(directive, SweepDirective):
            program = program.then(Sweep(directive.direction))
        elif isinstance(directive, ControlledV):
            program = program.then(*cv_program(directive, n, enabled).instructions)
        elif isinstance(directive, Measure) and directive.qubit.role == 'switch':
            program = program.then(MeasureSwitch(directive.qubit.label, directive.basis))
        else:
            raise ScriptError(f"'{format_directive(directive).split()[0]}' has no pass-program form", directive.line)
    return program


def lower(script: Script) -> Script:
    """Replace every `cv` line by the primitive directives it compiles to."""
    directives: List[Directive] = []
    enabled = [True] * (script.num_data - 1)
    for directive in script.directives:
        if isinstance(directive, ControlledV):
            directives.extend(from_program(cv_program(directive, script.num_data, enabled)).directives)
            continue
        if isinstance(directive, SwitchDirective) and directive.action in ('on', 'off'):
            enabled[directive.index - 1] = directive.action == 'on'
        directives.append(directive)
    return Script(script.chain, tuple(directives))


# Interpreter

class MeasurementOut(BaseModel):
    line: int
    qubit: str
    basis: Basis
    outcome: str
    probability: float


class AmplitudeOut(BaseModel):
    index: int
    bits: str
    re: float
    im: float


class DumpOut(BaseModel):
    line: int
    norm: float
    amplitudes: List[AmplitudeOut] = Field(default_factory=list)


class RunResult(BaseModel):
    format: int = 1
    num_data: int
    coupling_g: float
    t_pi: float
    seed: int
    measurements: List[MeasurementOut] = Field(default_factory=list)
    dumps: List[DumpOut] = Field(default_factory=list)
    final: Optional[DumpOut] = None
    wall_time: Optional[float] = None


def dump_state(chain: ChainState, line: int) -> DumpOut:
    """Non-zero amplitudes; `bits` lists the register MSB first (position 0 last)."""
    width = chain.config.num_qubits
    amps = chain.register.amps
    out = [
        AmplitudeOut(index=i, bits=format(i, f'0{width}b'), re=float(a.real), im=float(a.imag))
        for i, a in enumerate(amps) if a != 0
    ]
    return DumpOut(line=line, norm=float(np.real(np.vdot(amps, amps))), amplitudes=out)


def _execute_directive(chain: ChainState, directive: Directive, rng: SeededStream, result: RunResult) -> None:
    if isinstance(directive, Prep):
        chain.prepare_qubit(directive.qubit, [directive.amp0, directive.amp1])
    elif isinstance(directive, SingleQubit):
        gate = directive.to_gate()
        chain.apply_single_layer({q: gate for q in _expand_target(directive.target, chain.num_data)})
    elif isinstance(directive, SwitchDirective):
        if directive.action in ('on', 'off'):
            chain.set_switch(directive.index, directive.action == 'on')
        else:
            chain.prepare_switch(directive.index, 'zero' if directive.action == 'zero' else 'one' if directive.action == 'one' else 'plus')
    elif isinstance(directive, SweepDirective):
        chain.fluxon_sweep(directive.direction)
    elif isinstance(directive, ControlledV):
        execute(cv_program(directive, chain.num_data, list(chain.config.switch_enabled)), chain)
    elif isinstance(directive, Measure):
        outcome, prob, _ = chain.measure(directive.qubit, directive.basis, rng)
        result.measurements.append(MeasurementOut(
            line=directive.line, qubit=str(directive.qubit), basis=directive.basis,
            outcome=outcome, probability=prob,
        ))
    else:
        result.dumps.append(dump_state(chain, directive.line))


def run(
    script: Script,
    seed: int = 0,
    dump: bool = False,
    timing: bool = False,
    coupling_g: float = 1.0,
    hbar: float = 1.0,
) -> RunResult:
    """Interpret a script on a fresh all-|0> chain with one seeded stream.

    A coupling declared on the chain line overrides coupling_g.
    """
    started = time.perf_counter()
    g = script.chain.coupling_g if script.chain.coupling_g is not None else coupling_g
    config = ChainConfig(script.num_data, coupling_g=g, hbar=hbar)
    chain = new_chain(config)
    result = RunResult(num_data=script.num_data, coupling_g=g, t_pi=t_pi(config), seed=seed)
    logger.info(f"Running chain of {script.num_data} data qubits, t_pi={result.t_pi:.6f}, seed={seed}")
    rng = SeededStream(seed)

    for directive in script.directives:
        line = directive.line
        try:
            _execute_directive(chain, directive, rng, result)
        except ScriptError:
            raise
        except InvariantViolation as e:
            raise InvariantViolation(f"line {line}: {e}") from e
        except ValueError as e:
            raise ScriptError(str(e), line) from e

    if dump:
        result.final = dump_state(chain, 0)
    elapsed = time.perf_counter() - started
    logger.info(f"Run finished in {elapsed:.3f}s with {len(result.measurements)} measurements")
    if timing:
        result.wall_time = elapsed
    return result
