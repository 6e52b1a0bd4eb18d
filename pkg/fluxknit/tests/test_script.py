"""Tests for the .fknit parser, printer and interpreter."""
import logging
import math
from pathlib import Path
from typing import List

import numpy as np
import pytest

from fluxknit import compiler, gates, qec
from fluxknit.compiler import EulerAngles, MeasureSwitch, SingleLayer, compile_fanout, program_semantics
from fluxknit.pretty import pretty_json
from fluxknit.script import (
    ControlledV, DumpOut, Script, ScriptError, SweepDirective, from_program, lower, parse_angle,
    parse_complex, parse_program, print_script, run, to_program,
)
from fluxknit.statevec import StateVector, fidelity

log = logging.getLogger(__name__)

CORPUS = Path(__file__).parent / 'corpus'
CORPUS_FILES = sorted(CORPUS.glob('*.fknit'))


def load(name: str) -> Script:
    return parse_program((CORPUS / name).read_text())


def dumped(dump: DumpOut, num_qubits: int) -> StateVector:
    amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
    for amplitude in dump.amplitudes:
        amps[amplitude.index] = complex(amplitude.re, amplitude.im)
    return StateVector(num_qubits, amps)


def test_corpus_is_large_enough() -> None:
    assert len(CORPUS_FILES) >= 20


def test_parse_minimal_program() -> None:
    script = parse_program("chain 2\nsweep ltr")
    assert script.num_data == 2 and script.chain.coupling_g is None
    assert script.directives == (SweepDirective('ltr'),)
    assert script.directives[0].line == 2


def test_undeclared_qubit_reports_line_and_column() -> None:
    with pytest.raises(ScriptError) as info:
        parse_program("chain 2\nsq d9 H")
    assert info.value.line == 2 and info.value.column == 4
    assert str(info.value) == "line 2, col 4: undeclared qubit d9"


@pytest.mark.parametrize("text,line,fragment", [
    ("sweep ltr", 1, "expected 'chain N'"),
    ("", 1, "missing 'chain N'"),
    ("# only a comment\n", 1, "missing 'chain N'"),
    ("chain 2\nfoo", 2, "unknown directive 'foo'"),
    ("chain 2\nsweep", 2, "'sweep' takes 1 argument(s), got 0"),
    ("chain 2\nsq d1 RX", 2, "gate RX needs an angle"),
    ("chain 2\nsq d1 H 0.5", 2, "takes no angle"),
    ("chain 2\nsq d1 RX pix", 2, "bad angle 'pix'"),
    ("chain 2\nsq d1 T", 2, "unknown gate 'T'"),
    ("chain 2\nsq q1 H", 2, "bad qubit 'q1'"),
    ("chain 2\nprep s1 (1,0) (0,0)", 2, "expected a data qubit dK"),
    ("chain 2\nprep d1 1 0", 2, "expected (re,im)"),
    ("chain 2\n\nchain 3", 3, "declared twice"),
    ("chain 1", 1, "at least 2 data qubits"),
    ("chain x", 1, "bad chain size 'x'"),
    ("chain 2 -1", 1, "must be positive"),
    ("chain 13", 1, "register cap"),
    ("chain 2\nswitch s2 on", 2, "undeclared qubit s2"),
    ("chain 2\nswitch d1 on", 2, "expected a switch sK"),
    ("chain 2\nswitch s1 maybe", 2, "unknown switch action 'maybe'"),
    ("chain 2\nsweep up", 2, "unknown direction 'up'"),
    ("chain 2\ncv d1 d1 0 0 0 0", 2, "must differ"),
    ("chain 2\ncv d1 d2 0 0 0", 2, "'cv' takes 6 argument(s), got 5"),
    ("chain 2\nmeasure d1 y", 2, "unknown basis 'y'"),
    ("chain 2\ndump now", 2, "'dump' takes 0 argument(s), got 1"),
])
def test_parse_errors(text: str, line: int, fragment: str) -> None:
    with pytest.raises(ScriptError) as info:
        parse_program(text)
    log.info(f"Diagnostic: {info.value}")
    assert info.value.line == line, f"expected line {line}, got {info.value}"
    assert fragment in info.value.message, f"'{fragment}' not in '{info.value.message}'"


def test_parse_angle() -> None:
    assert parse_angle('pi') == math.pi
    assert parse_angle('pi/2') == math.pi / 2
    assert parse_angle('-3*pi/4') == -3 * math.pi / 4
    assert parse_angle('0.5*pi') == 0.5 * math.pi
    assert parse_angle('-0.25') == -0.25
    for bad in ('pix', 'inf', 'two'):
        with pytest.raises(ValueError):
            parse_angle(bad)


def test_parse_complex() -> None:
    assert parse_complex('(0.6,0.8)') == complex(0.6, 0.8)
    assert parse_complex('( 0 , -1 )') == complex(0, -1)
    for bad in ('0.6', '(1,2,3)', '(nan,0)'):
        with pytest.raises(ValueError):
            parse_complex(bad)


def test_gate_names_are_case_insensitive() -> None:
    script = parse_program("chain 2\nsq D1 h\nsq d2 rz pi")
    assert print_script(script) == "chain 2\nsq d1 H\nsq d2 RZ 3.141592653589793\n"


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_corpus_round_trip(path: Path) -> None:
    """parse(print(parse(text))) == parse(text), and printing is a fixpoint."""
    script = parse_program(path.read_text())
    text = print_script(script)
    again = parse_program(text)
    assert again == script, f"{path.name} changed on reprint:\n{text}"
    assert print_script(again) == text


def test_run_empty_program() -> None:
    result = run(parse_program("chain 2\n"), dump=True)
    assert result.measurements == [] and result.dumps == []
    assert result.final is not None and abs(result.final.norm - 1) < 1e-12
    assert [a.index for a in result.final.amplitudes] == [0]
    assert abs(result.t_pi - 2.2214) < 1e-4
    assert result.wall_time is None
    assert run(parse_program("chain 2\n"), timing=True).wall_time is not None


def test_run_is_deterministic() -> None:
    script = load('bell_pair.fknit')
    first = pretty_json(run(script, seed=3, dump=True))
    second = pretty_json(run(script, seed=3, dump=True))
    assert first == second


def test_bell_pair_outcomes_agree() -> None:
    script = load('bell_pair.fknit')
    outcomes = set()
    for seed in range(20):
        result = run(script, seed=seed)
        d1, d2 = (m.outcome for m in result.measurements)
        assert d1 == d2, f"seed {seed}: d1={d1} d2={d2}"
        outcomes.add(d1)
    assert outcomes == {'0', '1'}


def test_ghz_fanout_outcomes_agree() -> None:
    script = load('ghz_four.fknit')
    for seed in range(10):
        first, last = run(script, seed=seed).measurements
        assert first.outcome == last.outcome


def test_coupling_sets_t_pi() -> None:
    result = run(load('coupling.fknit'), coupling_g=5.0)
    assert result.coupling_g == 3.14159
    assert abs(result.t_pi - math.pi / (3.14159 * math.sqrt(2))) < 1e-12
    assert abs(run(parse_program("chain 2"), coupling_g=math.pi).t_pi - 1 / math.sqrt(2)) < 1e-12


def test_syndrome_scripts_read_derived_syndromes() -> None:
    for name, direction, case in [('syndrome_d1.fknit', 'ltr', 0), ('syndrome_rtl.fknit', 'rtl', 2)]:
        result = run(load(name))
        first, second = result.measurements
        assert min(first.probability, second.probability) > 1 - 1e-10
        syndrome = qec.Syndrome(first.outcome, second.outcome)  # type: ignore[arg-type]
        assert qec.decode(syndrome, direction) == case, f"{name}: {syndrome}"  # type: ignore[arg-type]


def test_encoding_script_builds_code_state() -> None:
    """The hand-lowered encoding pass gives 0.6|+++> + 0.8i|--->."""
    result = run(load('encode_block.fknit'))
    reference = qec.encoded_reference(qec.LogicalBlock(1, 3), 0.6, 0.8j)
    assert fidelity(dumped(result.dumps[0], 5), reference.register) > 1 - 1e-12


def test_run_controlled_x() -> None:
    result = run(parse_program("chain 2\nsq d1 X\ncv d1 d2 pi/2 0 pi pi\nmeasure d2 z"))
    assert result.measurements[0].outcome == '1'
    assert abs(result.measurements[0].probability - 1) < 1e-12
    assert result.measurements[0].line == 4


def test_run_reports_runtime_errors_with_line() -> None:
    text = "chain 2\nsq d1 H\nswitch s1 plus\nsweep ltr\nswitch s1 zero\n"
    with pytest.raises(ScriptError) as info:
        run(parse_program(text))
    assert info.value.line == 5
    assert "entangled" in info.value.message


def test_to_program() -> None:
    program = to_program(parse_program("chain 3\nsq all-data H\nswitch s1 off\nmeasure s2 x"))
    layers = [i for i in program.instructions if isinstance(i, SingleLayer)]
    assert len(layers) == 3
    assert program.instructions[-1] == MeasureSwitch(2, 'x')
    with pytest.raises(ScriptError, match="prep"):
        to_program(parse_program("chain 2\nprep d1 (1,0) (0,0)"))
    with pytest.raises(ScriptError, match="measure"):
        to_program(parse_program("chain 2\nmeasure d1 z"))


def test_lower_replaces_cv_lines() -> None:
    script = parse_program("chain 3\ncv d1 d3 0.1 0.2 0.3 0.4")
    lowered = lower(script)
    assert not any(isinstance(d, ControlledV) for d in lowered.directives)
    assert parse_program(print_script(lowered)) == lowered
    v = EulerAngles(0.1, 0.2, 0.3, 0.4).matrix()
    expected = gates.Gate(compiler.controlled_v_matrix(1, 3, v, 3), 'CV')
    assert gates.phase_distance(program_semantics(to_program(lowered)), expected) < 1e-9


@pytest.mark.parametrize("prefix", ["", "switch s2 off\n", "switch s1 off\nswitch s2 off\n"])
def test_cv_restores_switch_biases(prefix: str) -> None:
    """An identity `cv` followed by a sweep acts like the sweep alone."""
    with_cv = parse_program(f"chain 3\n{prefix}cv d1 d2 0 0 0 0\nsweep ltr")
    without = parse_program(f"chain 3\n{prefix}sweep ltr")
    expected = program_semantics(to_program(without))
    assert gates.phase_distance(program_semantics(to_program(with_cv)), expected) < 1e-9
    assert gates.phase_distance(program_semantics(to_program(lower(with_cv))), expected) < 1e-9


def test_run_restores_switch_biases_after_cv() -> None:
    body = "prep d1 (0.6,0) (0,0.8)\nsq d2 H\nswitch s2 off\n{cv}sweep ltr\nswitch s2 on\nsweep rtl\ndump"
    with_cv = run(parse_program("chain 3\n" + body.format(cv="cv d2 d3 0 0 0 0\n")))
    without = run(parse_program("chain 3\n" + body.format(cv="")))
    assert fidelity(dumped(with_cv.dumps[0], 5), dumped(without.dumps[0], 5)) > 1 - 1e-12


def test_cv_then_sweep_corpus_matches_single_qubit_rotation() -> None:
    """d2 is |1>, so the cv is Ry(pi) on d4 and the sweep still crosses every block."""
    with_cv = run(load('cv_then_sweep.fknit'))
    rotated = run(parse_program("chain 4\nsq d2 X\nsq d4 RY pi\nsweep ltr\ndump"))
    assert fidelity(dumped(with_cv.dumps[0], 7), dumped(rotated.dumps[0], 7)) > 1 - 1e-12


def test_from_program_keeps_semantics() -> None:
    program = compile_fanout(4)
    text = print_script(from_program(program))
    log.info(f"Lowered fan-out:\n{text}")
    lines: List[str] = text.splitlines()
    assert lines[0] == 'chain 4' and 'sweep ltr' in lines
    rebuilt = program_semantics(to_program(parse_program(text)))
    assert gates.phase_distance(rebuilt, program_semantics(program)) < 1e-9
