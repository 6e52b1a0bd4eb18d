"""CLI entry point."""

import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import click
from click import Context

from ... import compiler, gates, qec
from ...config import Config
from ...config.config_parser import parse_config
from ...pretty import csv_table, header, pretty_json, text_table
from ...script import (
    ControlledV, Script, ScriptError, cv_program, lower, parse_angle, parse_complex, parse_program,
    print_script, run as run_script, to_program,
)
from ...typing import Direction, QubitIndex
from ...util import InvariantViolation

# Get module logger
logger = logging.getLogger(__name__)

EXIT_DIAGNOSTIC = 1
EXIT_INVARIANT = 2

SWEEP_COLUMNS = ['p', 'trials', 'failures', 'estimate', 'ci_low', 'ci_high', 'analytic']


class AliasedGroup(click.Group):
    """Command group with support for aliases."""

    def __init__(
        self,
        name: Optional[str] = None,
        commands: Optional[Dict[str, click.Command]] = None,
        **attrs: Any,
    ) -> None:
        """Initialize with aliases map."""
        super().__init__(name, commands, **attrs)
        self.aliases: Dict[str, str] = {}

    def add_alias(self, alias: str, command: str) -> None:
        """Add an alias for a command."""
        self.aliases[alias] = command

    def get_command(self, ctx: Context, cmd_name: str) -> Optional[click.Command]:
        """Get a command by name, supporting aliases."""
        # Check if cmd_name is a registered alias
        if cmd_name in self.aliases:
            cmd_name = self.aliases[cmd_name]
        return super().get_command(ctx, cmd_name)


@click.group(cls=AliasedGroup)
@click.pass_context
def cli(ctx: Context) -> None:
    """fluxknit - simulate and compile fluxon-controlled zigzag qubit chains."""
    ctx.obj = {}


@contextmanager
def exit_codes() -> Iterator[None]:
    """Map failures to exit codes: 1 for diagnostics, 2 for broken invariants."""
    try:
        yield
    except InvariantViolation as e:
        logger.error(f"Invariant violation: {e}")
        click.echo(f"error: invariant violation: {e}", err=True)
        sys.exit(EXIT_INVARIANT)
    except ValueError as e:
        logger.error(f"{e}")
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_DIAGNOSTIC)


def load_config(directory: Optional[str] = None) -> Config:
    """Read .fluxknit.yaml from directory (default: working directory)."""
    if directory:
        os.chdir(directory)
    return Config(parse_config())


def emit(text: str, output: Optional[str]) -> None:
    """Write text to a file, or stdout when no file is given."""
    if not text.endswith("\n"):
        text += "\n"
    if output:
        Path(output).write_text(text)
        logger.info(f"Wrote {output}")
    else:
        click.echo(text, nl=False)


def read_script(path: str) -> Script:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ValueError(f"cannot read {path}: {e}")
    try:
        return parse_program(text)
    except ScriptError as e:
        raise ScriptError(f"{path}: {e.message}", e.line, e.column)


def parse_data_qubit(text: str, option: str) -> int:
    try:
        qubit = QubitIndex.parse(text)
    except ValueError:
        raise ValueError(f"{option} expects a data qubit dK, got '{text}'")
    if qubit.role != 'data':
        raise ValueError(f"{option} expects a data qubit dK, got '{text}'")
    return qubit.label


def parse_unitary_angles(text: str) -> compiler.EulerAngles:
    parts = text.replace(',', ' ').split()
    if len(parts) != 4:
        raise ValueError(f"--unitary takes 4 angles 'delta alpha theta beta', got '{text}'")
    try:
        delta, alpha, theta, beta = (parse_angle(p) for p in parts)
    except ValueError:
        raise ValueError(f"bad angle in --unitary '{text}'")
    return compiler.EulerAngles(delta, alpha, theta, beta)


def parse_probabilities(text: str) -> List[float]:
    values: List[float] = []
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        try:
            p = float(part)
        except ValueError:
            raise ValueError(f"bad probability '{part}'")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} is outside [0, 1]")
        values.append(p)
    if not values:
        raise ValueError("--p needs at least one probability")
    return values


def check_controlled_v(directive: ControlledV, num_data: int) -> float:
    """Phase distance between a compiled cv line and the dense controlled-V."""
    v = directive.angles.matrix()
    semantics = compiler.program_semantics(cv_program(directive, num_data))
    expected = gates.Gate(compiler.controlled_v_matrix(directive.control, directive.target, v, num_data), 'CV')
    return gates.phase_distance(semantics, expected)


def verbose_option(f: Any) -> Any:
    return click.option(
        "-v",
        "--verbose",
        count=True,
        help="Increase verbosity (can be used multiple times for more verbosity)",
    )(f)


def directory_option(f: Any) -> Any:
    return click.option(
        "-C",
        "--directory",
        type=click.Path(exists=True, file_okay=False, dir_okay=True),
        help="Run as if fluxknit was started in DIRECTORY instead of the current working directory",
    )(f)


def output_option(f: Any) -> Any:
    return click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write the result to a file instead of stdout")(f)


@cli.command(name="run", help="Run a .fknit program and print the result as JSON")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, help="Random seed (default: $FLUXKNIT_SEED, then config, then 0)")
@click.option("--dump", is_flag=True, help="Include the final amplitudes")
@click.option("--timing", is_flag=True, help="Include wall time (output is then not reproducible)")
@output_option
@directory_option
@verbose_option
def run(
    file: str,
    seed: Optional[int],
    dump: bool,
    timing: bool,
    output: Optional[str],
    directory: Optional[str],
    verbose: int,
) -> None:
    """Run command."""
    from ... import setup_logging

    setup_logging(verbose)
    path = os.path.abspath(file)
    out = os.path.abspath(output) if output else None

    with exit_codes():
        config = load_config(directory)
        script = read_script(path)
        result = run_script(
            script,
            seed=config.resolve_seed(seed),
            dump=dump,
            timing=timing,
            coupling_g=config.chain.coupling_g,
            hbar=config.chain.hbar,
        )
        emit(pretty_json(result), out)


@cli.command(name="compile", help="Lower cv lines (and an optional controlled-V) to primitive directives")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--control", help="Control data qubit dC of an extra controlled-V")
@click.option("--target", help="Target data qubit dT of an extra controlled-V")
@click.option("--unitary", help="Euler angles 'delta alpha theta beta' of V")
@click.option("--check", is_flag=True, help="Verify every controlled-V against its dense matrix")
@output_option
@directory_option
@verbose_option
def compile_(
    file: str,
    control: Optional[str],
    target: Optional[str],
    unitary: Optional[str],
    check: bool,
    output: Optional[str],
    directory: Optional[str],
    verbose: int,
) -> None:
    """Compile command."""
    from ... import setup_logging

    setup_logging(verbose)
    path = os.path.abspath(file)
    out = os.path.abspath(output) if output else None

    with exit_codes():
        load_config(directory)
        script = read_script(path)
        extra = [control, target, unitary]
        if any(v is not None for v in extra):
            if control is None or target is None or unitary is None:
                raise ValueError("--control, --target and --unitary go together")
            c = parse_data_qubit(control, '--control')
            t = parse_data_qubit(target, '--target')
            for label in (c, t):
                if label > script.num_data:
                    raise ValueError(f"d{label} is not on a chain with {script.num_data} data qubits")
            if c == t:
                raise ValueError("control and target must differ")
            directive = ControlledV(c, t, parse_unitary_angles(unitary))
            script = Script(script.chain, script.directives + (directive,))

        if check:
            for directive in script.directives:
                if not isinstance(directive, ControlledV):
                    continue
                residual = check_controlled_v(directive, script.num_data)
                logger.info(f"cv d{directive.control} d{directive.target}: residual {residual:.2e}")
                if residual > 1e-8:
                    raise InvariantViolation(
                        f"compiled cv d{directive.control} d{directive.target} misses the dense controlled-V by {residual:.3e}"
                    )

        lowered = lower(script)
        text = print_script(lowered)
        if check:
            reparsed = parse_program(text)
            if reparsed != lowered:
                raise InvariantViolation("lowered program does not reparse to itself")
        emit(text, out)


@cli.command(name="qec-sweep", help="Monte Carlo logical error rate of the phase-flip code")
@click.option("--p", "p_values", required=True, help="Comma-separated flip probabilities")
@click.option("--trials", type=int, default=100000, show_default=True, help="Trials per probability")
@click.option("--seed", type=int, help="Random seed (default: $FLUXKNIT_SEED, then config, then 0)")
@click.option("--out", "fmt", type=click.Choice(['csv', 'json']), default='csv', show_default=True, help="Output format")
@click.option("--direction", type=click.Choice(['ltr', 'rtl']), help="Detection sweep direction (default from config)")
@click.option("--jobs", type=int, help="Worker threads (default: tool.fluxknit.concurrency)")
@output_option
@directory_option
@verbose_option
def qec_sweep(
    p_values: str,
    trials: int,
    seed: Optional[int],
    fmt: str,
    direction: Optional[Direction],
    jobs: Optional[int],
    output: Optional[str],
    directory: Optional[str],
    verbose: int,
) -> None:
    """QEC sweep command."""
    from ... import setup_logging

    setup_logging(verbose)
    out = os.path.abspath(output) if output else None

    with exit_codes():
        config = load_config(directory)
        probabilities = parse_probabilities(p_values)
        if trials < 1:
            raise ValueError(f"--trials must be at least 1, got {trials}")
        resolved_seed = config.resolve_seed(seed)
        sweep_direction: Direction = direction or config.qec.direction
        concurrency = jobs if jobs is not None else config.tool.concurrency
        theta, phi = witness_angles(config)

        for row in qec.decode_table_report(sweep_direction):
            logger.info(f"decode {row.syndrome}: derived {row.derived}, published {row.published}")

        rows = [
            qec.logical_error_rate(
                p, trials, resolved_seed,
                direction=sweep_direction,
                concurrency=concurrency,
                theta=theta,
                phi=phi,
                threshold=config.qec.failure_threshold,
            )
            for p in probabilities
        ]
        if fmt == 'csv':
            emit(csv_table(rows, SWEEP_COLUMNS), out)
        else:
            emit(pretty_json({
                'format': 1,
                'seed': resolved_seed,
                'trials': trials,
                'direction': sweep_direction,
                'rows': [row.model_dump(mode='json') for row in rows],
            }), out)


def witness_angles(config: Config) -> Tuple[float, float]:
    theta = config.qec.witness_theta if config.qec.witness_theta is not None else qec.WITNESS_THETA
    phi = config.qec.witness_phi if config.qec.witness_phi is not None else qec.WITNESS_PHI
    return theta, phi


@cli.command(name="qec-cycle", help="Run one phase-flip correction cycle and print the report as JSON")
@click.option("--amp0", default="(1,0)", show_default=True, help="Logical |0> amplitude as (re,im)")
@click.option("--amp1", default="(0,0)", show_default=True, help="Logical |1> amplitude as (re,im)")
@click.option("--flip", "flips", multiple=True, help="Data qubit to phase-flip (repeatable)")
@click.option("--p", "p", type=float, help="Sample flips with this probability instead of --flip")
@click.option("--block", type=int, help="Logical block index i (default from config)")
@click.option("--chain", "num_data", type=int, help="Chain size N (default: block + 2)")
@click.option("--seed", type=int, help="Random seed (default: $FLUXKNIT_SEED, then config, then 0)")
@click.option("--trial", type=int, default=0, show_default=True, help="Trial index within the seed")
@click.option("--direction", type=click.Choice(['ltr', 'rtl']), help="Detection sweep direction (default from config)")
@output_option
@directory_option
@verbose_option
def qec_cycle(
    amp0: str,
    amp1: str,
    flips: List[str],
    p: Optional[float],
    block: Optional[int],
    num_data: Optional[int],
    seed: Optional[int],
    trial: int,
    direction: Optional[Direction],
    output: Optional[str],
    directory: Optional[str],
    verbose: int,
) -> None:
    """QEC cycle command."""
    from ... import setup_logging

    setup_logging(verbose)
    out = os.path.abspath(output) if output else None

    with exit_codes():
        config = load_config(directory)
        if flips and p is not None:
            raise ValueError("--flip and --p are exclusive")
        index = block if block is not None else config.qec.block
        logical = qec.LogicalBlock(index, num_data or index + 2)
        a0, a1 = parse_complex(amp0), parse_complex(amp1)
        errors = qec.ErrorModel(p) if p is not None else [parse_data_qubit(f, '--flip') for f in flips]
        report = qec.run_cycle(
            logical, a0, a1, errors,
            seed=config.resolve_seed(seed),
            trial=trial,
            direction=direction or config.qec.direction,
            threshold=config.qec.failure_threshold,
        )
        emit(pretty_json(report), out)


@cli.command(name="verify", help="Check gate identities, compiler invariants and the correction cycle")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON")
@click.option("--timing", is_flag=True, help="Include per-check wall time")
@output_option
@verbose_option
def verify(as_json: bool, timing: bool, output: Optional[str], verbose: int) -> None:
    """Verify command."""
    from ... import setup_logging
    from ...verify import verify_suite

    setup_logging(verbose)
    with exit_codes():
        report = verify_suite(timing=timing)
        if as_json:
            emit(pretty_json(report), output)
        else:
            lines = [header("fluxknit verify", 72)]
            for check in report.checks:
                lines.append(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.detail}")
            lines.append("")
            lines.append(text_table(
                [[r.direction, r.syndrome, r.derived, r.published, 'yes' if r.agrees else 'NO'] for r in report.decode_table],
                ['dir', 'syndrome', 'simulated', 'published', 'agree'],
            ))
            lines.append("")
            lines.extend(f"note: {n}" for n in report.notes)
            emit("\n".join(lines), output)
        if not report.passed:
            failed = [c.name for c in report.checks if not c.passed]
            raise InvariantViolation(f"verify failed: {', '.join(failed)}")


@cli.command(name="semantics", help="Print the data-qubit unitary of a measurement-free program as JSON")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@output_option
@verbose_option
def semantics(file: str, output: Optional[str], verbose: int) -> None:
    """Semantics command."""
    from ... import setup_logging

    setup_logging(verbose)
    with exit_codes():
        script = read_script(file)
        matrix = compiler.program_semantics(to_program(script)).matrix
        emit(pretty_json({
            'format': 1,
            'num_data': script.num_data,
            'real': matrix.real.tolist(),
            'imag': matrix.imag.tolist(),
        }), output)


def main() -> None:
    """Main entry point."""
    # Add command aliases
    cli.add_alias("sweep", "qec-sweep")
    cli.add_alias("cycle", "qec-cycle")
    cli(obj={})


if __name__ == "__main__":
    main()
