"""Helpers for driving the fluxknit CLI in-process."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from click.testing import CliRunner, Result

from fluxknit.cmd.fluxknit.main import cli

log = logging.getLogger(__name__)


@dataclass
class CliContext:
    """A scratch directory and a runner for CLI invocations."""
    root: Path
    runner: CliRunner = field(default_factory=CliRunner)

    def write(self, name: str, text: str) -> str:
        path = self.root / name
        path.write_text(text)
        return str(path)

    def invoke(self, args: List[str]) -> Result:
        log.info(f"fluxknit {' '.join(args)}")
        result = self.runner.invoke(cli, args)
        log.info(f"exit {result.exit_code}")
        if result.exception is not None and not isinstance(result.exception, SystemExit):
            log.error(f"Unexpected exception: {result.exception!r}")
        return result

    def invoke_json(self, args: List[str], name: str = 'out.json') -> Dict[str, Any]:
        """Invoke with -o and load the written JSON."""
        out = self.root / name
        result = self.invoke(args + ['-o', str(out)])
        assert result.exit_code == 0, f"fluxknit {args} exited {result.exit_code}: {result.output}"
        return json.loads(out.read_text())

    def invoke_text(self, args: List[str], name: str = 'out.txt') -> str:
        out = self.root / name
        result = self.invoke(args + ['-o', str(out)])
        assert result.exit_code == 0, f"fluxknit {args} exited {result.exit_code}: {result.output}"
        return out.read_text()
