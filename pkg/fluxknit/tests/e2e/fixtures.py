"""Fixtures for end-to-end CLI tests."""

import logging
from pathlib import Path
from typing import Generator

import pytest

from fluxknit.config import SEED_ENV
from fluxknit.tests.e2e.test_helpers import CliContext

logger = logging.getLogger(__name__)


@pytest.fixture
def cli_ctx(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Generator[CliContext, None, None]:
    """Fresh working directory with no config file and no seed override.

    Commands reset the root logger, so its handlers are restored afterwards.
    """
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(SEED_ENV, raising=False)
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield CliContext(tmp_path)
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)
