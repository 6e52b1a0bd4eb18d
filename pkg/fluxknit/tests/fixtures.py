"""Test fixtures shared by unit and end-to-end tests."""

import logging
from typing import Generator

import numpy as np
import pytest

from fluxknit import compiler, gates, qec
from fluxknit.statevec import SeededStream

logger = logging.getLogger(__name__)


def _clear_derived_tables() -> None:
    compiler.cns_dressing.cache_clear()
    qec.derived_decode_table.cache_clear()
    qec.recovery_words.cache_clear()
    qec.pattern_failures.cache_clear()


@pytest.fixture
def generator() -> np.random.Generator:
    """Seeded numpy generator for random states and unitaries."""
    return np.random.default_rng(20240611)


@pytest.fixture
def stream() -> SeededStream:
    """Seeded measurement stream."""
    return SeededStream(0)


@pytest.fixture
def corrupt_u0(monkeypatch: pytest.MonkeyPatch) -> Generator[gates.Gate, None, None]:
    """Replace the U0 constant with one whose |11> sign is wrong.

    The replacement is still unitary, so only the identities catch it.
    """
    good = gates.u0().matrix
    bad_matrix = good.copy()
    bad_matrix[3, 3] = -bad_matrix[3, 3]
    bad = gates.Gate(bad_matrix, 'U0')

    _clear_derived_tables()
    monkeypatch.setattr(gates, 'u0', lambda: bad)
    logger.info("U0 corrupted for this test")
    yield bad
    monkeypatch.undo()
    _clear_derived_tables()
