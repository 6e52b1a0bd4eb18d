# Numerical tolerances shared by every module
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
# Loose bound for amplitudes handed to the state-vector constructor
STATE_TOL = 1e-8
GATE_TOL = 1e-12


class InvariantViolation(RuntimeError):
    """An internal invariant of the simulator or a derived protocol broke."""


def check_invariant(condition: bool, message: str) -> None:
    """Raise InvariantViolation with message unless condition holds."""
    if not condition:
        raise InvariantViolation(message)
