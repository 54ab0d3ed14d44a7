# src/parity_teleport/config.py
"""
Simulator Configuration

TOLERANCES:
Every invariant check in the package compares against one of these.
All operations are compositions of exact unitaries at double precision,
so a single global tolerance is enough; functions accept an `atol`
override where a caller needs something looser.

- ATOL: state norms, Hermiticity, unitarity, projector algebra, probabilities
- FIDELITY: teleported-qubit fidelity (accumulates a few more roundings)
- EIGENVALUE_FLOOR: most negative eigenvalue tolerated in a density matrix
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv(Path(__file__).resolve().parents[2] / ".env")


class Tolerances:
    ATOL = 1e-12
    FIDELITY = 1e-10
    EIGENVALUE_FLOOR = -1e-10

    @classmethod
    def validate(cls):
        """Ensure tolerances are ordered and positive"""
        if not (0.0 < cls.ATOL <= cls.FIDELITY < 1e-3):
            raise AssertionError(
                f"Tolerances must satisfy 0 < ATOL <= FIDELITY < 1e-3, "
                f"got ATOL={cls.ATOL}, FIDELITY={cls.FIDELITY}"
            )
        if cls.EIGENVALUE_FLOOR >= 0.0:
            raise AssertionError(f"EIGENVALUE_FLOOR must be negative, got {cls.EIGENVALUE_FLOOR}")
        return True


# Validate on import
Tolerances.validate()


class Defaults:
    WINDOW_K = 2
    # largest window half-width the dense operators are built for
    MAX_WINDOW_K = 64
    PUMP_CHARGE = 1
    # Monte Carlo frequencies must land within SIGMAS standard errors
    SIGMAS = 4.0
    REPORT_VERSION = "1"
    # Haar inputs drawn for an l != 1 negative control without explicit inputs
    CONTROL_INPUTS = 500
    # an l != 1 control at or above this exact mean fidelity means the harness is broken
    CONTROL_CEILING = 0.9


LOG_LEVEL_ENV = "PARITY_TELEPORT_LOG_LEVEL"


def log_level() -> int:
    """Log level from the environment, INFO when unset or unrecognized."""
    name = os.getenv(LOG_LEVEL_ENV, "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO
