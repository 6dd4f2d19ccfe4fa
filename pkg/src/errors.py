"""
shiftbench/errors.py

Exception hierarchy shared by every shiftbench package.

Argument-domain failures also derive from ValueError so callers that only
know the standard library can still catch them.
"""


class ShiftbenchError(Exception):
    """Base class for all shiftbench failures."""


# ---------------------------------------------------------------------------
# shiftcore
# ---------------------------------------------------------------------------

class ZeroTotal(ShiftbenchError, ValueError):
    """Phase counts sum to zero and cannot be normalized."""


class InvalidAlpha(ShiftbenchError, ValueError):
    """Significance level outside the open interval (0, 1)."""


class InvalidDistribution(ShiftbenchError, ValueError):
    """Vector is not a valid 8-phase probability mass function."""


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

class Infeasible(ShiftbenchError, ValueError):
    """Requested KS perturbation cannot be realized from the given pmf."""


class ParseError(ShiftbenchError, ValueError):
    """Malformed row in a turn-count or scenario file."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MissingPhaseWarning(UserWarning):
    """A turn-count bucket lacked some phases; they were zero-filled."""


# ---------------------------------------------------------------------------
# simsignal
# ---------------------------------------------------------------------------

class InvalidAction(ShiftbenchError, ValueError):
    """Action outside the currently valid set (agent-side masking bug)."""


class SimulationInvariantError(ShiftbenchError):
    """Conservation, safety or timestamp ordering violated inside the simulator."""


# ---------------------------------------------------------------------------
# agent
# ---------------------------------------------------------------------------

class NonFiniteOutput(ShiftbenchError):
    """Q-network produced NaN or infinite values."""


class Divergence(ShiftbenchError):
    """Training loss became non-finite."""


class CheckpointError(ShiftbenchError):
    """Checkpoint file is unreadable or incompatible with the requested network."""


class InvalidPlan(ShiftbenchError, ValueError):
    """Fixed-time plan leaves a phase unserved or has a non-positive split."""


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

class NotArrived(ShiftbenchError, ValueError):
    """Vehicle has no recorded arrival."""


class ZeroGenerated(ShiftbenchError, ValueError):
    """Throughput requested for a scenario with no generated vehicles."""


class EmptyLog(ShiftbenchError, ValueError):
    """Aggregation requested over an empty event log."""


# ---------------------------------------------------------------------------
# expcli
# ---------------------------------------------------------------------------

class DegenerateFit(ShiftbenchError, ValueError):
    """Linear fit requested over points sharing a single x value."""


class ConfigError(ShiftbenchError):
    """Invalid configuration file, flag, or experiment specification."""
