"""Abstract base classes: SignalPolicy."""

from interfaces.signal_policy import SignalPolicy

__all__ = ["SignalPolicy"]
