"""Exception hierarchy shared across the package."""

from __future__ import annotations


class YokaiError(Exception):
    """Base class for all package errors."""


class ConfigError(YokaiError):
    """Raised when a game configuration is internally inconsistent."""


class RuleViolation(YokaiError):
    """An action was rejected by the rules engine.

    ``reason`` is a stable machine-readable code; the message is free text.
    """

    reason = "ILLEGAL_ACTION"

    def __init__(self, message: str, *, reason: str | None = None):
        super().__init__(message)
        if reason is not None:
            self.reason = reason


class OutOfTurn(RuleViolation):
    reason = "OUT_OF_TURN"


class IllegalTarget(RuleViolation):
    reason = "ILLEGAL_TARGET"


class ContractError(YokaiError):
    """A query was made against a state that does not support it."""


class ProtocolError(YokaiError):
    """Malformed or out-of-contract traffic on a wire protocol."""


class ReplayError(YokaiError):
    """An episode record could not be reproduced step for step."""
