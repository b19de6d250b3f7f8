"""Exception hierarchy shared by all cartframes modules.

Everything raised on purpose derives from CartframesError so callers (and the
CLI) can separate domain failures from genuine bugs.
"""

from __future__ import annotations


class CartframesError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CartframesError, ValueError):
    """An input violates a documented invariant or precondition."""


class UnknownIdentifierError(CartframesError, KeyError):
    """A lookup used an action/environment/world label that does not exist."""

    def __init__(self, kind: str, identifier: str):
        super().__init__(identifier)
        self.kind = kind
        self.identifier = identifier

    def __str__(self) -> str:
        return f"unknown {self.kind}: {self.identifier!r}"


class EnumerationCapError(CartframesError, ValueError):
    """The world set is too large to enumerate every subset.

    Use the membership predicates (ensures/prevents/...) instead of the
    family enumeration when this fires.
    """


class SelectionError(CartframesError, RuntimeError):
    """Sampling could not proceed (empty admissible set, no matching rule)."""


class GateConfigError(CartframesError, ValueError):
    """A gating pipeline is mis-configured (e.g. partial bound above complete)."""


class ScenarioError(CartframesError):
    """Base class for scenario-file diagnostics. Carries the offending path."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path

    def __str__(self) -> str:
        base = super().__str__()
        return f"{self.path}: {base}" if self.path else base


class ScenarioFileError(ScenarioError):
    """Scenario file missing, unreadable, or not parseable at all."""


class ScenarioVersionError(ScenarioError):
    """Scenario declares a format version this build does not understand."""


class ScenarioReferenceError(ScenarioError):
    """A named cross-reference inside a scenario does not resolve."""


class ScenarioInvariantError(ScenarioError):
    """A scenario field violates a structural invariant."""
