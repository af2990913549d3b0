"""Exception hierarchy shared across the runtime.

Every error that crosses a module boundary lives here so callers can
catch one family (`OpenGoError`) or a precise subtype without importing
the module that raised it.
"""

from __future__ import annotations


class OpenGoError(Exception):
    """Base class for all runtime errors."""


# --- skill documents and the import pipeline ---------------------------------


class SchemaError(OpenGoError):
    """A skill document is structurally invalid (missing/ill-typed field)."""


class DuplicateParameter(SchemaError):
    """Two parameters in one document share a name."""


class UnknownSkill(OpenGoError):
    """A skill id is not present in the registry."""


class VersionConflict(OpenGoError):
    """Attempted to register a version that already exists for this head."""


class NotValidated(OpenGoError):
    """Registration was attempted for a template that never passed validation."""


class IllegalTransition(OpenGoError):
    """A status change skipped a pipeline stage or left a terminal state."""


# --- parameter binding --------------------------------------------------------


class UnknownParameter(OpenGoError):
    """A supplied parameter name is not declared by the skill template."""


class OutOfRange(OpenGoError):
    """A parameter value falls outside its declared bounds (or is not finite)."""


# --- planning -----------------------------------------------------------------


class NoFeasiblePlan(OpenGoError):
    """No backend produced a plan that survives validation.

    Carries the accumulated findings so callers can surface *why* every
    candidate was rejected.
    """

    def __init__(self, message: str, findings: list | None = None) -> None:
        super().__init__(message)
        self.findings = list(findings or [])


class WireFormatError(OpenGoError):
    """A planner reply does not parse as the plan wire format."""


class MalformedReply(WireFormatError):
    """A remote planner returned bytes that are not a plan document."""


class BackendTimeout(OpenGoError):
    """A planner backend exceeded its wall-clock budget."""


# --- simulation and safety ----------------------------------------------------


class OutOfMap(OpenGoError):
    """A queried position lies outside the loaded terrain grid."""


class EstopLatched(OpenGoError):
    """An action was refused because the emergency stop is latched."""


class MapFormatError(OpenGoError):
    """A terrain map file is empty, ragged, or uses unknown cell letters."""
