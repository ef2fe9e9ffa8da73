"""Exception hierarchy shared across the forge pipeline.

Parsers raise ParseError/CountError/LabelError, numeric contracts raise
BoundsError, call contracts raise PreconditionError, structural rules raise
InvariantError. Gateway and store failures get their own branches so callers
can tell a cache miss from a malformed completion.
"""

from __future__ import annotations


class ForgeError(Exception):
    """Base class for all pipeline errors."""


class ParseError(ForgeError):
    """Text (completion or file) does not match the expected format."""

    def __init__(self, message: str, *, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class CountError(ForgeError):
    """An item count differs from the contracted count."""

    def __init__(self, what: str, expected: int | str, found: int):
        super().__init__(f"{what}: expected {expected}, found {found}")
        self.what = what
        self.expected = expected
        self.found = found


class LabelError(ForgeError):
    """A token falls outside its closed label set."""

    def __init__(self, kind: str, token: str):
        super().__init__(f"unknown {kind} label: {token!r}")
        self.kind = kind
        self.token = token


class BoundsError(ForgeError):
    """A numeric value falls outside its contracted range."""


class PreconditionError(ForgeError):
    """An operation was invoked with arguments violating its preconditions."""


class InvariantError(ForgeError):
    """A structural invariant does not hold."""


class GatewayError(ForgeError):
    """Base class for provider-boundary failures."""


class UnknownTemplateError(GatewayError):
    def __init__(self, template_id: str):
        super().__init__(f"unknown template: {template_id!r}")
        self.template_id = template_id


class UnboundSlotError(GatewayError):
    def __init__(self, slot: str, template_id: str = ""):
        suffix = f" in template {template_id!r}" if template_id else ""
        super().__init__(f"unbound slot: {slot!r}{suffix}")
        self.slot = slot


class TemperaturePolicyError(GatewayError):
    """Evaluation request dispatched with a nonzero temperature."""


class CacheMissError(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"replay cache miss for digest {digest}")
        self.digest = digest


class TransportError(GatewayError):
    """Provider unreachable or returned a non-retryable error."""


class StoreError(ForgeError):
    """Corpus persistence failure."""


class DuplicateIdError(StoreError):
    def __init__(self, instance_id: str):
        super().__init__(f"duplicate id with differing content: {instance_id}")
        self.instance_id = instance_id


class ReferentialError(StoreError):
    """A stored record references an id that does not resolve."""


class RefinementLoopError(ForgeError):
    """Inner stage-3 failure; carries the trace accumulated so far."""

    def __init__(self, message: str, trace_so_far=None):
        super().__init__(message)
        self.trace_so_far = trace_so_far


class ServiceError(ForgeError):
    """Rating-service request violated session state."""


class DuplicateSubmissionError(ServiceError):
    pass


class PayloadKindError(ServiceError):
    pass
