"""Exception hierarchy shared by all mdselect modules."""


class MdsError(Exception):
    """Base class for all toolkit errors."""


class FormatError(MdsError):
    """A file on disk violates its documented layout or invariants."""


class ValidationError(MdsError):
    """Cross-artifact consistency check failed hard."""


class CapabilityError(MdsError):
    """A scoring method needs an artifact the bundle does not carry."""

    def __init__(self, artifact: str, method: str):
        self.artifact = artifact
        self.method = method
        super().__init__(f"{artifact} required for method '{method}'")


class DigestMismatchError(MdsError):
    """Two artifacts that must refer to the same input do not."""
