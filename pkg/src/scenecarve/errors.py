"""Exception hierarchy shared across the toolkit."""


class SceneCarveError(Exception):
    """Base class for all toolkit errors."""


class PlyParseError(SceneCarveError):
    """Malformed PLY input. Carries the offending line number or byte offset."""

    def __init__(self, message, line=None, offset=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte offset {offset}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ValidationError(SceneCarveError):
    """Input violates a documented invariant (bad pose, bad index, bad label)."""


class PreconditionError(SceneCarveError):
    """An operation was invoked in a state that its contract forbids."""


class PrerequisiteError(SceneCarveError):
    """A pipeline stage is missing the artifacts of an earlier stage."""


class UnsupportedVersionError(SceneCarveError):
    """Annotation file schema version is not understood."""


class EmptyStrokeError(SceneCarveError):
    """No sample of a stroke hit the mesh."""
