"""Exception types shared across the package."""

from __future__ import annotations


class KahaniError(Exception):
    """Base class for all package-specific errors."""


class MissingVariable(KahaniError):
    def __init__(self, name: str):
        super().__init__(f"template variable not supplied: {name!r}")
        self.name = name


class NoJsonFound(KahaniError):
    """Raised when a model reply contains no parseable JSON value."""


class SchemaMismatch(KahaniError):
    """Parsed JSON does not have the shape a stage requires."""


class TooManyCharacters(SchemaMismatch):
    def __init__(self, count: int):
        super().__init__(f"cast has {count} characters, maximum is 3")
        self.count = count


class TooManyInScene(SchemaMismatch):
    def __init__(self, count: int):
        super().__init__(f"scene names {count} characters, maximum is 2")
        self.count = count


class UnknownCharacter(SchemaMismatch):
    def __init__(self, name: str):
        super().__init__(f"scene references unknown character {name!r}")
        self.name = name


class UnbalancedParens(KahaniError):
    def __init__(self, position: int):
        super().__init__(f"unbalanced parenthesis at offset {position}")
        self.position = position


class BadWeight(KahaniError):
    def __init__(self, token: str):
        super().__init__(f"attention weight {token!r} outside (0, 2]")
        self.token = token


class BackendError(KahaniError):
    def __init__(self, message: str, status: int | None = None, body: str = ""):
        detail = f" (HTTP {status})" if status is not None else ""
        super().__init__(f"{message}{detail}")
        self.status = status
        self.body = body[:500]


class FixtureMiss(BackendError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded reply for request digest {digest}")
        self.digest = digest


class ImageDecodeError(KahaniError):
    """Image backend reply was not valid base64 PNG data."""


class EmptyReply(KahaniError):
    """Chat backend returned only whitespace, even after retries."""


class StageFailed(KahaniError):
    def __init__(self, stage: str, reason: str):
        super().__init__(f"stage {stage} failed: {reason}")
        self.stage = stage
        self.reason = reason


class EmptyGroup(KahaniError):
    """An aggregation cell has no records."""


class AllZeroDifferences(KahaniError):
    """Every paired difference is zero; the signed-rank test carries no information."""


class EmptyReference(KahaniError):
    """Reference highlights are empty for the requested story."""


class DatasetError(KahaniError):
    """Annotation dataset violates its schema."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations[:3]) or "invalid dataset")
        self.violations = violations
