"""Exception types shared across the package."""

from __future__ import annotations


class TaskSceneError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(TaskSceneError):
    """Two vectors (or a vector and a task set) disagree on dimension."""


class DegenerateVector(TaskSceneError):
    """A vector with (near-)zero norm where a direction is required."""


class NoPositiveRelevance(TaskSceneError):
    """Every similarity score retained by the top-k filter is non-positive."""

    def __init__(self, message: str, primitive_id: int | None = None):
        super().__init__(message)
        self.primitive_id = primitive_id


class OverlappingMembers(TaskSceneError):
    """Attempted to merge clusters that share primitive ids."""


class DuplicateId(TaskSceneError):
    """A primitive id was ingested twice."""


class MissingVisibility(TaskSceneError):
    """Place nodes that no input image can see cannot receive a feature."""

    def __init__(self, place_ids):
        self.place_ids = sorted(place_ids)
        super().__init__(f"places without visible images: {self.place_ids}")


class SchemaError(TaskSceneError):
    """An input file violates its schema.

    Carries the file path and, for record files, the 1-based line number.
    """

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)
