"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`HeteSimError`, and additionally from the closest builtin so callers
that only know ``ValueError`` / ``KeyError`` still catch them.
"""


class HeteSimError(Exception):
    """Base class for all package errors."""


# -- schema / graph ---------------------------------------------------------


class SchemaError(HeteSimError, ValueError):
    """The schema, or data checked against it, is inconsistent."""


class UnknownType(SchemaError):
    pass


class UnknownRelation(SchemaError):
    pass


class TypeMismatch(SchemaError):
    """An object's type does not match what a relation or path expects."""


class NonPositiveWeight(SchemaError):
    pass


class UnknownNode(SchemaError):
    pass


class DuplicateNode(SchemaError):
    pass


class SchemaMismatch(SchemaError):
    """A path was built against a different schema than the graph's."""


# -- paths ------------------------------------------------------------------


class PathError(HeteSimError, ValueError):
    pass


class ParseError(PathError):
    pass


class AmbiguousRelation(PathError):
    pass


class NotConcatenable(PathError):
    pass


class AsymmetricPath(PathError):
    pass


# -- acceleration -----------------------------------------------------------


class DimensionMismatch(HeteSimError, ValueError):
    pass


# -- metrics ----------------------------------------------------------------


class MetricError(HeteSimError, ValueError):
    pass


class MissingLabel(MetricError):
    pass


class DegenerateLabels(MetricError):
    pass


class IdSetMismatch(MetricError):
    pass


# -- files ------------------------------------------------------------------


class FormatError(HeteSimError, ValueError):
    """Malformed input file; carries the offending file and line number."""

    def __init__(self, message, filename=None, lineno=None):
        self.filename = filename
        self.lineno = lineno
        where = ""
        if filename is not None:
            where = f"{filename}:{lineno}: " if lineno is not None else f"{filename}: "
        super().__init__(where + message)
