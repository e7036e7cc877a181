"""Exception hierarchy shared across the package.

Every domain failure derives from AqlBenchError so the CLI can map it to
exit code 1; anything else is a genuine bug.
"""

from __future__ import annotations


class AqlBenchError(Exception):
    """Base class for all domain errors."""


# --- app model ingestion ---

class MalformedSidecarError(AqlBenchError):
    """The app sidecar document does not parse or violates the format."""


class DuplicateClassError(AqlBenchError):
    """Two classes with the same fully qualified name in one app."""


class MissingFileError(AqlBenchError):
    """Strict ingestion: the referenced .apk does not exist."""


class SourceSinkListError(AqlBenchError):
    """A source/sink list line does not follow `name(params) -> SOURCE|SINK`."""


# --- query language ---

class QuerySyntaxError(AqlBenchError):
    """Query text rejected by the grammar."""

    def __init__(self, message: str, line: int, column: int, offset: int,
                 expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.offset = offset
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += " (expected " + " or ".join(expected) + ")"
        super().__init__(detail)


class QuerySemanticError(AqlBenchError):
    """Query is grammatical but meaningless, e.g. FROM/TO on a non-flow subject."""


class SchemaError(AqlBenchError):
    """An answer document misses a required element or carries a bad value."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message} (at {path})" if path else message)


class MissingAuxiliaryAnswerError(AqlBenchError):
    """A UNIFY post-op references a query with no answer supplied."""


# --- dispatch ---

class ConfigSyntaxError(AqlBenchError):
    """Tool configuration file does not parse or misses required fields."""


class UnknownConverterError(AqlBenchError):
    """A converter id is not present in the registry."""


class DuplicateToolError(AqlBenchError):
    """Two tools with the same name in one configuration."""


class NoCapableToolError(AqlBenchError):
    """No registered tool (or preprocessor route) covers the query."""

    def __init__(self, subject: str, scope: str):
        self.subject = subject
        self.scope = scope
        super().__init__(
            f"no tool capable of subject={subject} scope={scope}")


# --- converters ---

class DuplicateConverterIdError(AqlBenchError):
    """register_converter called with an id already taken."""


class UnparsableOutputError(AqlBenchError):
    """Raw tool output rejected by the converter's format parser."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class UnresolvableEndpointError(AqlBenchError):
    """Exact-mode conversion could not pin an endpoint to one statement."""


# --- benchmark engine ---

class UnknownAppIdError(AqlBenchError):
    """A case combination names an app id that was never loaded."""


class EmptySelectionError(AqlBenchError):
    """Pair generation needs at least one source and one sink group."""


class MissingAnswerError(AqlBenchError):
    """An active benchmark case has no answer to evaluate."""


class IncompleteCaseError(AqlBenchError):
    """An active benchmark case has no expected answer (still a skeleton)."""


class BenchmarkFormatError(AqlBenchError):
    """A benchmark suite document does not parse or violates the schema."""


# --- service ---

class PortInUseError(AqlBenchError):
    """The requested TCP port is already bound."""


class SessionError(AqlBenchError):
    """A session mutation cannot be applied to the current state."""
