"""Query and answer object model.

All text fields are whitespace-normalized at construction so that two
references derived from differently formatted inputs compare equal.  Flows
and answers are immutable; answer equality is decided by the flow set
alone, never by provenance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import Iterable, Optional

from aqlbench.errors import QuerySemanticError
from aqlbench.hashing import Hash


def normalize(text: str) -> str:
    """Collapse all whitespace runs to single spaces and strip the ends."""
    return " ".join(text.split())


# --- statement text helpers ----------------------------------------------

_IDENT_CHARS = set("abcdefghijklmnopqrstuvwxyz"
                   "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_$.")


def callee_name(text: str) -> Optional[str]:
    """Invoked method name of a call statement, best effort from text.

    Walks back from the first '(' over identifier characters and keeps
    the last dot segment; without parentheses the trailing identifier of
    the whole text is used.
    """
    text = normalize(text)
    cut = text.find("(")
    end = cut if cut >= 0 else len(text)
    start = end
    while start > 0 and text[start - 1] in _IDENT_CHARS:
        start -= 1
    token = text[start:end].rstrip(".")
    if not token:
        return None
    name = token.rsplit(".", 1)[-1]
    # a bare number is never a method name
    if not name or name.isdigit():
        return None
    return name


def call_arity(text: str) -> Optional[int]:
    """Number of arguments in the first call of the statement, or None."""
    text = normalize(text)
    open_idx = text.find("(")
    if open_idx < 0:
        return None
    depth = 0
    quote: Optional[str] = None
    args = 0
    saw_token = False
    for i in range(open_idx, len(text)):
        c = text[i]
        if quote is not None:
            if c == quote and text[i - 1] != "\\":
                quote = None
            continue
        if c in "\"'":
            quote = c
            saw_token = True
            continue
        if c == "(":
            depth += 1
            if depth > 1:
                saw_token = True
            continue
        if c == ")":
            depth -= 1
            if depth == 0:
                return args + 1 if saw_token else 0
            saw_token = True
            continue
        if c == "," and depth == 1:
            args += 1
            saw_token = True
            continue
        if not c.isspace():
            saw_token = True
    return None


def class_name_matches(pattern: str, classname: str) -> bool:
    """A pattern matches the full class name or a dot-separated suffix."""
    return classname == pattern or classname.endswith("." + pattern)


def method_matches(pattern: str, signature: str) -> bool:
    """Bare names and return-type-free signatures match the full one."""
    if pattern == signature:
        return True
    sig_head, _, sig_params = signature.partition("(")
    sig_name = sig_head.strip().split()[-1] if sig_head.strip() else ""
    if pattern.endswith("(...)"):
        pattern = pattern[:-5]
    if "(" in pattern:
        return pattern == f"{sig_name}({sig_params}"
    return sig_name == pattern


def statement_texts_agree(pattern: str, actual: str) -> bool:
    """Verbatim equality, or same callee with compatible arity."""
    if pattern == actual:
        return True
    want, got = callee_name(pattern), callee_name(actual)
    if want is None or got is None or want != got:
        return False
    want_arity, got_arity = call_arity(pattern), call_arity(actual)
    return want_arity is None or got_arity is None \
        or want_arity == got_arity


class Subject(enum.Enum):
    FLOWS = "Flows"
    INTENTS = "Intents"
    INTENT_FILTERS = "IntentFilters"
    PERMISSIONS = "Permissions"


@dataclass(frozen=True, order=True)
class AppIdentifier:
    """An app named by file path plus content hashes.

    Hashes are kept sorted so identifiers built from the same app in any
    order are equal and serialize identically.
    """

    path: str
    hashes: tuple[Hash, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", normalize(self.path))
        object.__setattr__(self, "hashes", tuple(sorted(set(self.hashes))))


def _normalize_part(value: Optional[str]) -> Optional[str]:
    """Empty strings and the bare '*' wildcard mean "unconstrained"."""
    if value is None:
        return None
    value = normalize(value)
    if value in ("", "*"):
        return None
    return value


@dataclass(frozen=True)
class Reference:
    """A program point: app, optionally narrowed by class, method, statement.

    A None part is a wildcard when the reference is used as a pattern and
    simply absent when it names a concrete point.
    """

    app: AppIdentifier
    classname: Optional[str] = None
    method: Optional[str] = None
    statement: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "classname", _normalize_part(self.classname))
        object.__setattr__(self, "method", _normalize_part(self.method))
        object.__setattr__(self, "statement", _normalize_part(self.statement))


def _ref_sort_key(ref: Reference):
    return (
        ref.app.path,
        ref.classname or "",
        ref.method or "",
        ref.statement or "",
        ref.app.hashes,
    )


@dataclass(frozen=True)
class Flow:
    """A taint flow from a source statement to a sink statement.

    `via` carries any intermediate points a tool reported.  It is display
    metadata: two flows with equal endpoints are the same flow.
    """

    source: Reference
    sink: Reference
    via: tuple[Reference, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        for name, ref in (("source", self.source), ("sink", self.sink)):
            if ref.statement is None:
                raise ValueError(f"flow {name} must carry a statement")

    def __hash__(self) -> int:
        return hash((self.source, self.sink))


def flow_sort_key(flow: Flow):
    """Total order over flows used for canonical serialization."""
    return (_ref_sort_key(flow.source), _ref_sort_key(flow.sink))


@dataclass(frozen=True)
class Provenance:
    tool: str = ""
    timestamp: str = ""
    notes: tuple[str, ...] = ()


_EMPTY_PROVENANCE = Provenance()


@dataclass(frozen=True)
class Answer:
    """The result of a query: a set of flows.

    Provenance records which tool produced the answer and when; it is
    excluded from equality and from the canonical byte form.
    """

    flows: frozenset[Flow] = frozenset()
    provenance: Provenance = field(default=_EMPTY_PROVENANCE, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "flows", frozenset(self.flows))

    def sorted_flows(self) -> list[Flow]:
        return sorted(self.flows, key=flow_sort_key)

    def union(self, other: "Answer") -> "Answer":
        notes = tuple(dict.fromkeys(
            self.provenance.notes + other.provenance.notes))
        prov = Provenance(self.provenance.tool, self.provenance.timestamp,
                          notes)
        return Answer(self.flows | other.flows, prov)


def reference_matches(pattern: Reference, ref: Reference) -> bool:
    """Does a concrete reference fall under a pattern?

    App path '*' matches any app; otherwise the path or its basename must
    agree.  Pattern hashes, when present, must all appear on the
    candidate.  None parts are unconstrained; present parts match with
    the tolerance used everywhere else: classes by dot-suffix, methods by
    bare name or return-type-free signature, statements verbatim or by
    callee and arity.
    """
    if pattern.app.path != "*" and pattern.app.path != ref.app.path \
            and PurePosixPath(pattern.app.path).name \
            != PurePosixPath(ref.app.path).name:
        return False
    if pattern.app.hashes and not set(pattern.app.hashes) <= set(ref.app.hashes):
        return False
    checks = (("classname", class_name_matches),
              ("method", method_matches),
              ("statement", statement_texts_agree))
    for attr, agree in checks:
        want = getattr(pattern, attr)
        if want is None:
            continue
        got = getattr(ref, attr)
        if got is None or not agree(want, got):
            return False
    return True


# --- query AST ---

@dataclass(frozen=True)
class InMode:
    """`<subject> IN <scope> ?` - everything of a kind inside one scope."""
    scope: Reference


@dataclass(frozen=True)
class FromToMode:
    """`Flows FROM <src> TO <sink> ?` - flows between two program points."""
    source: Reference
    sink: Reference


@dataclass(frozen=True)
class Filter:
    """Keep only results touching the pattern."""
    pattern: Reference


@dataclass(frozen=True)
class Unify:
    """Merge in the answer of another query."""
    query: "Query"


PostOp = Filter | Unify


@dataclass(frozen=True)
class Query:
    subject: Subject
    mode: InMode | FromToMode
    post_ops: tuple[PostOp, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "post_ops", tuple(self.post_ops))
        if isinstance(self.mode, FromToMode) and self.subject is not Subject.FLOWS:
            raise QuerySemanticError(
                f"FROM/TO applies to Flows only, not {self.subject.value}")

    def app_paths(self) -> tuple[str, ...]:
        """Distinct app paths mentioned anywhere in the query, in order."""
        seen: dict[str, None] = {}
        for ref in self._references():
            seen.setdefault(ref.app.path)
        return tuple(seen)

    def target_app_paths(self) -> tuple[str, ...]:
        """Apps the analysis runs on: the IN or FROM/TO clause only.

        FILTER patterns and UNIFY subqueries name apps too, but those
        never become inputs of the tool answering this query.
        """
        if isinstance(self.mode, InMode):
            refs = [self.mode.scope]
        else:
            refs = [self.mode.source, self.mode.sink]
        seen: dict[str, None] = {}
        for ref in refs:
            seen.setdefault(ref.app.path)
        return tuple(seen)

    def _references(self) -> Iterable[Reference]:
        if isinstance(self.mode, InMode):
            yield self.mode.scope
        else:
            yield self.mode.source
            yield self.mode.sink
        for op in self.post_ops:
            if isinstance(op, Filter):
                yield op.pattern
            else:
                yield from op.query._references()


def _ref_to_dict(ref: Reference) -> dict:
    out: dict = {"app": {"path": ref.app.path,
                         "hashes": [{"algorithm": h.algorithm, "value": h.value}
                                    for h in ref.app.hashes]}}
    for attr in ("classname", "method", "statement"):
        value = getattr(ref, attr)
        if value is not None:
            out[attr] = value
    return out


def ast_to_dict(query: Query) -> dict:
    """JSON-friendly view of a query AST for CLI and service output."""
    if isinstance(query.mode, InMode):
        mode: dict = {"kind": "in", "scope": _ref_to_dict(query.mode.scope)}
    else:
        mode = {"kind": "from-to",
                "source": _ref_to_dict(query.mode.source),
                "sink": _ref_to_dict(query.mode.sink)}
    ops = []
    for op in query.post_ops:
        if isinstance(op, Filter):
            ops.append({"kind": "filter", "pattern": _ref_to_dict(op.pattern)})
        else:
            ops.append({"kind": "unify", "query": ast_to_dict(op.query)})
    return {"subject": query.subject.value, "mode": mode, "post_ops": ops}
