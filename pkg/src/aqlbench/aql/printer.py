"""Canonical query text.

One line, single spaces, wildcard levels omitted.  parse(print(ast))
reproduces the AST exactly.
"""

from __future__ import annotations

from aqlbench.aql.model import (
    Filter,
    FromToMode,
    InMode,
    Query,
    Reference,
    Unify,
)


def _quote(value: str) -> str:
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def print_reference(ref: Reference) -> str:
    parts = []
    if ref.statement is not None:
        parts.append(f"Statement({_quote(ref.statement)})")
    if ref.method is not None:
        parts.append(f"Method({_quote(ref.method)})")
    if ref.classname is not None:
        parts.append(f"Class({_quote(ref.classname)})")
    parts.append(f"App({_quote(ref.app.path)})")
    return " -> ".join(parts)


def print_query(query: Query) -> str:
    pieces = [query.subject.value]
    if isinstance(query.mode, InMode):
        pieces.append("IN")
        pieces.append(print_reference(query.mode.scope))
    else:
        assert isinstance(query.mode, FromToMode)
        pieces.append("FROM")
        pieces.append(print_reference(query.mode.source))
        pieces.append("TO")
        pieces.append(print_reference(query.mode.sink))
    for op in query.post_ops:
        if isinstance(op, Filter):
            pieces.append("FILTER")
            pieces.append(print_reference(op.pattern))
        else:
            assert isinstance(op, Unify)
            pieces.append("UNIFY")
            pieces.append("[ " + print_query(op.query) + " ]")
    pieces.append("?")
    return " ".join(pieces)
