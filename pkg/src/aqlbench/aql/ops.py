"""Post-operations applied to answers after tool execution."""

from __future__ import annotations

from typing import Mapping

from aqlbench.aql.model import (
    Answer,
    Filter,
    PostOp,
    Query,
    Unify,
    reference_matches,
)
from aqlbench.errors import MissingAuxiliaryAnswerError


def apply_post_ops(answer: Answer, ops: tuple[PostOp, ...] | list[PostOp],
                   auxiliary: Mapping[Query, Answer] | None = None) -> Answer:
    """Fold FILTER and UNIFY operations left to right.

    FILTER keeps flows whose source or sink matches the pattern.  UNIFY
    takes the union with the auxiliary answer for the referenced query;
    the caller must have evaluated it already.
    """
    auxiliary = auxiliary or {}
    result = answer
    for op in ops:
        if isinstance(op, Filter):
            kept = frozenset(
                flow for flow in result.flows
                if reference_matches(op.pattern, flow.source)
                or reference_matches(op.pattern, flow.sink))
            result = Answer(kept, result.provenance)
        elif isinstance(op, Unify):
            if op.query not in auxiliary:
                raise MissingAuxiliaryAnswerError(
                    "no answer supplied for UNIFY subquery")
            result = result.union(auxiliary[op.query])
        else:
            raise TypeError(f"unknown post-op: {op!r}")
    return result
