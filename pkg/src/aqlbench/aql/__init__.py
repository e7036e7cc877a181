"""Query language and answer objects.

Public surface re-exported here so callers can write
`from aqlbench.aql import parse_query, Answer` without caring about the
internal module split.
"""

from aqlbench.aql.model import (
    Answer,
    AppIdentifier,
    Filter,
    Flow,
    FromToMode,
    InMode,
    PostOp,
    Provenance,
    Query,
    Reference,
    Subject,
    flow_sort_key,
    normalize,
    reference_matches,
)
from aqlbench.aql.ops import apply_post_ops
from aqlbench.aql.parser import parse_query
from aqlbench.aql.printer import print_query
from aqlbench.aql.model import Unify
from aqlbench.aql.xmlio import (
    answer_from_element,
    answer_lines,
    deserialize_answer,
    serialize_answer,
)

__all__ = [
    "Answer",
    "AppIdentifier",
    "Filter",
    "Flow",
    "FromToMode",
    "InMode",
    "PostOp",
    "Provenance",
    "Query",
    "Reference",
    "Subject",
    "Unify",
    "answer_from_element",
    "answer_lines",
    "apply_post_ops",
    "deserialize_answer",
    "flow_sort_key",
    "normalize",
    "parse_query",
    "print_query",
    "reference_matches",
    "serialize_answer",
]
