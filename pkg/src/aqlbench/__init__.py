"""Taint-flow query language, tool dispatcher and benchmark engine.

The package answers questions about data flows, intents and permissions
in Android apps by delegating to external analysis tools, converting
their output into one canonical answer format, and scoring the results
against hand-checked benchmark suites.
"""

from aqlbench.aql import (
    Answer,
    AppIdentifier,
    Filter,
    Flow,
    FromToMode,
    InMode,
    Provenance,
    Query,
    Reference,
    Subject,
    Unify,
    apply_post_ops,
    deserialize_answer,
    parse_query,
    print_query,
    serialize_answer,
)
from aqlbench.appmodel import (
    AppModel,
    Candidate,
    Kind,
    Strictness,
    ingest_app,
    load_source_sink_list,
    scan_candidates,
)
from aqlbench.bench import (
    BenchmarkCase,
    EvaluationReport,
    evaluate,
    load_suite,
    match_flows,
    run_benchmark,
    write_suite,
)
from aqlbench.dispatch import Config, execute, load_config, select_tool
from aqlbench.errors import AqlBenchError
from aqlbench.hashing import Hash, hash_bytes, hash_path

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AppIdentifier",
    "AppModel",
    "AqlBenchError",
    "BenchmarkCase",
    "Candidate",
    "Config",
    "EvaluationReport",
    "Filter",
    "Flow",
    "FromToMode",
    "Hash",
    "InMode",
    "Kind",
    "Provenance",
    "Query",
    "Reference",
    "Strictness",
    "Subject",
    "Unify",
    "apply_post_ops",
    "deserialize_answer",
    "evaluate",
    "execute",
    "hash_bytes",
    "hash_path",
    "ingest_app",
    "load_config",
    "load_source_sink_list",
    "load_suite",
    "match_flows",
    "parse_query",
    "print_query",
    "run_benchmark",
    "scan_candidates",
    "select_tool",
    "serialize_answer",
    "write_suite",
    "__version__",
]
