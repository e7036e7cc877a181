"""Benchmark engine: case lifecycle, flow matching, metrics, exports.

A benchmark is a set of cases, each tying one or more apps to an expected
answer and a polarity.  Positive cases must be found, negative cases must
not.  Matching follows the one-witness rule: a single actual flow whose
endpoints match a single expected flow settles the case.

Endpoint matching happens at two levels.  If sources or sinks were
grouped during refinement, endpoints falling into the same group match
regardless of the concrete call (several location getters read the same
resource).  Otherwise endpoints compare directly: exact mode wants the
same statement, name-only mode just the same invoked method name.

Metrics are exact rationals with the 0/0 -> 0 convention, so a suite
whose single positive case is missed reports precision, recall and
F-measure of exactly 0 even when negatives were all classified correctly.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from aqlbench.appmodel import (
    AppModel,
    Candidate,
    Kind,
    StatementRef,
    Strictness,
    callee_name,
    call_arity,
)
from aqlbench.aql.model import (
    Answer,
    AppIdentifier,
    Flow,
    FromToMode,
    Query,
    Reference,
    Subject,
    flow_sort_key,
)
from aqlbench.aql.parser import parse_query
from aqlbench.aql.printer import print_query
from aqlbench.aql.xmlio import answer_from_element, answer_lines
from aqlbench.dispatch import Config, ExitStatus, ToolRun, execute
from aqlbench.errors import (
    BenchmarkFormatError,
    EmptySelectionError,
    IncompleteCaseError,
    MissingAnswerError,
    UnknownAppIdError,
)


class Polarity(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class Classification(enum.Enum):
    TP = "TP"
    FN = "FN"
    FP = "FP"
    TN = "TN"


@dataclass(frozen=True)
class BenchmarkCase:
    id: str
    apps: tuple[str, ...]
    expected: Optional[Answer] = None
    polarity: Polarity = Polarity.POSITIVE
    active: bool = True
    generated_query: Optional[Query] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "apps", tuple(self.apps))
        if self.expected is not None and not self.expected.flows:
            raise ValueError(
                f"case {self.id}: expected answer must carry at least "
                f"one flow")


@dataclass(frozen=True)
class Group:
    label: str
    refs: tuple[StatementRef, ...]
    kind: Kind

    def __post_init__(self) -> None:
        object.__setattr__(self, "refs", tuple(self.refs))
        if not self.refs:
            raise ValueError(f"group {self.label!r} has no members")


@dataclass(frozen=True)
class SourceSinkSelection:
    """The selected candidates partitioned into groups.

    Build through build_selection, which wraps every ungrouped candidate
    into a singleton group so the partition invariant holds.
    """

    candidates: tuple[Candidate, ...]
    groups: tuple[Group, ...]

    def groups_of_kind(self, kind: Kind) -> list[Group]:
        return [g for g in self.groups if g.kind is kind]


def _singleton_label(ref: StatementRef,
                     apps_by_id: Mapping[str, AppModel]) -> str:
    model = apps_by_id.get(ref.app_id)
    if model is not None:
        try:
            stmt = model.statement_at(ref)
        except KeyError:
            stmt = None
        if stmt is not None:
            name = stmt.callee or callee_name(stmt.text)
            if name:
                return name
    method_name = ref.method.split("(", 1)[0]
    short_class = ref.classname.rsplit(".", 1)[-1]
    return f"{short_class}.{method_name}[{ref.index}]"


def build_selection(candidates: Sequence[Candidate],
                    apps_by_id: Mapping[str, AppModel],
                    groups: Sequence[Group] = ()) -> SourceSinkSelection:
    """Partition candidates into the given groups plus singletons."""
    selected = {(c.ref, c.kind) for c in candidates}
    taken: set[str] = set()
    grouped: set[tuple[StatementRef, Kind]] = set()
    for group in groups:
        if group.label in taken:
            raise ValueError(f"duplicate group label: {group.label!r}")
        taken.add(group.label)
        for ref in group.refs:
            key = (ref, group.kind)
            if key not in selected:
                raise ValueError(
                    f"group {group.label!r} member is not a selected "
                    f"{group.kind.value}: {ref}")
            if key in grouped:
                raise ValueError(
                    f"candidate in two groups: {ref} ({group.kind.value})")
            grouped.add(key)

    singles: list[Group] = []
    for candidate in candidates:
        key = (candidate.ref, candidate.kind)
        if key in grouped:
            continue
        grouped.add(key)
        label = _singleton_label(candidate.ref, apps_by_id)
        if label in taken:
            n = 2
            while f"{label}#{n}" in taken:
                n += 1
            label = f"{label}#{n}"
        taken.add(label)
        singles.append(Group(label, (candidate.ref,), candidate.kind))
    return SourceSinkSelection(tuple(candidates), tuple(groups) + tuple(singles))


# --- endpoint matching ---------------------------------------------------

def _apps_compatible(a: AppIdentifier, b: AppIdentifier) -> bool:
    if a.path == "*" or b.path == "*":
        return True
    if a.path == b.path or Path(a.path).name == Path(b.path).name:
        return True
    return bool(set(a.hashes) & set(b.hashes))


def _classes_compatible(a: str, b: str) -> bool:
    return a == b or a.endswith("." + b) or b.endswith("." + a)


def _method_name(signature: str) -> str:
    head = signature.split("(", 1)[0].strip()
    return head.split()[-1] if head else head


def _methods_compatible(a: str, b: str) -> bool:
    if a == b:
        return True
    for one, other in ((a, b), (b, a)):
        name = one[:-5] if one.endswith("(...)") else one
        if "(" not in name and _method_name(other) == name:
            return True
    # same name and parameter list, return type omitted on one side
    return (_method_name(a) == _method_name(b)
            and a.split("(", 1)[1:] == b.split("(", 1)[1:])


def _statements_compatible(a: str, b: str, strictness: Strictness) -> bool:
    if a == b:
        return True
    ca, cb = callee_name(a), callee_name(b)
    if ca is None or cb is None or ca != cb:
        return False
    if strictness is Strictness.NAME_ONLY:
        return True
    aa, ab = call_arity(a), call_arity(b)
    if aa is None or ab is None:
        return True
    return aa == ab


def endpoint_matches(expected: Reference, actual: Reference,
                     strictness: Strictness) -> bool:
    """Direct endpoint comparison without grouping."""
    if expected.statement is None or actual.statement is None:
        return False
    if strictness is Strictness.NAME_ONLY:
        return _statements_compatible(expected.statement, actual.statement,
                                      strictness)
    if not _apps_compatible(expected.app, actual.app):
        return False
    if (expected.classname is not None and actual.classname is not None
            and not _classes_compatible(expected.classname,
                                        actual.classname)):
        return False
    if (expected.method is not None and actual.method is not None
            and not _methods_compatible(expected.method, actual.method)):
        return False
    return _statements_compatible(expected.statement, actual.statement,
                                  strictness)


def _labels_for(ref: Reference, kind: Kind,
                selection: Optional[SourceSinkSelection],
                strictness: Strictness,
                apps_by_id: Mapping[str, AppModel]) -> frozenset[str]:
    if selection is None:
        return frozenset()
    labels: set[str] = set()
    for group in selection.groups_of_kind(kind):
        for member in group.refs:
            model = apps_by_id.get(member.app_id)
            if model is None:
                continue
            try:
                member_ref = model.to_reference(member)
            except KeyError:
                continue
            if endpoint_matches(member_ref, ref, strictness):
                labels.add(group.label)
                break
    return frozenset(labels)


def _endpoint_ok(expected: Reference, actual: Reference, kind: Kind,
                 selection: Optional[SourceSinkSelection],
                 strictness: Strictness,
                 apps_by_id: Mapping[str, AppModel]) -> bool:
    if selection is not None:
        expected_labels = _labels_for(expected, kind, selection, strictness,
                                      apps_by_id)
        actual_labels = _labels_for(actual, kind, selection, strictness,
                                    apps_by_id)
        if expected_labels & actual_labels:
            return True
    return endpoint_matches(expected, actual, strictness)


def match_flows(expected: Answer, actual: Answer,
                selection: Optional[SourceSinkSelection] = None,
                strictness: Strictness = Strictness.EXACT,
                apps_by_id: Optional[Mapping[str, AppModel]] = None
                ) -> Optional[Flow]:
    """First actual flow witnessing any expected flow, or None.

    One matching flow per case is sufficient; the first in canonical
    order is returned for stable reporting.
    """
    apps_by_id = apps_by_id or {}
    expected_flows = expected.sorted_flows()
    for actual_flow in actual.sorted_flows():
        for expected_flow in expected_flows:
            if (_endpoint_ok(expected_flow.source, actual_flow.source,
                             Kind.SOURCE, selection, strictness, apps_by_id)
                    and _endpoint_ok(expected_flow.sink, actual_flow.sink,
                                     Kind.SINK, selection, strictness,
                                     apps_by_id)):
                return actual_flow
    return None


# --- case generation -----------------------------------------------------

def identify_cases(apps: Sequence[AppModel],
                   combinations: Sequence[Sequence[str]] = ()
                   ) -> list[BenchmarkCase]:
    """One skeleton case per app plus one per requested combination."""
    known = {app.id for app in apps}
    cases = [BenchmarkCase(id=app.id, apps=(app.id,)) for app in apps]
    for combo in combinations:
        for app_id in combo:
            if app_id not in known:
                raise UnknownAppIdError(
                    f"combination names unknown app: {app_id!r}")
        combo = tuple(combo)
        cases.append(BenchmarkCase(id="+".join(combo), apps=combo))
    return cases


def generate_pairs(apps_by_id: Mapping[str, AppModel],
                   selection: SourceSinkSelection) -> list[BenchmarkCase]:
    """One positive case per source group x sink group pair.

    The first member of each group stands in for the group when building
    the expected flow.
    """
    sources = selection.groups_of_kind(Kind.SOURCE)
    sinks = selection.groups_of_kind(Kind.SINK)
    if not sources or not sinks:
        raise EmptySelectionError(
            "pair generation needs at least one source group and one "
            "sink group")
    cases: list[BenchmarkCase] = []
    for src_group in sources:
        for sink_group in sinks:
            src_ref = src_group.refs[0]
            sink_ref = sink_group.refs[0]
            try:
                src = apps_by_id[src_ref.app_id].to_reference(src_ref)
                sink = apps_by_id[sink_ref.app_id].to_reference(sink_ref)
            except KeyError as exc:
                raise UnknownAppIdError(
                    f"selection references unknown app: {exc}") from exc
            app_ids = [src_ref.app_id]
            if sink_ref.app_id not in app_ids:
                app_ids.append(sink_ref.app_id)
            expected = Answer(frozenset({Flow(src, sink)}))
            cases.append(BenchmarkCase(
                id=f"{src_group.label}->{sink_group.label}",
                apps=tuple(app_ids),
                expected=expected,
            ))
    return cases


def query_for_case(case: BenchmarkCase) -> Query:
    if case.generated_query is not None:
        return case.generated_query
    if case.expected is None:
        raise IncompleteCaseError(
            f"case {case.id}: no expected answer to derive a query from")
    flow = case.expected.sorted_flows()[0]
    return Query(Subject.FLOWS, FromToMode(flow.source, flow.sink))


# --- evaluation ----------------------------------------------------------

@dataclass(frozen=True)
class RunSummary:
    tool: str
    exit_status: ExitStatus
    wall_time: float
    cache_hit: bool = False

    @classmethod
    def from_tool_run(cls, run: ToolRun) -> "RunSummary":
        return cls(run.tool, run.exit_status, run.wall_time, run.cache_hit)


@dataclass(frozen=True)
class CaseVerdict:
    case_id: str
    polarity: Polarity
    classification: Classification
    matched_flow: Optional[Flow] = None
    run: Optional[RunSummary] = None
    degraded: bool = False

    def __post_init__(self) -> None:
        has_match = self.matched_flow is not None
        if has_match != (self.classification in (Classification.TP,
                                                 Classification.FP)):
            raise ValueError(
                f"case {self.case_id}: matched flow present iff "
                f"classification is TP or FP")


@dataclass(frozen=True)
class EvaluationReport:
    verdicts: tuple[CaseVerdict, ...]
    tp: int
    fp: int
    tn: int
    fn: int
    precision: Fraction
    recall: Fraction
    f_measure: Fraction


def _metrics(tp: int, fp: int, fn: int) -> tuple[Fraction, Fraction, Fraction]:
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    if precision + recall:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = Fraction(0)
    return precision, recall, f_measure


def build_report(verdicts: Sequence[CaseVerdict]) -> EvaluationReport:
    counts = {c: 0 for c in Classification}
    for verdict in verdicts:
        counts[verdict.classification] += 1
    tp, fp = counts[Classification.TP], counts[Classification.FP]
    tn, fn = counts[Classification.TN], counts[Classification.FN]
    precision, recall, f_measure = _metrics(tp, fp, fn)
    return EvaluationReport(tuple(verdicts), tp, fp, tn, fn,
                            precision, recall, f_measure)


def evaluate(cases: Sequence[BenchmarkCase],
             answers: Mapping[str, tuple[Answer, Optional[ToolRun]]],
             selection: Optional[SourceSinkSelection] = None,
             strictness: Strictness = Strictness.EXACT,
             apps_by_id: Optional[Mapping[str, AppModel]] = None
             ) -> EvaluationReport:
    """Classify every active case and compute aggregate metrics."""
    verdicts: list[CaseVerdict] = []
    for case in cases:
        if not case.active:
            continue
        if case.expected is None:
            raise IncompleteCaseError(
                f"case {case.id} has no expected answer")
        if case.id not in answers:
            raise MissingAnswerError(f"no answer for active case {case.id}")
        answer, run = answers[case.id]
        matched = match_flows(case.expected, answer, selection, strictness,
                              apps_by_id)
        if case.polarity is Polarity.POSITIVE:
            classification = (Classification.TP if matched is not None
                              else Classification.FN)
        else:
            classification = (Classification.FP if matched is not None
                              else Classification.TN)
        verdicts.append(CaseVerdict(
            case_id=case.id,
            polarity=case.polarity,
            classification=classification,
            matched_flow=matched,
            run=RunSummary.from_tool_run(run) if run is not None else None,
            degraded=(run is not None
                      and run.exit_status is not ExitStatus.SUCCESS),
        ))
    return build_report(verdicts)


def run_benchmark(cases: Sequence[BenchmarkCase], config: Config,
                  apps_by_id: Mapping[str, AppModel],
                  selection: Optional[SourceSinkSelection] = None,
                  strictness: Strictness = Strictness.EXACT
                  ) -> tuple[EvaluationReport,
                             dict[str, tuple[Answer, ToolRun]]]:
    """Issue one query per active case, then evaluate.

    Dispatch caches by (query, tool, app hashes), so re-running a suite
    only launches tools for cases not seen before.
    """
    answers: dict[str, tuple[Answer, ToolRun]] = {}
    for case in cases:
        if not case.active:
            continue
        if case.expected is None:
            raise IncompleteCaseError(
                f"case {case.id} has no expected answer")
        context = []
        for app_id in case.apps:
            if app_id not in apps_by_id:
                raise UnknownAppIdError(
                    f"case {case.id} references unknown app {app_id!r}")
            context.append(apps_by_id[app_id])
        query = query_for_case(case)
        answer, run = execute(query, config, tuple(context), strictness)
        answers[case.id] = (answer, run)
    report = evaluate(cases, answers, selection, strictness, apps_by_id)
    return report, answers


# --- exports -------------------------------------------------------------

def _flow_summary(flow: Optional[Flow]) -> Optional[dict]:
    if flow is None:
        return None
    return {"source": flow.source.statement, "sink": flow.sink.statement}


def report_to_dict(report: EvaluationReport) -> dict:
    verdicts = []
    for v in report.verdicts:
        run = None
        if v.run is not None:
            run = {"tool": v.run.tool,
                   "exit_status": v.run.exit_status.value,
                   "wall_time_s": round(v.run.wall_time, 3),
                   "cache_hit": v.run.cache_hit}
        verdicts.append({
            "case_id": v.case_id,
            "polarity": v.polarity.value,
            "classification": v.classification.value,
            "degraded": v.degraded,
            "run": run,
            "matched": _flow_summary(v.matched_flow),
        })
    return {
        "counts": {"tp": report.tp, "fp": report.fp,
                   "tn": report.tn, "fn": report.fn,
                   "cases": len(report.verdicts)},
        "metrics": {"precision": float(report.precision),
                    "recall": float(report.recall),
                    "f_measure": float(report.f_measure)},
        "verdicts": verdicts,
    }


def report_from_json(data: bytes) -> EvaluationReport:
    doc = json.loads(data)
    verdicts = []
    for v in doc.get("verdicts", []):
        run = None
        if v.get("run"):
            run = RunSummary(
                tool=v["run"]["tool"],
                exit_status=ExitStatus(v["run"]["exit_status"]),
                wall_time=v["run"]["wall_time_s"],
                cache_hit=v["run"]["cache_hit"],
            )
        matched = None
        if v.get("matched"):
            matched = Flow(
                Reference(app=AppIdentifier("*"),
                          statement=v["matched"]["source"]),
                Reference(app=AppIdentifier("*"),
                          statement=v["matched"]["sink"]),
            )
        verdicts.append(CaseVerdict(
            case_id=v["case_id"],
            polarity=Polarity(v["polarity"]),
            classification=Classification(v["classification"]),
            matched_flow=matched,
            run=run,
            degraded=v.get("degraded", False),
        ))
    return build_report(verdicts)


_CSV_HEADER = ["case_id", "polarity", "classification", "degraded", "tool",
               "exit_status", "cache_hit", "wall_time_s", "source", "sink"]


def _verdict_row(v: CaseVerdict) -> list[str]:
    return [
        v.case_id,
        v.polarity.value,
        v.classification.value,
        "1" if v.degraded else "0",
        v.run.tool if v.run else "",
        v.run.exit_status.value if v.run else "",
        ("1" if v.run.cache_hit else "0") if v.run else "",
        f"{v.run.wall_time:.3f}" if v.run else "",
        v.matched_flow.source.statement if v.matched_flow else "",
        v.matched_flow.sink.statement if v.matched_flow else "",
    ]


def _sql_quote(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def export_report(report: EvaluationReport, fmt: str) -> bytes:
    if fmt == "json":
        doc = report_to_dict(report)
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode(
            "utf-8")
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for v in report.verdicts:
            writer.writerow(_verdict_row(v))
        return buffer.getvalue().encode("utf-8")
    if fmt == "sql":
        lines = [
            "CREATE TABLE verdicts (",
            "  case_id TEXT PRIMARY KEY,",
            "  polarity TEXT NOT NULL,",
            "  classification TEXT NOT NULL,",
            "  degraded INTEGER NOT NULL,",
            "  tool TEXT,",
            "  exit_status TEXT,",
            "  cache_hit INTEGER,",
            "  wall_time_s REAL,",
            "  source TEXT,",
            "  sink TEXT",
            ");",
        ]
        for v in report.verdicts:
            row = _verdict_row(v)
            values = [_sql_quote(row[0]), _sql_quote(row[1]),
                      _sql_quote(row[2]), row[3]]
            values.append(_sql_quote(row[4]) if v.run else "NULL")
            values.append(_sql_quote(row[5]) if v.run else "NULL")
            values.append(row[6] if v.run else "NULL")
            values.append(row[7] if v.run else "NULL")
            values.append(_sql_quote(row[8]) if v.matched_flow else "NULL")
            values.append(_sql_quote(row[9]) if v.matched_flow else "NULL")
            lines.append("INSERT INTO verdicts VALUES ("
                         + ", ".join(values) + ");")
        lines += [
            "CREATE TABLE metrics (",
            "  tp INTEGER NOT NULL,",
            "  fp INTEGER NOT NULL,",
            "  tn INTEGER NOT NULL,",
            "  fn INTEGER NOT NULL,",
            "  precision REAL NOT NULL,",
            "  recall REAL NOT NULL,",
            "  f_measure REAL NOT NULL",
            ");",
            f"INSERT INTO metrics VALUES ({report.tp}, {report.fp}, "
            f"{report.tn}, {report.fn}, {float(report.precision)!r}, "
            f"{float(report.recall)!r}, {float(report.f_measure)!r});",
        ]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown export format: {fmt!r}")


# --- multi-tool triage ---------------------------------------------------

@dataclass(frozen=True)
class TriageEntry:
    case_id: str
    flow: Flow
    tools: tuple[str, ...]
    shortlisted: bool

    @property
    def count(self) -> int:
        return len(self.tools)


def triage(answers_by_tool: Mapping[str, Mapping[str, Answer]],
           min_agreement: int = 2) -> list[TriageEntry]:
    """Cross-tool agreement per flow: candidates for manual confirmation.

    Flows reported by at least min_agreement tools for the same case are
    shortlisted; confirming them stays a human decision.
    """
    found: dict[tuple[str, Flow], set[str]] = {}
    for tool, per_case in answers_by_tool.items():
        for case_id, answer in per_case.items():
            for flow in answer.flows:
                found.setdefault((case_id, flow), set()).add(tool)
    entries = [
        TriageEntry(case_id, flow, tuple(sorted(tools)),
                    shortlisted=len(tools) >= min_agreement)
        for (case_id, flow), tools in found.items()
    ]
    entries.sort(key=lambda e: (-e.count, e.case_id, flow_sort_key(e.flow)))
    return entries


def triage_to_dict(entries: Sequence[TriageEntry]) -> list[dict]:
    return [{
        "case_id": e.case_id,
        "source": e.flow.source.statement,
        "sink": e.flow.sink.statement,
        "tools": list(e.tools),
        "count": e.count,
        "shortlisted": e.shortlisted,
    } for e in entries]


# --- suite files ---------------------------------------------------------

def _xml_escape(value: str) -> str:
    return (value.replace("&", "&amp;").replace("<", "&lt;")
                 .replace(">", "&gt;").replace('"', "&quot;"))


def write_suite(cases: Sequence[BenchmarkCase],
                sidecars: Optional[Mapping[str, str]] = None) -> bytes:
    """Canonical suite document; equal suites give identical bytes."""
    sidecars = sidecars or {}
    out = ["<benchmark>"]
    for case in cases:
        out.append(f'  <case id="{_xml_escape(case.id)}" '
                   f'polarity="{case.polarity.value}" '
                   f'active="{"true" if case.active else "false"}">')
        out.append("    <apps>")
        for app_id in case.apps:
            sidecar = sidecars.get(app_id)
            attr = (f' sidecar="{_xml_escape(sidecar)}"'
                    if sidecar else "")
            out.append(f'      <app id="{_xml_escape(app_id)}"{attr}/>')
        out.append("    </apps>")
        if case.generated_query is not None or case.expected is not None:
            query_text = print_query(query_for_case(case))
            out.append(f"    <query>{_xml_escape(query_text)}</query>")
        if case.expected is not None:
            out.append("    <expected>")
            out.extend("      " + line
                       for line in answer_lines(case.expected))
            out.append("    </expected>")
        out.append("  </case>")
    out.append("</benchmark>")
    return ("\n".join(out) + "\n").encode("utf-8")


def load_suite(data: bytes) -> tuple[list[BenchmarkCase],
                                     dict[str, Optional[str]]]:
    """Parse a suite document; returns cases plus app id -> sidecar path."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise BenchmarkFormatError(f"not well-formed XML: {exc}") from exc
    if root.tag != "benchmark":
        raise BenchmarkFormatError(
            f"root element must be benchmark, got {root.tag}")
    cases: list[BenchmarkCase] = []
    sidecars: dict[str, Optional[str]] = {}
    seen_ids: set[str] = set()
    for case_elem in root.findall("case"):
        case_id = case_elem.get("id")
        if not case_id:
            raise BenchmarkFormatError("case element needs an id")
        if case_id in seen_ids:
            raise BenchmarkFormatError(f"duplicate case id: {case_id!r}")
        seen_ids.add(case_id)
        polarity_text = case_elem.get("polarity", "positive")
        try:
            polarity = Polarity(polarity_text)
        except ValueError:
            raise BenchmarkFormatError(
                f"case {case_id}: bad polarity {polarity_text!r}") from None
        active_text = case_elem.get("active", "true")
        if active_text not in ("true", "false"):
            raise BenchmarkFormatError(
                f"case {case_id}: bad active flag {active_text!r}")
        apps: list[str] = []
        apps_elem = case_elem.find("apps")
        if apps_elem is not None:
            for app_elem in apps_elem.findall("app"):
                app_id = app_elem.get("id")
                if not app_id:
                    raise BenchmarkFormatError(
                        f"case {case_id}: app element needs an id")
                apps.append(app_id)
                sidecar = app_elem.get("sidecar")
                if sidecar or app_id not in sidecars:
                    sidecars[app_id] = sidecar
        if not apps:
            raise BenchmarkFormatError(f"case {case_id}: no apps")
        query = None
        query_elem = case_elem.find("query")
        if query_elem is not None and (query_elem.text or "").strip():
            query = parse_query(query_elem.text or "")
        expected = None
        expected_elem = case_elem.find("expected")
        if expected_elem is not None:
            answer_elem = expected_elem.find("answer")
            if answer_elem is None:
                raise BenchmarkFormatError(
                    f"case {case_id}: expected element without answer")
            expected = answer_from_element(
                answer_elem, path=f"benchmark/case[{case_id}]/answer")
        try:
            cases.append(BenchmarkCase(
                id=case_id, apps=tuple(apps), expected=expected,
                polarity=polarity, active=(active_text == "true"),
                generated_query=query))
        except ValueError as exc:
            raise BenchmarkFormatError(str(exc)) from exc
    return cases, sidecars
