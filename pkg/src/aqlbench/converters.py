"""Converters: tool-native raw output to canonical answers.

A converter couples a format parser (raw bytes -> raw flows) with the
shared endpoint resolver that pins each raw endpoint onto a statement of a
context app model.  Exact strictness demands an unambiguous resolution,
where a verbatim statement text that equals exactly one candidate settles
a tie against siblings sharing callee and arity; name-only strictness
matches by invoked method name and fans out over all candidates, recording
the ambiguity.  By construction the exact-mode flow set is a subset of the
name-only set.

Two reference formats ship built in:

  sink-xml     sink-centric XML: each <sink> element lists the <source>
               elements that reach it.
  flow-tuples  line-oriented text: flow((stmt; method; class; app), ...,
               (stmt; method; class; app)) with optional middle tuples as
               intermediate hops; '%' starts a comment line.

Real analysis tools plug in through register_converter; see
docs/raw-formats.md.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from aqlbench.appmodel import (
    AppModel,
    StatementModel,
    StatementRef,
    Strictness,
    call_arity,
    callee_name,
)
from aqlbench.aql.model import (
    Answer,
    AppIdentifier,
    Flow,
    Provenance,
    Reference,
    class_name_matches,
    method_matches,
    normalize,
)
from aqlbench.errors import (
    DuplicateConverterIdError,
    UnknownConverterError,
    UnparsableOutputError,
    UnresolvableEndpointError,
)


@dataclass(frozen=True)
class RawEndpoint:
    """One endpoint as the tool reported it; any field may be missing."""

    statement: Optional[str] = None
    method: Optional[str] = None
    classname: Optional[str] = None
    app: Optional[str] = None

    def __post_init__(self) -> None:
        for attr in ("statement", "method", "classname", "app"):
            value = getattr(self, attr)
            if value is not None:
                value = normalize(value)
                object.__setattr__(self, attr, value if value else None)

    def describe(self) -> str:
        parts = [f"{k}={v!r}" for k, v in (
            ("statement", self.statement), ("method", self.method),
            ("classname", self.classname), ("app", self.app)) if v]
        return ", ".join(parts) if parts else "<empty>"


@dataclass(frozen=True)
class RawFlow:
    source: RawEndpoint
    sink: RawEndpoint
    via: tuple[RawEndpoint, ...] = ()


FormatParser = Callable[[bytes], list[RawFlow]]


@dataclass(frozen=True)
class ConverterSpec:
    id: str
    description: str = ""
    strictness: Strictness = Strictness.EXACT


# --- endpoint resolution -------------------------------------------------

def _app_matches(name: str, model: AppModel) -> bool:
    known = {model.file, model.id, Path(model.file).name}
    if model.source_path:
        known.add(model.source_path)
        known.add(Path(model.source_path).name)
    return name in known or Path(name).name == Path(model.file).name


def _statement_matches(raw: str, stmt: StatementModel,
                       strictness: Strictness) -> bool:
    if stmt.text == raw:
        return True
    raw_callee = callee_name(raw)
    if raw_callee is None or stmt.callee is None or raw_callee != stmt.callee:
        return False
    if strictness is Strictness.NAME_ONLY:
        return True
    raw_arity = call_arity(raw)
    if raw_arity is None or stmt.parameters is None:
        return True
    return raw_arity == len(stmt.parameters)


def _candidates(ep: RawEndpoint, context: list[AppModel],
                strictness: Strictness
                ) -> list[tuple[AppModel, StatementRef]]:
    found: list[tuple[AppModel, StatementRef]] = []
    for model in context:
        if ep.app is not None and not _app_matches(ep.app, model):
            continue
        for ref, stmt in model.statements():
            if ep.classname is not None and not class_name_matches(
                    ep.classname, ref.classname):
                continue
            if ep.method is not None and not method_matches(
                    ep.method, ref.method):
                continue
            if ep.statement is None:
                continue
            if not _statement_matches(ep.statement, stmt, strictness):
                continue
            found.append((model, ref))
    return found


def _narrow_to_literal(ep: RawEndpoint,
                       found: list[tuple[AppModel, StatementRef]]
                       ) -> list[tuple[AppModel, StatementRef]]:
    # a full statement text that equals exactly one candidate wins over
    # siblings that merely share callee and arity
    literal = [(model, ref) for model, ref in found
               if model.statement_at(ref).text == ep.statement]
    return literal if len(literal) == 1 else found


def resolve_endpoint(ep: RawEndpoint, context: list[AppModel],
                     strictness: Strictness,
                     notes: list[str]) -> list[Reference]:
    """All statements the endpoint may denote, as answer references.

    Exact mode insists on exactly one; name-only mode returns every
    candidate and notes the ambiguity.
    """
    if ep.statement is None:
        raise UnresolvableEndpointError(
            f"endpoint without statement: {ep.describe()}")
    found = _candidates(ep, context, strictness)
    if not found:
        raise UnresolvableEndpointError(
            f"no statement in context matches {ep.describe()}")
    if strictness is Strictness.EXACT and len(found) > 1:
        found = _narrow_to_literal(ep, found)
    if strictness is Strictness.EXACT and len(found) > 1:
        raise UnresolvableEndpointError(
            f"{len(found)} statements match {ep.describe()}; "
            f"exact mode refuses to guess")
    if len(found) > 1:
        notes.append(f"ambiguous endpoint ({ep.describe()}): "
                     f"{len(found)} candidates")
    return [model.to_reference(ref) for model, ref in found]


def _via_reference(ep: RawEndpoint, context: list[AppModel]) -> Reference:
    # intermediate hops are display metadata; resolve when unambiguous,
    # otherwise keep the literal text
    if ep.statement is not None:
        found = _candidates(ep, context, Strictness.EXACT)
        if len(found) > 1:
            found = _narrow_to_literal(ep, found)
        if len(found) == 1:
            model, ref = found[0]
            return model.to_reference(ref)
    return Reference(
        app=AppIdentifier(ep.app or "*"),
        classname=ep.classname,
        method=ep.method,
        statement=ep.statement or "*",
    )


def resolve_flows(raw_flows: list[RawFlow], context: list[AppModel],
                  strictness: Strictness, tool: str = "") -> Answer:
    notes: list[str] = []
    flows: set[Flow] = set()
    for raw in raw_flows:
        sources = resolve_endpoint(raw.source, context, strictness, notes)
        sinks = resolve_endpoint(raw.sink, context, strictness, notes)
        via = tuple(_via_reference(ep, context) for ep in raw.via)
        for src in sources:
            for dst in sinks:
                flows.add(Flow(src, dst, via))
    return Answer(frozenset(flows),
                  Provenance(tool=tool, notes=tuple(dict.fromkeys(notes))))


# --- registry ------------------------------------------------------------

@dataclass
class ConverterRegistry:
    _converters: dict[str, tuple[ConverterSpec, FormatParser]] = field(
        default_factory=dict)

    def register(self, spec: ConverterSpec, parser: FormatParser) -> None:
        if spec.id in self._converters:
            raise DuplicateConverterIdError(
                f"converter id already registered: {spec.id!r}")
        self._converters[spec.id] = (spec, parser)

    def ids(self) -> list[str]:
        return sorted(self._converters)

    def spec(self, converter_id: str) -> ConverterSpec:
        return self._lookup(converter_id)[0]

    def _lookup(self, converter_id: str) -> tuple[ConverterSpec, FormatParser]:
        try:
            return self._converters[converter_id]
        except KeyError:
            raise UnknownConverterError(
                f"unknown converter: {converter_id!r}") from None

    def convert(self, converter_id: str, raw: bytes,
                context: list[AppModel],
                strictness: Optional[Strictness] = None,
                tool: str = "") -> Answer:
        spec, parser = self._lookup(converter_id)
        effective = strictness if strictness is not None else spec.strictness
        return resolve_flows(parser(raw), context, effective, tool)


# --- built-in format parsers ---------------------------------------------

def _offset_of(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[:line - 1]) + column


def parse_sink_xml(raw: bytes) -> list[RawFlow]:
    """Sink-centric XML: <results><sink ...><source .../></sink></results>."""
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        line, column = exc.position
        raise UnparsableOutputError(f"not well-formed XML: {exc}",
                                    _offset_of(raw, line, column)) from exc
    if root.tag != "results":
        raise UnparsableOutputError(
            f"root element must be results, got {root.tag}", 0)

    def endpoint(elem: ET.Element) -> RawEndpoint:
        return RawEndpoint(
            statement=elem.get("statement"),
            method=elem.get("method"),
            classname=elem.get("classname"),
            app=elem.get("app"),
        )

    flows: list[RawFlow] = []
    for sink_elem in root.findall("sink"):
        sink = endpoint(sink_elem)
        for source_elem in sink_elem.findall("source"):
            flows.append(RawFlow(endpoint(source_elem), sink))
    return flows


def _split_top_level(text: str, sep: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        if c == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(c)
    parts.append("".join(current))
    return parts


def _parse_tuple(text: str, line_no: int, offset: int) -> RawEndpoint:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise UnparsableOutputError(
            f"line {line_no}: endpoint tuple must be parenthesized", offset)
    fields = [f.strip() for f in _split_top_level(text[1:-1], ";")]
    if len(fields) > 4:
        raise UnparsableOutputError(
            f"line {line_no}: endpoint tuple has {len(fields)} fields, "
            f"at most 4 allowed", offset)
    fields += [""] * (4 - len(fields))
    return RawEndpoint(
        statement=fields[0] or None,
        method=fields[1] or None,
        classname=fields[2] or None,
        app=fields[3] or None,
    )


def parse_flow_tuples(raw: bytes) -> list[RawFlow]:
    """Tuple text: flow((stmt; method; class; app), ..., (...))."""
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnparsableOutputError("not valid UTF-8", exc.start) from exc
    flows: list[RawFlow] = []
    offset = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        line_offset = offset
        offset += len(line.encode("utf-8")) + 1
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        if not (stripped.startswith("flow(") and stripped.endswith(")")):
            raise UnparsableOutputError(
                f"line {line_no}: expected flow(...)", line_offset)
        body = stripped[len("flow("):-1]
        tuples = [
            _parse_tuple(part, line_no, line_offset)
            for part in _split_top_level(body, ",")
        ]
        if len(tuples) < 2:
            raise UnparsableOutputError(
                f"line {line_no}: flow needs at least source and sink "
                f"tuples", line_offset)
        flows.append(RawFlow(tuples[0], tuples[-1], tuple(tuples[1:-1])))
    return flows


def default_registry() -> ConverterRegistry:
    registry = ConverterRegistry()
    registry.register(
        ConverterSpec("sink-xml", "sink-centric XML results"),
        parse_sink_xml)
    registry.register(
        ConverterSpec("flow-tuples", "parenthesized flow tuple text"),
        parse_flow_tuples)
    return registry
