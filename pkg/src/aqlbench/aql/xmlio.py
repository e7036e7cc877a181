"""Answer XML serialization.

Writing is hand-rolled so the byte form is canonical: fixed element order,
sorted flows and hashes, two-space indent, LF endings, no declaration.
Structurally equal answers always serialize to identical bytes.

Reading goes through ElementTree and is deliberately tolerant: element
order and surrounding whitespace do not matter, unknown elements are
ignored but recorded in provenance notes.  Only genuinely missing required
structure raises.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Iterable, Optional

from aqlbench.aql.model import (
    Answer,
    AppIdentifier,
    Flow,
    Provenance,
    Reference,
    flow_sort_key,
    normalize,
)
from aqlbench.errors import SchemaError
from aqlbench.hashing import Hash


def _escape_text(value: str) -> str:
    return (value.replace("&", "&amp;")
                 .replace("<", "&lt;")
                 .replace(">", "&gt;"))


def _escape_attr(value: str) -> str:
    return _escape_text(value).replace('"', "&quot;")


def _reference_lines(ref: Reference, role: str) -> list[str]:
    lines = [f'<reference type="{role}">']
    if ref.statement is not None:
        lines.append(f"  <statement>{_escape_text(ref.statement)}</statement>")
    if ref.method is not None:
        lines.append(f"  <method>{_escape_text(ref.method)}</method>")
    if ref.classname is not None:
        lines.append(f"  <classname>{_escape_text(ref.classname)}</classname>")
    lines.append("  <app>")
    lines.append(f"    <file>{_escape_text(ref.app.path)}</file>")
    if ref.app.hashes:
        lines.append("    <hashes>")
        for h in ref.app.hashes:
            lines.append(f'      <hash algorithm="{_escape_attr(h.algorithm)}">'
                         f"{_escape_text(h.value)}</hash>")
        lines.append("    </hashes>")
    else:
        lines.append("    <hashes/>")
    lines.append("  </app>")
    lines.append("</reference>")
    return lines


def answer_lines(answer: Answer) -> list[str]:
    """Canonical document as a list of lines, for embedding at any indent."""
    flows = answer.sorted_flows()
    if not flows:
        return ["<answer>", "  <flows/>", "</answer>"]
    lines = ["<answer>", "  <flows>"]
    for flow in flows:
        lines.append("    <flow>")
        for role, ref in (("from", flow.source), ("to", flow.sink)):
            lines.extend("      " + line for line in _reference_lines(ref, role))
        lines.append("    </flow>")
    lines.append("  </flows>")
    lines.append("</answer>")
    return lines


def serialize_answer(answer: Answer) -> bytes:
    return ("\n".join(answer_lines(answer)) + "\n").encode("utf-8")


def _text_of(elem: Optional[ET.Element]) -> str:
    if elem is None:
        return ""
    return normalize("".join(elem.itertext()))


_REF_CHILDREN = {"statement", "method", "classname", "app"}
_APP_CHILDREN = {"file", "hashes"}


def _read_reference(elem: ET.Element, path: str,
                    notes: list[str]) -> Reference:
    app_elem = elem.find("app")
    if app_elem is None:
        raise SchemaError("reference missing app", path)
    file_elem = app_elem.find("file")
    if file_elem is None:
        raise SchemaError("app missing file", path + "/app")
    hashes: list[Hash] = []
    hashes_elem = app_elem.find("hashes")
    if hashes_elem is not None:
        for h in hashes_elem.findall("hash"):
            algorithm = h.get("algorithm", "")
            value = _text_of(h)
            try:
                hashes.append(Hash(algorithm, value))
            except ValueError as exc:
                if algorithm in ("SHA-256", "MD5"):
                    raise SchemaError(str(exc), path + "/app/hashes") from exc
                notes.append(f"ignored hash algorithm: {algorithm}")
    for child in app_elem:
        if child.tag not in _APP_CHILDREN:
            notes.append(f"ignored element: {child.tag}")
    for child in elem:
        if child.tag not in _REF_CHILDREN:
            notes.append(f"ignored element: {child.tag}")

    def part(tag: str) -> Optional[str]:
        child = elem.find(tag)
        return _text_of(child) if child is not None else None

    return Reference(
        app=AppIdentifier(_text_of(file_elem), tuple(hashes)),
        classname=part("classname"),
        method=part("method"),
        statement=part("statement"),
    )


def answer_from_element(root: ET.Element, path: str = "answer") -> Answer:
    if root.tag != "answer":
        raise SchemaError(f"expected answer element, got {root.tag}", path)
    notes: list[str] = []
    flows: set[Flow] = set()
    flows_elem = root.find("flows")
    for child in root:
        if child.tag != "flows":
            notes.append(f"ignored element: {child.tag}")
    if flows_elem is not None:
        for i, flow_elem in enumerate(flows_elem.findall("flow")):
            flow_path = f"{path}/flows/flow[{i + 1}]"
            refs: dict[str, Reference] = {}
            via: list[Reference] = []
            for child in flow_elem:
                if child.tag != "reference":
                    notes.append(f"ignored element: {child.tag}")
                    continue
                role = child.get("type", "")
                ref = _read_reference(
                    child, f"{flow_path}/reference[@type='{role}']", notes)
                if role in ("from", "to"):
                    refs[role] = ref
                elif role == "via":
                    via.append(ref)
                else:
                    notes.append(f"ignored reference type: {role}")
            for role in ("from", "to"):
                if role not in refs:
                    raise SchemaError(f"flow missing {role} reference",
                                      flow_path)
            try:
                flows.add(Flow(refs["from"], refs["to"], tuple(via)))
            except ValueError as exc:
                raise SchemaError(str(exc), flow_path) from exc
        for child in flows_elem:
            if child.tag != "flow":
                notes.append(f"ignored element: {child.tag}")
    return Answer(frozenset(flows),
                  Provenance(notes=tuple(dict.fromkeys(notes))))


def deserialize_answer(data: bytes) -> Answer:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SchemaError(f"not well-formed XML: {exc}") from exc
    return answer_from_element(root)
