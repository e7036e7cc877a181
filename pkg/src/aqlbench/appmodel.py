"""Normalized app representation ingested from sidecar documents.

A sidecar describes one app: its classes, methods and statements plus the
manifest intent-filters.  XML and JSON carry the same structure and both
are accepted; the first non-space byte decides the format.  Hashes come
from the referenced .apk when it exists next to the sidecar, otherwise
from the sidecar bytes themselves, and the origin is recorded.
"""

from __future__ import annotations

import enum
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from aqlbench.aql.model import (
    AppIdentifier,
    Reference,
    call_arity,
    callee_name,
    normalize,
)
from aqlbench.errors import (
    DuplicateClassError,
    MalformedSidecarError,
    MissingFileError,
    SourceSinkListError,
)
from aqlbench.hashing import Hash, hash_pair
from aqlbench.intents import DataSpec, IntentFilter


class Strictness(enum.Enum):
    """How forgiving endpoint and candidate matching is.

    EXACT compares parameter signatures where both sides have them;
    NAME_ONLY compares invoked method names alone and over-approximates.
    """

    EXACT = "exact"
    NAME_ONLY = "name-only"


class Kind(enum.Enum):
    SOURCE = "source"
    SINK = "sink"


@dataclass(frozen=True)
class StatementModel:
    text: str
    callee: Optional[str] = None
    parameters: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", normalize(self.text))
        if self.callee is not None:
            callee = normalize(self.callee)
            object.__setattr__(self, "callee", callee)
            if callee not in self.text:
                raise ValueError(
                    f"callee {callee!r} does not occur in statement text")
        if self.parameters is not None:
            object.__setattr__(
                self, "parameters",
                tuple(normalize(p) for p in self.parameters))


@dataclass(frozen=True)
class MethodModel:
    signature: str
    statements: tuple[StatementModel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "signature", normalize(self.signature))
        object.__setattr__(self, "statements", tuple(self.statements))

    @property
    def name(self) -> str:
        return self.signature.split("(", 1)[0].strip()

    @property
    def param_text(self) -> Optional[str]:
        head, sep, tail = self.signature.partition("(")
        if not sep:
            return None
        return tail.rsplit(")", 1)[0]


@dataclass(frozen=True)
class ClassModel:
    name: str
    methods: tuple[MethodModel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", normalize(self.name))
        object.__setattr__(self, "methods", tuple(self.methods))
        seen: set[str] = set()
        for method in self.methods:
            if method.signature in seen:
                raise MalformedSidecarError(
                    f"duplicate method {method.signature!r} "
                    f"in class {self.name}")
            seen.add(method.signature)


@dataclass(frozen=True)
class StatementRef:
    """Stable statement identity: position inside the app, not text."""

    app_id: str
    classname: str
    method: str
    index: int

    def sort_key(self):
        return (self.app_id, self.classname, self.method, self.index)


@dataclass(frozen=True)
class Candidate:
    ref: StatementRef
    kind: Kind


@dataclass(frozen=True)
class AppModel:
    id: str
    file: str
    hashes: tuple[Hash, ...]
    classes: tuple[ClassModel, ...] = ()
    intent_filters: tuple[IntentFilter, ...] = ()
    declared_api_level: Optional[int] = None
    hash_origin: str = "sidecar"   # "apk" | "sidecar"
    source_path: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hashes", tuple(sorted(set(self.hashes))))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "intent_filters",
                           tuple(self.intent_filters))
        seen: set[str] = set()
        for cls in self.classes:
            if cls.name in seen:
                raise DuplicateClassError(
                    f"duplicate class {cls.name!r} in app {self.id}")
            seen.add(cls.name)

    def identifier(self) -> AppIdentifier:
        return AppIdentifier(self.file, self.hashes)

    def find_class(self, name: str) -> Optional[ClassModel]:
        for cls in self.classes:
            if cls.name == name:
                return cls
        return None

    def statements(self) -> Iterator[tuple[StatementRef, StatementModel]]:
        """All statements in deterministic source order."""
        for cls in self.classes:
            for method in cls.methods:
                for i, stmt in enumerate(method.statements):
                    yield (StatementRef(self.id, cls.name,
                                        method.signature, i), stmt)

    def statement_at(self, ref: StatementRef) -> StatementModel:
        cls = self.find_class(ref.classname)
        if cls is None:
            raise KeyError(f"no class {ref.classname!r} in app {self.id}")
        for method in cls.methods:
            if method.signature == ref.method:
                try:
                    return method.statements[ref.index]
                except IndexError:
                    raise KeyError(
                        f"statement index {ref.index} out of range "
                        f"in {ref.classname}.{ref.method}") from None
        raise KeyError(f"no method {ref.method!r} in class {ref.classname}")

    def to_reference(self, ref: StatementRef) -> Reference:
        stmt = self.statement_at(ref)
        return Reference(
            app=self.identifier(),
            classname=ref.classname,
            method=ref.method,
            statement=stmt.text,
        )


# --- sidecar parsing -----------------------------------------------------

def _intent_filter_from_xml(elem: ET.Element, app_id: str) -> IntentFilter:
    owner_class = elem.get("class", "")
    actions = frozenset(a.get("name", "")
                        for a in elem.findall("action") if a.get("name"))
    categories = frozenset(c.get("name", "")
                           for c in elem.findall("category") if c.get("name"))
    specs = []
    for d in elem.findall("data"):
        try:
            specs.append(DataSpec(
                scheme=d.get("scheme"),
                authority=d.get("authority"),
                path_pattern=d.get("path"),
                mime_pattern=d.get("mime"),
            ))
        except ValueError as exc:
            raise MalformedSidecarError(f"bad data spec: {exc}") from exc
    return IntentFilter(actions, categories, tuple(specs),
                        (app_id, owner_class))


def _statement_from_xml(elem: ET.Element) -> StatementModel:
    text_elem = elem.find("text")
    if text_elem is None or not (text_elem.text or "").strip():
        raise MalformedSidecarError("statement without text")
    params = [normalize(p.text or "") for p in elem.findall("parameter")]
    # distinguish "no parameter elements" (unknown) from an empty list:
    # a statement that is a call with zero arguments says arity="0".
    parameters: Optional[tuple[str, ...]]
    if params:
        parameters = tuple(params)
    elif elem.get("arity") == "0":
        parameters = ()
    else:
        parameters = None
    try:
        return StatementModel(text=text_elem.text or "",
                              callee=elem.get("callee"),
                              parameters=parameters)
    except ValueError as exc:
        raise MalformedSidecarError(str(exc)) from exc


def _model_from_xml(root: ET.Element) -> AppModel:
    if root.tag != "app":
        raise MalformedSidecarError(f"root element must be app, "
                                    f"got {root.tag}")
    app_id = root.get("id")
    file_attr = root.get("file")
    if not app_id or not file_attr:
        raise MalformedSidecarError("app element needs id and file")
    api_text = root.get("api-level")
    api_level = None
    if api_text is not None:
        try:
            api_level = int(api_text)
        except ValueError:
            raise MalformedSidecarError(
                f"api-level must be an integer, got {api_text!r}") from None

    filters = []
    filters_elem = root.find("intent-filters")
    if filters_elem is not None:
        filters = [_intent_filter_from_xml(f, app_id)
                   for f in filters_elem.findall("intent-filter")]

    classes = []
    classes_elem = root.find("classes")
    if classes_elem is not None:
        for cls_elem in classes_elem.findall("class"):
            name = cls_elem.get("name")
            if not name:
                raise MalformedSidecarError("class element needs a name")
            methods = []
            methods_elem = cls_elem.find("methods")
            if methods_elem is not None:
                for m_elem in methods_elem.findall("method"):
                    signature = m_elem.get("signature")
                    if not signature:
                        raise MalformedSidecarError(
                            f"method in class {name} needs a signature")
                    stmts = []
                    stmts_elem = m_elem.find("statements")
                    if stmts_elem is not None:
                        stmts = [_statement_from_xml(s)
                                 for s in stmts_elem.findall("statement")]
                    methods.append(MethodModel(signature, tuple(stmts)))
            classes.append(ClassModel(name, tuple(methods)))

    return AppModel(id=app_id, file=file_attr, hashes=(),
                    classes=tuple(classes), intent_filters=tuple(filters),
                    declared_api_level=api_level)


def _model_from_json(doc: dict) -> AppModel:
    if not isinstance(doc, dict):
        raise MalformedSidecarError("top-level JSON value must be an object")
    app_id = doc.get("id")
    file_attr = doc.get("file")
    if not app_id or not file_attr:
        raise MalformedSidecarError("app object needs id and file")
    api_level = doc.get("api_level")
    if api_level is not None and not isinstance(api_level, int):
        raise MalformedSidecarError("api_level must be an integer")

    filters = []
    for f in doc.get("intent_filters", []):
        try:
            specs = tuple(DataSpec(
                scheme=d.get("scheme"),
                authority=d.get("authority"),
                path_pattern=d.get("path"),
                mime_pattern=d.get("mime"),
            ) for d in f.get("data", []))
        except ValueError as exc:
            raise MalformedSidecarError(f"bad data spec: {exc}") from exc
        filters.append(IntentFilter(
            actions=frozenset(f.get("actions", [])),
            categories=frozenset(f.get("categories", [])),
            data_specs=specs,
            owner=(app_id, f.get("class", "")),
        ))

    classes = []
    for cls in doc.get("classes", []):
        name = cls.get("name")
        if not name:
            raise MalformedSidecarError("class object needs a name")
        methods = []
        for m in cls.get("methods", []):
            signature = m.get("signature")
            if not signature:
                raise MalformedSidecarError(
                    f"method in class {name} needs a signature")
            stmts = []
            for s in m.get("statements", []):
                text = s.get("text")
                if not text or not str(text).strip():
                    raise MalformedSidecarError("statement without text")
                params = s.get("parameters")
                parameters = tuple(params) if params is not None else None
                try:
                    stmts.append(StatementModel(
                        text=text, callee=s.get("callee"),
                        parameters=parameters))
                except ValueError as exc:
                    raise MalformedSidecarError(str(exc)) from exc
            methods.append(MethodModel(signature, tuple(stmts)))
        classes.append(ClassModel(name, tuple(methods)))

    return AppModel(id=app_id, file=file_attr, hashes=(),
                    classes=tuple(classes), intent_filters=tuple(filters),
                    declared_api_level=api_level)


def ingest_bytes(data: bytes, *, base_dir: Optional[Path] = None,
                 strict: bool = False,
                 source_path: Optional[str] = None) -> AppModel:
    """Parse sidecar bytes into an AppModel; see ingest_app."""
    stripped = data.lstrip()
    if not stripped:
        raise MalformedSidecarError("empty sidecar document")
    if stripped.startswith(b"<"):
        try:
            root = ET.fromstring(data)
        except ET.ParseError as exc:
            raise MalformedSidecarError(f"not well-formed XML: {exc}") from exc
        model = _model_from_xml(root)
    else:
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedSidecarError(f"not valid JSON: {exc}") from exc
        model = _model_from_json(doc)

    apk_path = Path(model.file)
    if not apk_path.is_absolute() and base_dir is not None:
        apk_path = base_dir / apk_path
    if apk_path.is_file():
        hashes = hash_pair(apk_path.read_bytes())
        origin = "apk"
    else:
        if strict:
            raise MissingFileError(f"referenced file not found: {apk_path}")
        hashes = hash_pair(data)
        origin = "sidecar"

    return AppModel(
        id=model.id, file=model.file, hashes=hashes,
        classes=model.classes, intent_filters=model.intent_filters,
        declared_api_level=model.declared_api_level,
        hash_origin=origin, source_path=source_path,
    )


def ingest_app(path: str | Path, *, strict: bool = False) -> AppModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MalformedSidecarError(f"cannot read {path}: {exc}") from exc
    return ingest_bytes(data, base_dir=path.parent, strict=strict,
                        source_path=str(path))


# --- sidecar writing -----------------------------------------------------

def _xml_escape(value: str) -> str:
    return (value.replace("&", "&amp;").replace("<", "&lt;")
                 .replace(">", "&gt;").replace('"', "&quot;"))


def write_sidecar_xml(model: AppModel) -> bytes:
    """Canonical XML sidecar for a model; inverse of XML ingestion."""
    out = [f'<app id="{_xml_escape(model.id)}" '
           f'file="{_xml_escape(model.file)}"'
           + (f' api-level="{model.declared_api_level}"'
              if model.declared_api_level is not None else "")
           + ">"]
    if model.intent_filters:
        out.append("  <intent-filters>")
        for filt in model.intent_filters:
            out.append(f'    <intent-filter class='
                       f'"{_xml_escape(filt.owner[1])}">')
            for action in sorted(filt.actions):
                out.append(f'      <action name="{_xml_escape(action)}"/>')
            for category in sorted(filt.categories):
                out.append(f'      <category name="{_xml_escape(category)}"/>')
            for spec in filt.data_specs:
                attrs = []
                for attr, name in (("scheme", "scheme"),
                                   ("authority", "authority"),
                                   ("path_pattern", "path"),
                                   ("mime_pattern", "mime")):
                    value = getattr(spec, attr)
                    if value is not None:
                        attrs.append(f'{name}="{_xml_escape(value)}"')
                out.append("      <data " + " ".join(attrs) + "/>")
            out.append("    </intent-filter>")
        out.append("  </intent-filters>")
    out.append("  <classes>")
    for cls in model.classes:
        out.append(f'    <class name="{_xml_escape(cls.name)}">')
        out.append("      <methods>")
        for method in cls.methods:
            out.append(f'        <method signature='
                       f'"{_xml_escape(method.signature)}">')
            out.append("          <statements>")
            for stmt in method.statements:
                attrs = ""
                if stmt.callee is not None:
                    attrs += f' callee="{_xml_escape(stmt.callee)}"'
                if stmt.parameters == ():
                    attrs += ' arity="0"'
                out.append(f"            <statement{attrs}>")
                out.append(f"              <text>{_xml_escape(stmt.text)}"
                           f"</text>")
                for param in stmt.parameters or ():
                    out.append(f"              <parameter>"
                               f"{_xml_escape(param)}</parameter>")
                out.append("            </statement>")
            out.append("          </statements>")
            out.append("        </method>")
        out.append("      </methods>")
        out.append("    </class>")
    out.append("  </classes>")
    out.append("</app>")
    return ("\n".join(out) + "\n").encode("utf-8")


def write_sidecar_json(model: AppModel) -> bytes:
    doc: dict = {"id": model.id, "file": model.file}
    if model.declared_api_level is not None:
        doc["api_level"] = model.declared_api_level
    if model.intent_filters:
        doc["intent_filters"] = []
        for filt in model.intent_filters:
            f: dict = {"class": filt.owner[1]}
            if filt.actions:
                f["actions"] = sorted(filt.actions)
            if filt.categories:
                f["categories"] = sorted(filt.categories)
            if filt.data_specs:
                f["data"] = []
                for spec in filt.data_specs:
                    d = {}
                    for attr, name in (("scheme", "scheme"),
                                       ("authority", "authority"),
                                       ("path_pattern", "path"),
                                       ("mime_pattern", "mime")):
                        value = getattr(spec, attr)
                        if value is not None:
                            d[name] = value
                    f["data"].append(d)
            doc["intent_filters"].append(f)
    doc["classes"] = []
    for cls in model.classes:
        methods = []
        for method in cls.methods:
            stmts = []
            for stmt in method.statements:
                s: dict = {"text": stmt.text}
                if stmt.callee is not None:
                    s["callee"] = stmt.callee
                if stmt.parameters is not None:
                    s["parameters"] = list(stmt.parameters)
                stmts.append(s)
            methods.append({"signature": method.signature,
                            "statements": stmts})
        doc["classes"].append({"name": cls.name, "methods": methods})
    return (json.dumps(doc, indent=2, sort_keys=False) + "\n").encode("utf-8")


def combine_apps(models: list[AppModel], out_path: str | Path) -> AppModel:
    """Merge several apps into one combined sidecar and re-ingest it.

    Stands in for an APK combiner: downstream consumers see a single app
    whose class inventory is the concatenation of the inputs.
    """
    if not models:
        raise ValueError("nothing to combine")
    combined_id = "+".join(m.id for m in models)
    classes: list[ClassModel] = []
    filters: list[IntentFilter] = []
    for model in models:
        classes.extend(model.classes)
        for filt in model.intent_filters:
            filters.append(IntentFilter(filt.actions, filt.categories,
                                        filt.data_specs,
                                        (combined_id, filt.owner[1])))
    api_levels = [m.declared_api_level for m in models
                  if m.declared_api_level is not None]
    combined = AppModel(
        id=combined_id,
        file=f"{combined_id}.apk",
        hashes=(),
        classes=tuple(classes),
        intent_filters=tuple(filters),
        declared_api_level=max(api_levels) if api_levels else None,
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(write_sidecar_xml(combined))
    return ingest_app(out_path)


# --- source/sink lists ---------------------------------------------------

@dataclass(frozen=True)
class SourceSinkEntry:
    name: str
    param_types: Optional[tuple[str, ...]]   # None = unspecified
    kind: Kind


@dataclass(frozen=True)
class SourceSinkList:
    entries: tuple[SourceSinkEntry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))


def parse_source_sink_list(text: str) -> SourceSinkList:
    """Parse `name(param-types) -> SOURCE|SINK` lines; `%` comments."""
    entries: list[SourceSinkEntry] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        head, sep, kind_text = line.rpartition("->")
        if not sep:
            raise SourceSinkListError(
                f"line {line_no}: missing '->' separator")
        kind_text = kind_text.strip()
        if kind_text == "SOURCE":
            kind = Kind.SOURCE
        elif kind_text == "SINK":
            kind = Kind.SINK
        else:
            raise SourceSinkListError(
                f"line {line_no}: kind must be SOURCE or SINK, "
                f"got {kind_text!r}")
        sig = head.strip()
        if not sig.endswith(")") or "(" not in sig:
            raise SourceSinkListError(
                f"line {line_no}: entry must be name(param-types)")
        name, _, param_text = sig[:-1].partition("(")
        name = name.strip()
        if not name:
            raise SourceSinkListError(f"line {line_no}: empty method name")
        param_text = param_text.strip()
        if param_text == "...":
            param_types: Optional[tuple[str, ...]] = None
        elif not param_text:
            param_types = ()
        else:
            param_types = tuple(p.strip() for p in param_text.split(","))
        entries.append(SourceSinkEntry(name, param_types, kind))
    return SourceSinkList(tuple(entries))


def load_source_sink_list(path: str | Path) -> SourceSinkList:
    return parse_source_sink_list(Path(path).read_text(encoding="utf-8"))


def _entry_matches(entry: SourceSinkEntry, stmt: StatementModel,
                   strictness: Strictness) -> bool:
    if stmt.callee is None or entry.name != stmt.callee:
        return False
    if strictness is Strictness.NAME_ONLY:
        return True
    if entry.param_types is None or stmt.parameters is None:
        return True
    return len(entry.param_types) == len(stmt.parameters)


def scan_candidates(app: AppModel, susi: SourceSinkList,
                    strictness: Strictness = Strictness.EXACT
                    ) -> list[Candidate]:
    """Mark every statement that calls a listed source or sink."""
    out: list[Candidate] = []
    for ref, stmt in app.statements():
        kinds = {entry.kind for entry in susi.entries
                 if _entry_matches(entry, stmt, strictness)}
        # fixed kind order for statements listed as both
        for kind in (Kind.SOURCE, Kind.SINK):
            if kind in kinds:
                out.append(Candidate(ref, kind))
    return out
