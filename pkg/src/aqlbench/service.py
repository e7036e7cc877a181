"""Session service behind the refinement wizard.

All state lives in a session directory: uploaded sidecars under apps/
and an append-only JSONL journal.  Every mutation is an event; applying
the journal from the start reproduces the session exactly.  Run results
are embedded in their event, so replay never re-launches tools.

The HTTP layer is a thin JSON wrapper over the Session class; the CLI
drives the very same class, which is what makes an API-driven session
and a CLI-driven session produce byte-identical benchmark files.
"""

from __future__ import annotations

import errno
import hashlib
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional
from urllib.parse import unquote

from aqlbench.appmodel import (
    AppModel,
    Candidate,
    Kind,
    StatementRef,
    Strictness,
    ingest_bytes,
    scan_candidates,
    parse_source_sink_list,
    SourceSinkList,
)
from aqlbench.aql.model import Answer
from aqlbench.aql.printer import print_query
from aqlbench.aql.xmlio import deserialize_answer, serialize_answer
from aqlbench.bench import (
    BenchmarkCase,
    Group,
    Polarity,
    SourceSinkSelection,
    build_selection,
    export_report,
    generate_pairs,
    identify_cases,
    match_flows,
    query_for_case,
    report_from_json,
    report_to_dict,
    run_benchmark,
    write_suite,
)
from aqlbench.dispatch import load_config
from aqlbench.errors import AqlBenchError, PortInUseError, SessionError
from aqlbench.report import graph_document


def candidate_id(candidate: Candidate) -> str:
    ref = candidate.ref
    material = "|".join([ref.app_id, ref.classname, ref.method,
                         str(ref.index), candidate.kind.value])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


def _ref_to_doc(ref: StatementRef, kind: Kind) -> dict:
    return {"app": ref.app_id, "classname": ref.classname,
            "method": ref.method, "index": ref.index, "kind": kind.value}


def _ref_from_doc(doc: dict) -> tuple[StatementRef, Kind]:
    try:
        ref = StatementRef(doc["app"], doc["classname"], doc["method"],
                           int(doc["index"]))
        kind = Kind(doc["kind"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionError(f"bad statement reference: {exc}") from exc
    return ref, kind


class Session:
    """Journal-backed wizard state; one directory per session."""

    def __init__(self, directory: str | Path,
                 config_path: Optional[str] = None):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "apps").mkdir(exist_ok=True)
        self.journal_path = self.dir / "journal.jsonl"
        self.config_path = config_path
        self.lock = threading.RLock()

        self.apps: dict[str, AppModel] = {}
        self.app_formats: dict[str, str] = {}
        self.susi: Optional[SourceSinkList] = None
        self.candidates: list[Candidate] = []
        self.selected: dict[tuple[StatementRef, Kind], bool] = {}
        self.groups: list[Group] = []
        self.cases: dict[str, BenchmarkCase] = {}
        self.report_doc: Optional[dict] = None
        self.answers: dict[str, Answer] = {}
        self.last_strictness: Strictness = Strictness.EXACT

        if self.journal_path.is_file():
            self._replay()

    # -- journal plumbing --------------------------------------------------

    def _replay(self) -> None:
        with self.journal_path.open("r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SessionError(
                        f"journal line {line_no} is not valid JSON: "
                        f"{exc}") from exc
                self._apply(event)

    def _record(self, event: dict) -> None:
        """Apply an event, then append it; both under the session lock."""
        with self.lock:
            self._apply(event)
            with self.journal_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, sort_keys=True) + "\n")

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        handler = getattr(self, f"_apply_{kind}", None)
        if handler is None:
            raise SessionError(f"unknown journal event: {kind!r}")
        handler(event)

    # -- event application -------------------------------------------------

    def _rescan(self) -> None:
        old_selected = self.selected
        self.candidates = []
        if self.susi is not None:
            for model in self.apps.values():
                self.candidates.extend(scan_candidates(model, self.susi))
        self.selected = {}
        current = set()
        for candidate in self.candidates:
            key = (candidate.ref, candidate.kind)
            current.add(key)
            self.selected[key] = old_selected.get(key, True)
        self.groups = [
            g for g in (self._shrink_group(g, current) for g in self.groups)
            if g is not None
        ]

    @staticmethod
    def _shrink_group(group: Group, keep: set) -> Optional[Group]:
        refs = tuple(r for r in group.refs if (r, group.kind) in keep)
        if not refs:
            return None
        return Group(group.label, refs, group.kind)

    def _apply_app(self, event: dict) -> None:
        doc = event.get("doc")
        if not isinstance(doc, str) or not doc.strip():
            raise SessionError("app event needs a sidecar document")
        data = doc.encode("utf-8")
        apps_dir = self.dir / "apps"
        model = ingest_bytes(data, base_dir=apps_dir)
        if model.id in self.apps:
            raise SessionError(f"app already loaded: {model.id!r}")
        ext = "xml" if data.lstrip().startswith(b"<") else "json"
        stored = apps_dir / f"{model.id}.{ext}"
        stored.write_bytes(data)
        # re-ingest from disk so tools get a real input path
        model = ingest_bytes(data, base_dir=apps_dir,
                             source_path=str(stored))
        self.apps[model.id] = model
        self.app_formats[model.id] = ext
        self._rescan()

    def _apply_susi(self, event: dict) -> None:
        text = event.get("text")
        if not isinstance(text, str):
            raise SessionError("susi event needs list text")
        self.susi = parse_source_sink_list(text)
        self._rescan()

    def _candidate_key(self, doc: dict) -> tuple[StatementRef, Kind]:
        ref, kind = _ref_from_doc(doc)
        if (ref, kind) not in self.selected:
            raise SessionError(f"not a current candidate: "
                               f"{doc.get('app')}/{doc.get('classname')}."
                               f"{doc.get('method')}[{doc.get('index')}]")
        return ref, kind

    def _apply_select(self, event: dict) -> None:
        key = self._candidate_key(event.get("ref") or {})
        selected = bool(event.get("selected"))
        self.selected[key] = selected
        if not selected:
            self._drop_from_groups(key)

    def _drop_from_groups(self, key: tuple[StatementRef, Kind]) -> None:
        ref, kind = key
        updated: list[Group] = []
        for group in self.groups:
            if group.kind is kind and ref in group.refs:
                remaining = tuple(r for r in group.refs if r != ref)
                if remaining:
                    updated.append(Group(group.label, remaining, group.kind))
            else:
                updated.append(group)
        self.groups = updated

    def _apply_bulk_select(self, event: dict) -> None:
        selected = bool(event.get("selected"))
        refs = event.get("refs")
        if refs is None:
            keys = list(self.selected)
        else:
            keys = [self._candidate_key(doc) for doc in refs]
        for key in keys:
            self.selected[key] = selected
            if not selected:
                self._drop_from_groups(key)

    def _apply_group(self, event: dict) -> None:
        label = event.get("label")
        if not isinstance(label, str) or not label.strip():
            raise SessionError("group event needs a label")
        label = label.strip()
        if any(g.label == label for g in self.groups):
            raise SessionError(f"group label already used: {label!r}")
        refs_docs = event.get("refs") or []
        if len(refs_docs) < 1:
            raise SessionError("group needs at least one member")
        keys = [self._candidate_key(doc) for doc in refs_docs]
        kinds = {kind for _, kind in keys}
        if len(kinds) != 1:
            raise SessionError("group members must share one kind")
        kind = kinds.pop()
        for ref, k in keys:
            if not self.selected.get((ref, k)):
                raise SessionError("group members must be selected")
        for group in self.groups:
            if group.kind is kind:
                overlap = set(group.refs) & {ref for ref, _ in keys}
                if overlap:
                    raise SessionError(
                        f"candidate already in group {group.label!r}")
        self.groups.append(Group(label, tuple(ref for ref, _ in keys), kind))

    def _apply_cases_init(self, event: dict) -> None:
        combinations = event.get("combinations") or []
        skeletons = identify_cases(list(self.apps.values()),
                                   [tuple(c) for c in combinations])
        self.cases = {case.id: case for case in skeletons}

    def _apply_cases_pairs(self, event: dict) -> None:
        selection = self.selection()
        pairs = generate_pairs(self.apps, selection)
        self.cases = {case.id: case for case in pairs}

    def _case_for(self, case_id: str) -> BenchmarkCase:
        case = self.cases.get(case_id)
        if case is None:
            raise SessionError(f"no such case: {case_id!r}")
        return case

    def _apply_polarity(self, event: dict) -> None:
        case = self._case_for(event.get("case", ""))
        try:
            polarity = Polarity(event.get("polarity", ""))
        except ValueError:
            raise SessionError(
                f"bad polarity: {event.get('polarity')!r}") from None
        self.cases[case.id] = BenchmarkCase(
            id=case.id, apps=case.apps, expected=case.expected,
            polarity=polarity, active=case.active,
            generated_query=case.generated_query)

    def _apply_active(self, event: dict) -> None:
        case = self._case_for(event.get("case", ""))
        active = bool(event.get("active"))
        self.cases[case.id] = BenchmarkCase(
            id=case.id, apps=case.apps, expected=case.expected,
            polarity=case.polarity, active=active,
            generated_query=case.generated_query)

    def _apply_run(self, event: dict) -> None:
        report = event.get("report")
        answers = event.get("answers")
        if not isinstance(report, dict) or not isinstance(answers, dict):
            raise SessionError("run event needs embedded results")
        try:
            self.last_strictness = Strictness(
                event.get("strictness", "exact"))
        except ValueError:
            raise SessionError(
                f"bad strictness: {event.get('strictness')!r}") from None
        self.report_doc = report
        self.answers = {
            case_id: deserialize_answer(xml.encode("utf-8"))
            for case_id, xml in answers.items()
        }

    # -- derived views ------------------------------------------------------

    def selection(self) -> SourceSinkSelection:
        chosen = [c for c in self.candidates
                  if self.selected.get((c.ref, c.kind))]
        return build_selection(chosen, self.apps, tuple(self.groups))

    def sidecar_map(self) -> dict[str, str]:
        return {app_id: f"apps/{app_id}.{self.app_formats[app_id]}"
                for app_id in self.apps}

    def suite_bytes(self) -> bytes:
        return write_suite(list(self.cases.values()), self.sidecar_map())

    def candidates_doc(self) -> list[dict]:
        label_of: dict[tuple[StatementRef, Kind], str] = {}
        for group in self.groups:
            for ref in group.refs:
                label_of[(ref, group.kind)] = group.label
        docs = []
        for candidate in self.candidates:
            key = (candidate.ref, candidate.kind)
            model = self.apps[candidate.ref.app_id]
            docs.append({
                "id": candidate_id(candidate),
                **_ref_to_doc(candidate.ref, candidate.kind),
                "statement": model.statement_at(candidate.ref).text,
                "selected": self.selected.get(key, False),
                "group": label_of.get(key),
            })
        return docs

    def cases_doc(self) -> list[dict]:
        docs = []
        for case in self.cases.values():
            docs.append({
                "id": case.id,
                "polarity": case.polarity.value,
                "active": case.active,
                "apps": list(case.apps),
                "has_expected": case.expected is not None,
                "query": (print_query(query_for_case(case))
                          if case.expected is not None else None),
            })
        return docs

    def apps_doc(self) -> list[dict]:
        docs = []
        for model in self.apps.values():
            statements = sum(1 for _ in model.statements())
            docs.append({
                "id": model.id,
                "file": model.file,
                "classes": len(model.classes),
                "statements": statements,
                "hashes": [{"algorithm": h.algorithm, "value": h.value}
                           for h in model.hashes],
            })
        return docs

    def session_doc(self) -> dict:
        return {
            "apps": len(self.apps),
            "susi_loaded": self.susi is not None,
            "candidates": len(self.candidates),
            "selected": sum(1 for v in self.selected.values() if v),
            "groups": len(self.groups),
            "cases": len(self.cases),
            "has_report": self.report_doc is not None,
        }

    # -- commands (validate, execute, journal) ------------------------------

    def add_app(self, doc: str) -> dict:
        before = set(self.apps)
        self._record({"event": "app", "doc": doc})
        new_id = next(iter(set(self.apps) - before))
        return {"id": new_id}

    def set_susi(self, text: str) -> dict:
        self._record({"event": "susi", "text": text})
        assert self.susi is not None
        return {"entries": len(self.susi.entries)}

    def _candidate_by_id(self, cid: str) -> Candidate:
        for candidate in self.candidates:
            if candidate_id(candidate) == cid:
                return candidate
        raise SessionError(f"no such candidate: {cid!r}")

    def select_candidate(self, cid: str, selected: bool) -> dict:
        candidate = self._candidate_by_id(cid)
        self._record({"event": "select",
                      "ref": _ref_to_doc(candidate.ref, candidate.kind),
                      "selected": selected})
        return {"id": cid, "selected": selected}

    def bulk_select(self, selected: bool,
                    ids: Optional[list[str]] = None) -> dict:
        refs = None
        if ids is not None:
            refs = [_ref_to_doc(c.ref, c.kind)
                    for c in (self._candidate_by_id(cid) for cid in ids)]
        self._record({"event": "bulk_select", "selected": selected,
                      "refs": refs})
        count = len(refs) if refs is not None else len(self.candidates)
        return {"selected": selected, "count": count}

    def add_group(self, label: str, ids: list[str]) -> dict:
        members = [self._candidate_by_id(cid) for cid in ids]
        self._record({
            "event": "group", "label": label,
            "refs": [_ref_to_doc(c.ref, c.kind) for c in members],
        })
        return {"label": label, "members": len(members)}

    def init_cases(self, combinations: Optional[list[list[str]]] = None
                   ) -> dict:
        self._record({"event": "cases_init",
                      "combinations": combinations or []})
        return {"cases": len(self.cases)}

    def pair_cases(self) -> dict:
        self._record({"event": "cases_pairs"})
        return {"cases": len(self.cases)}

    def set_polarity(self, case_id: str, polarity: str) -> dict:
        self._record({"event": "polarity", "case": case_id,
                      "polarity": polarity})
        return {"id": case_id, "polarity": polarity}

    def set_active(self, case_id: str, active: bool) -> dict:
        self._record({"event": "active", "case": case_id, "active": active})
        return {"id": case_id, "active": active}

    def run(self, strictness: str = "exact") -> dict:
        if self.config_path is None:
            raise SessionError("no tool configuration: start with --config "
                               "or set AQL_CONFIG")
        try:
            mode = Strictness(strictness)
        except ValueError:
            raise SessionError(f"bad strictness: {strictness!r}") from None
        config = load_config(self.config_path)
        cases = list(self.cases.values())
        selection = self.selection() if self.candidates else None
        report, answers = run_benchmark(cases, config, self.apps,
                                        selection, mode)
        event = {
            "event": "run",
            "strictness": mode.value,
            "config": str(self.config_path),
            "report": report_to_dict(report),
            "answers": {
                case_id: serialize_answer(answer).decode("utf-8")
                for case_id, (answer, _run) in answers.items()
            },
        }
        self._record(event)
        assert self.report_doc is not None
        return self.report_doc

    # -- report views -------------------------------------------------------

    def report(self) -> dict:
        if self.report_doc is None:
            raise SessionError("no report yet: run the benchmark first")
        return self.report_doc

    def graph(self, case_id: str) -> dict:
        self.report()
        case = self._case_for(case_id)
        answer = self.answers.get(case_id)
        matched = None
        if answer is not None and case.expected is not None:
            selection = self.selection() if self.candidates else None
            matched = match_flows(case.expected, answer, selection,
                                  self.last_strictness, self.apps)
        return graph_document(case, answer, matched)

    def export(self, fmt: str) -> bytes:
        doc = self.report()
        report = report_from_json(json.dumps(doc).encode("utf-8"))
        return export_report(report, fmt)


# --- HTTP layer ----------------------------------------------------------

_ROUTES: list[tuple[str, re.Pattern, str]] = [
    ("GET", re.compile(r"^/session$"), "session"),
    ("GET", re.compile(r"^/apps$"), "get_apps"),
    ("POST", re.compile(r"^/apps$"), "post_apps"),
    ("POST", re.compile(r"^/susi$"), "post_susi"),
    ("GET", re.compile(r"^/candidates$"), "get_candidates"),
    ("POST", re.compile(r"^/candidates/bulk$"), "post_bulk"),
    ("POST", re.compile(r"^/candidates/(?P<cid>[0-9a-f]+)/select$"),
     "post_select"),
    ("POST", re.compile(r"^/groups$"), "post_groups"),
    ("GET", re.compile(r"^/cases$"), "get_cases"),
    ("POST", re.compile(r"^/cases$"), "post_cases"),
    ("POST", re.compile(r"^/cases/(?P<case_id>[^/]+)/polarity$"),
     "post_polarity"),
    ("POST", re.compile(r"^/cases/(?P<case_id>[^/]+)/active$"),
     "post_active"),
    ("POST", re.compile(r"^/run$"), "post_run"),
    ("GET", re.compile(r"^/report$"), "get_report"),
    ("GET", re.compile(r"^/report/graph/(?P<case_id>[^/]+)$"), "get_graph"),
    ("GET", re.compile(r"^/export$"), "get_export"),
    ("GET", re.compile(r"^/benchmark$"), "get_benchmark"),
]

_CONTENT_TYPES = {
    "json": "application/json",
    "csv": "text/csv; charset=utf-8",
    "sql": "text/plain; charset=utf-8",
}

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".map": "application/json",
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "aqlbench"
    session: Session
    ui_dir: Optional[Path] = None

    def log_message(self, fmt: str, *args: Any) -> None:  # quiet by default
        pass

    # -- plumbing ----------------------------------------------------------

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, doc: Any) -> None:
        body = (json.dumps(doc, sort_keys=True) + "\n").encode("utf-8")
        self._send(status, body, "application/json")

    def _send_error_doc(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SessionError(f"request body is not valid JSON: {exc}") \
                from exc
        if not isinstance(doc, dict):
            raise SessionError("request body must be a JSON object")
        return doc

    def do_OPTIONS(self) -> None:  # CORS preflight for the dev server
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods",
                         "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def _dispatch(self, method: str) -> None:
        path, _, query = self.path.partition("?")
        for route_method, pattern, name in _ROUTES:
            if route_method != method:
                continue
            match = pattern.match(path)
            if match:
                kwargs = {k: unquote(v)
                          for k, v in match.groupdict().items()}
                try:
                    getattr(self, f"_h_{name}")(query, **kwargs)
                except SessionError as exc:
                    status = 404 if "no such" in str(exc) else 400
                    self._send_error_doc(status, "session", str(exc))
                except AqlBenchError as exc:
                    self._send_error_doc(400, type(exc).__name__, str(exc))
                return
        if method == "GET" and self._serve_static(path):
            return
        self._send_error_doc(404, "not_found", f"no route for {path}")

    def _serve_static(self, path: str) -> bool:
        if self.ui_dir is None:
            return False
        relative = path.lstrip("/") or "index.html"
        target = (self.ui_dir / relative).resolve()
        try:
            target.relative_to(self.ui_dir.resolve())
        except ValueError:
            return False
        if not target.is_file():
            return False
        content_type = _STATIC_TYPES.get(target.suffix,
                                         "application/octet-stream")
        self._send(200, target.read_bytes(), content_type)
        return True

    # -- handlers ----------------------------------------------------------

    def _h_session(self, query: str) -> None:
        self._send_json(200, self.session.session_doc())

    def _h_get_apps(self, query: str) -> None:
        self._send_json(200, self.session.apps_doc())

    def _h_post_apps(self, query: str) -> None:
        body = self._read_body()
        doc = body.get("doc")
        if not isinstance(doc, str):
            raise SessionError("body needs a 'doc' field with the sidecar")
        self._send_json(201, self.session.add_app(doc))

    def _h_post_susi(self, query: str) -> None:
        body = self._read_body()
        text = body.get("text")
        if not isinstance(text, str):
            raise SessionError("body needs a 'text' field with the list")
        self._send_json(200, self.session.set_susi(text))

    def _h_get_candidates(self, query: str) -> None:
        self._send_json(200, self.session.candidates_doc())

    def _h_post_select(self, query: str, cid: str) -> None:
        body = self._read_body()
        self._send_json(200, self.session.select_candidate(
            cid, bool(body.get("selected", True))))

    def _h_post_bulk(self, query: str) -> None:
        body = self._read_body()
        ids = body.get("ids")
        if ids is not None and not isinstance(ids, list):
            raise SessionError("'ids' must be a list or omitted")
        self._send_json(200, self.session.bulk_select(
            bool(body.get("selected", True)), ids))

    def _h_post_groups(self, query: str) -> None:
        body = self._read_body()
        label = body.get("label")
        ids = body.get("ids")
        if not isinstance(label, str) or not isinstance(ids, list):
            raise SessionError("body needs 'label' and 'ids'")
        self._send_json(201, self.session.add_group(label, ids))

    def _h_get_cases(self, query: str) -> None:
        self._send_json(200, self.session.cases_doc())

    def _h_post_cases(self, query: str) -> None:
        body = self._read_body()
        action = body.get("action")
        if action == "init":
            combos = body.get("combinations")
            if combos is not None and not isinstance(combos, list):
                raise SessionError("'combinations' must be a list")
            self._send_json(200, self.session.init_cases(combos))
        elif action == "pairs":
            self._send_json(200, self.session.pair_cases())
        else:
            raise SessionError("body needs action 'init' or 'pairs'")

    def _h_post_polarity(self, query: str, case_id: str) -> None:
        body = self._read_body()
        self._send_json(200, self.session.set_polarity(
            case_id, str(body.get("polarity", ""))))

    def _h_post_active(self, query: str, case_id: str) -> None:
        body = self._read_body()
        self._send_json(200, self.session.set_active(
            case_id, bool(body.get("active", True))))

    def _h_post_run(self, query: str) -> None:
        body = self._read_body()
        self._send_json(200, self.session.run(
            str(body.get("strictness", "exact"))))

    def _h_get_report(self, query: str) -> None:
        try:
            self._send_json(200, self.session.report())
        except SessionError as exc:
            self._send_error_doc(404, "no_report", str(exc))

    def _h_get_graph(self, query: str, case_id: str) -> None:
        try:
            self._send_json(200, self.session.graph(case_id))
        except SessionError as exc:
            status = 404 if ("no such" in str(exc)
                             or "no report" in str(exc)) else 400
            self._send_error_doc(status, "graph", str(exc))

    def _h_get_export(self, query: str) -> None:
        params = dict(pair.split("=", 1) for pair in query.split("&")
                      if "=" in pair)
        fmt = params.get("format", "json")
        if fmt not in _CONTENT_TYPES:
            raise SessionError(f"unknown export format: {fmt!r}")
        try:
            body = self.session.export(fmt)
        except SessionError as exc:
            self._send_error_doc(404, "no_report", str(exc))
            return
        self._send(200, body, _CONTENT_TYPES[fmt])

    def _h_get_benchmark(self, query: str) -> None:
        self._send(200, self.session.suite_bytes(),
                   "application/xml; charset=utf-8")


def make_server(session: Session, host: str = "127.0.0.1", port: int = 8765,
                ui_dir: Optional[str | Path] = None) -> ThreadingHTTPServer:
    handler = type("SessionHandler", (_Handler,), {
        "session": session,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    try:
        return ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUseError(f"port {port} is already in use") from exc
        raise


def serve(session: Session, host: str = "127.0.0.1", port: int = 8765,
          ui_dir: Optional[str | Path] = None) -> None:
    server = make_server(session, host, port, ui_dir)
    try:
        server.serve_forever()
    finally:
        server.server_close()
