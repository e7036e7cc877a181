"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage error.  Most commands
offer --format json for machine consumption; the default output is
compact text.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from aqlbench import bench as bench_mod
from aqlbench import report as report_mod
from aqlbench import service as service_mod
from aqlbench.appmodel import (
    AppModel,
    Kind,
    Strictness,
    combine_apps,
    ingest_app,
    load_source_sink_list,
    scan_candidates,
)
from aqlbench.aql.model import ast_to_dict
from aqlbench.aql.parser import parse_query
from aqlbench.aql.printer import print_query
from aqlbench.aql.xmlio import deserialize_answer, serialize_answer
from aqlbench.bench import (
    BenchmarkCase,
    Group,
    build_selection,
    evaluate,
    export_report,
    generate_pairs,
    identify_cases,
    load_suite,
    match_flows,
    report_from_json,
    report_to_dict,
    run_benchmark,
    triage,
    triage_to_dict,
    write_suite,
)
from aqlbench.dispatch import execute, load_config
from aqlbench.errors import AqlBenchError


def _config_path(args: argparse.Namespace) -> str:
    path = getattr(args, "config", None) or os.environ.get("AQL_CONFIG")
    if not path:
        raise AqlBenchError(
            "no tool configuration: pass --config or set AQL_CONFIG")
    return path


def _load_config(args: argparse.Namespace):
    config = load_config(_config_path(args))
    slack = getattr(args, "timeout_slack", None)
    if slack is not None:
        config.timeout_slack = slack
    return config


def _strictness(args: argparse.Namespace) -> Strictness:
    return Strictness(getattr(args, "strictness", None) or "exact")


def _emit(args: argparse.Namespace, doc, text: str) -> None:
    if getattr(args, "format", None) == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text)


def _ingest_all(paths: Sequence[str], strict: bool = False
                ) -> dict[str, AppModel]:
    apps: dict[str, AppModel] = {}
    for path in paths:
        model = ingest_app(path, strict=strict)
        if model.id in apps:
            raise AqlBenchError(f"app id loaded twice: {model.id!r}")
        apps[model.id] = model
    return apps


def _suite_apps(suite_path: Path, sidecars: dict[str, Optional[str]],
                apps_dir: Optional[str]) -> dict[str, AppModel]:
    apps: dict[str, AppModel] = {}
    for app_id, sidecar in sidecars.items():
        path: Optional[Path] = None
        if sidecar:
            path = suite_path.parent / sidecar
        elif apps_dir:
            for ext in ("xml", "json"):
                probe = Path(apps_dir) / f"{app_id}.{ext}"
                if probe.is_file():
                    path = probe
                    break
        if path is None or not path.is_file():
            raise AqlBenchError(
                f"no sidecar found for app {app_id!r}; "
                f"add a sidecar attribute or pass --apps-dir")
        model = ingest_app(path)
        if model.id != app_id:
            raise AqlBenchError(
                f"sidecar {path} declares id {model.id!r}, "
                f"suite expects {app_id!r}")
        apps[app_id] = model
    return apps


# --- query ---------------------------------------------------------------

def _cmd_query_parse(args: argparse.Namespace) -> int:
    query = parse_query(args.query)
    _emit(args, ast_to_dict(query), print_query(query))
    return 0


def _cmd_query_run(args: argparse.Namespace) -> int:
    query = parse_query(args.query)
    config = _load_config(args)
    context = tuple(_ingest_all(args.app).values())
    answer, run = execute(query, config, context, _strictness(args))
    xml = serialize_answer(answer).decode("utf-8")
    doc = {
        "tool": run.tool,
        "exit_status": run.exit_status.value,
        "cache_hit": run.cache_hit,
        "wall_time_s": round(run.wall_time, 3),
        "flows": len(answer.flows),
        "answer_xml": xml,
    }
    if run.detail:
        doc["detail"] = run.detail
    text = xml.rstrip("\n")
    if run.exit_status.value != "Success":
        text = (f"run failed: {run.exit_status.value} ({run.detail})\n"
                + text)
    _emit(args, doc, text)
    return 0


# --- app -----------------------------------------------------------------

def _cmd_app_ingest(args: argparse.Namespace) -> int:
    docs = []
    lines = []
    for path in args.sidecar:
        model = ingest_app(path, strict=args.strict)
        statements = sum(1 for _ in model.statements())
        docs.append({
            "id": model.id,
            "file": model.file,
            "classes": len(model.classes),
            "statements": statements,
            "intent_filters": len(model.intent_filters),
            "hash_origin": model.hash_origin,
            "hashes": [{"algorithm": h.algorithm, "value": h.value}
                       for h in model.hashes],
        })
        lines.append(f"{model.id}: {len(model.classes)} classes, "
                     f"{statements} statements, "
                     f"hashes from {model.hash_origin}")
    _emit(args, docs, "\n".join(lines))
    return 0


def _cmd_app_scan(args: argparse.Namespace) -> int:
    susi = load_source_sink_list(args.susi)
    docs = []
    lines = []
    for path in args.sidecar:
        model = ingest_app(path)
        for candidate in scan_candidates(model, susi, _strictness(args)):
            stmt = model.statement_at(candidate.ref)
            docs.append({
                "app": candidate.ref.app_id,
                "classname": candidate.ref.classname,
                "method": candidate.ref.method,
                "index": candidate.ref.index,
                "kind": candidate.kind.value,
                "statement": stmt.text,
            })
            lines.append(f"{candidate.kind.value:6}  "
                         f"{candidate.ref.classname}."
                         f"{candidate.ref.method} [{candidate.ref.index}]  "
                         f"{stmt.text}")
    _emit(args, docs, "\n".join(lines) if lines else "no candidates")
    return 0


def _cmd_app_combine(args: argparse.Namespace) -> int:
    models = list(_ingest_all(args.sidecar).values())
    combined = combine_apps(models, args.out)
    print(f"{combined.id}: {len(combined.classes)} classes -> {args.out}")
    return 0


# --- bench ---------------------------------------------------------------

def _cmd_bench_init(args: argparse.Namespace) -> int:
    apps = _ingest_all(args.sidecar)
    combinations = [combo.split("+") for combo in args.combine or []]
    cases = identify_cases(list(apps.values()), combinations)
    out = Path(args.out)
    sidecars = {}
    for path in args.sidecar:
        model_id = ingest_app(path).id
        sidecars[model_id] = os.path.relpath(
            Path(path).resolve(), out.resolve().parent)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(write_suite(cases, sidecars))
    print(f"{len(cases)} skeleton cases -> {out}")
    return 0


def _parse_group_specs(specs: Sequence[str], candidates, apps) -> list[Group]:
    groups = []
    for spec in specs:
        label, sep, names_text = spec.partition("=")
        if not sep or not label or not names_text:
            raise AqlBenchError(
                f"--group wants label=name1,name2 ..., got {spec!r}")
        names = [n.strip() for n in names_text.split(",") if n.strip()]
        members = []
        kinds = set()
        for name in names:
            hits = []
            for candidate in candidates:
                stmt = apps[candidate.ref.app_id].statement_at(candidate.ref)
                if stmt.callee == name:
                    hits.append(candidate)
            if not hits:
                raise AqlBenchError(
                    f"group {label!r}: no candidate calls {name!r}")
            for hit in hits:
                members.append(hit.ref)
                kinds.add(hit.kind)
        if len(kinds) != 1:
            raise AqlBenchError(
                f"group {label!r}: members mix sources and sinks")
        groups.append(Group(label, tuple(dict.fromkeys(members)),
                            kinds.pop()))
    return groups


def _cmd_bench_pairs(args: argparse.Namespace) -> int:
    apps = _ingest_all(args.sidecar)
    susi = load_source_sink_list(args.susi)
    candidates = []
    for model in apps.values():
        candidates.extend(scan_candidates(model, susi, _strictness(args)))
    groups = _parse_group_specs(args.group or [], candidates, apps)
    selection = build_selection(candidates, apps, groups)
    cases = generate_pairs(apps, selection)
    out = Path(args.out)
    sidecars = {}
    for path in args.sidecar:
        model_id = ingest_app(path).id
        sidecars[model_id] = os.path.relpath(
            Path(path).resolve(), out.resolve().parent)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(write_suite(cases, sidecars))
    print(f"{len(cases)} cases -> {out}")
    return 0


def _metrics_text(report) -> str:
    return (f"tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}\n"
            f"P={float(report.precision):.3f} "
            f"R={float(report.recall):.3f} "
            f"F={float(report.f_measure):.3f}")


def _cmd_bench_run(args: argparse.Namespace) -> int:
    suite_path = Path(args.suite)
    cases, sidecars = load_suite(suite_path.read_bytes())
    apps = _suite_apps(suite_path, sidecars, args.apps_dir)
    config = _load_config(args)
    strictness = _strictness(args)
    report, answers = run_benchmark(cases, config, apps, None, strictness)
    doc = report_to_dict(report)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(export_report(report, "json"))
        if not args.no_figures:
            graphs = {}
            by_id = {case.id: case for case in cases}
            for case_id, (answer, _run) in answers.items():
                case = by_id[case_id]
                matched = match_flows(case.expected, answer, None,
                                      strictness, apps)
                graphs[case_id] = report_mod.graph_document(case, answer,
                                                            matched)
            report_mod.render_report_figures(report, out.parent, graphs)
    _emit(args, doc, _metrics_text(report))
    return 0


def _cmd_bench_eval(args: argparse.Namespace) -> int:
    suite_path = Path(args.suite)
    cases, sidecars = load_suite(suite_path.read_bytes())
    apps = _suite_apps(suite_path, sidecars, args.apps_dir) \
        if args.apps_dir or any(sidecars.values()) else {}
    answers = {}
    answers_dir = Path(args.answers)
    for case in cases:
        if not case.active:
            continue
        answer_path = answers_dir / f"{case.id}.xml"
        if not answer_path.is_file():
            raise AqlBenchError(
                f"no answer file for case {case.id!r}: {answer_path}")
        answers[case.id] = (deserialize_answer(answer_path.read_bytes()),
                            None)
    report = evaluate(cases, answers, None, _strictness(args), apps)
    _emit(args, report_to_dict(report), _metrics_text(report))
    return 0


def _cmd_bench_export(args: argparse.Namespace) -> int:
    report = report_from_json(Path(args.report).read_bytes())
    data = export_report(report, args.to)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(data)
        if not args.no_figures:
            report_mod.render_report_figures(report, out.parent)
        print(f"{args.to} export -> {out}")
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 0


def _cmd_bench_triage(args: argparse.Namespace) -> int:
    suite_path = Path(args.suite)
    cases, _sidecars = load_suite(suite_path.read_bytes())
    answers_by_tool: dict[str, dict[str, object]] = {}
    for spec in args.answers:
        tool, sep, directory = spec.partition("=")
        if not sep:
            raise AqlBenchError(
                f"--answers wants tool=dir, got {spec!r}")
        per_case = {}
        for case in cases:
            path = Path(directory) / f"{case.id}.xml"
            if path.is_file():
                per_case[case.id] = deserialize_answer(path.read_bytes())
        answers_by_tool[tool] = per_case
    entries = triage(answers_by_tool)
    doc = triage_to_dict(entries)
    lines = [
        f"{'*' if e.shortlisted else ' '} {e.count}x {e.case_id}: "
        f"{e.flow.source.statement} -> {e.flow.sink.statement} "
        f"[{', '.join(e.tools)}]"
        for e in entries
    ]
    _emit(args, doc, "\n".join(lines) if lines else "no flows reported")
    return 0


# --- session -------------------------------------------------------------

def _session(args: argparse.Namespace) -> service_mod.Session:
    config = getattr(args, "config", None) or os.environ.get("AQL_CONFIG")
    return service_mod.Session(args.dir, config)


def _cmd_session_app(args: argparse.Namespace) -> int:
    doc = Path(args.sidecar).read_text(encoding="utf-8")
    result = _session(args).add_app(doc)
    print(f"loaded app {result['id']}")
    return 0


def _cmd_session_susi(args: argparse.Namespace) -> int:
    text = Path(args.list).read_text(encoding="utf-8")
    result = _session(args).set_susi(text)
    print(f"{result['entries']} source/sink entries")
    return 0


def _cmd_session_candidates(args: argparse.Namespace) -> int:
    session = _session(args)
    docs = session.candidates_doc()
    lines = [
        f"{d['id']}  {'x' if d['selected'] else ' '} {d['kind']:6} "
        f"{d['classname']}.{d['method']} [{d['index']}] "
        + (f"({d['group']})" if d["group"] else "")
        for d in docs
    ]
    _emit(args, docs, "\n".join(lines) if lines else "no candidates")
    return 0


def _cmd_session_select(args: argparse.Namespace) -> int:
    result = _session(args).select_candidate(args.candidate, not args.off)
    print(f"{result['id']} selected={result['selected']}")
    return 0


def _cmd_session_bulk(args: argparse.Namespace) -> int:
    ids = args.ids.split(",") if args.ids else None
    result = _session(args).bulk_select(not args.off, ids)
    print(f"{result['count']} candidates selected={result['selected']}")
    return 0


def _cmd_session_group(args: argparse.Namespace) -> int:
    result = _session(args).add_group(args.label, args.candidate)
    print(f"group {result['label']} with {result['members']} members")
    return 0


def _cmd_session_cases(args: argparse.Namespace) -> int:
    session = _session(args)
    if args.action == "init":
        combos = [c.split("+") for c in args.combine or []]
        result = session.init_cases(combos)
    elif args.action == "pairs":
        result = session.pair_cases()
    else:
        _emit(args, session.cases_doc(),
              "\n".join(f"{d['id']} [{d['polarity']}"
                        f"{'' if d['active'] else ', inactive'}]"
                        for d in session.cases_doc()) or "no cases")
        return 0
    print(f"{result['cases']} cases")
    return 0


def _cmd_session_polarity(args: argparse.Namespace) -> int:
    _session(args).set_polarity(args.case, args.polarity)
    print(f"{args.case} -> {args.polarity}")
    return 0


def _cmd_session_active(args: argparse.Namespace) -> int:
    active = args.state == "true"
    _session(args).set_active(args.case, active)
    print(f"{args.case} active={active}")
    return 0


def _cmd_session_run(args: argparse.Namespace) -> int:
    session = _session(args)
    doc = session.run(getattr(args, "strictness", None) or "exact")
    metrics = doc["metrics"]
    text = (f"tp={doc['counts']['tp']} fp={doc['counts']['fp']} "
            f"tn={doc['counts']['tn']} fn={doc['counts']['fn']}\n"
            f"P={metrics['precision']:.3f} R={metrics['recall']:.3f} "
            f"F={metrics['f_measure']:.3f}")
    _emit(args, doc, text)
    return 0


def _cmd_session_save(args: argparse.Namespace) -> int:
    data = _session(args).suite_bytes()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    print(f"benchmark -> {out}")
    return 0


def _cmd_session_export(args: argparse.Namespace) -> int:
    data = _session(args).export(args.to)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(data)
        print(f"{args.to} export -> {out}")
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 0


# --- serve ---------------------------------------------------------------

def _cmd_serve(args: argparse.Namespace) -> int:
    config = getattr(args, "config", None) or os.environ.get("AQL_CONFIG")
    session = service_mod.Session(args.session, config)
    print(f"serving session {args.session} on "
          f"http://{args.host}:{args.port}", flush=True)
    service_mod.serve(session, args.host, args.port, args.ui_dir)
    return 0


# --- parser --------------------------------------------------------------

def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["text", "json"],
                        default="text", help="output format")


def _add_strictness(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--strictness", choices=["exact", "name-only"],
                        default="exact",
                        help="endpoint matching strictness")


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="tool configuration XML "
                        "(default: AQL_CONFIG)")
    parser.add_argument("--timeout-slack", type=float, default=None,
                        help="allowed scheduling slack over tool timeouts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqlbench",
        description="Taint-flow query dispatcher and benchmark engine")
    sub = parser.add_subparsers(dest="command", required=True)

    query = sub.add_parser("query", help="parse or run queries")
    query_sub = query.add_subparsers(dest="subcommand", required=True)
    qp = query_sub.add_parser("parse", help="check a query and echo its AST")
    qp.add_argument("query")
    _add_format(qp)
    qp.set_defaults(func=_cmd_query_parse)
    qr = query_sub.add_parser("run", help="answer a query via the toolchain")
    qr.add_argument("query")
    qr.add_argument("--app", action="append", default=[],
                    help="app sidecar giving the query context "
                    "(repeatable)")
    _add_config(qr)
    _add_strictness(qr)
    _add_format(qr)
    qr.set_defaults(func=_cmd_query_run)

    app = sub.add_parser("app", help="inspect app sidecars")
    app_sub = app.add_subparsers(dest="subcommand", required=True)
    ai = app_sub.add_parser("ingest", help="load sidecars and report stats")
    ai.add_argument("sidecar", nargs="+")
    ai.add_argument("--strict", action="store_true",
                    help="fail when the referenced .apk is missing")
    _add_format(ai)
    ai.set_defaults(func=_cmd_app_ingest)
    asc = app_sub.add_parser("scan", help="mark source/sink candidates")
    asc.add_argument("sidecar", nargs="+")
    asc.add_argument("--susi", required=True,
                     help="source/sink list file")
    _add_strictness(asc)
    _add_format(asc)
    asc.set_defaults(func=_cmd_app_scan)
    ac = app_sub.add_parser("combine", help="merge sidecars into one app")
    ac.add_argument("sidecar", nargs="+")
    ac.add_argument("-o", "--out", required=True)
    ac.set_defaults(func=_cmd_app_combine)

    bench = sub.add_parser("bench", help="benchmark suite lifecycle")
    bench_sub = bench.add_subparsers(dest="subcommand", required=True)
    bi = bench_sub.add_parser("init", help="skeleton cases from apps")
    bi.add_argument("sidecar", nargs="+")
    bi.add_argument("--combine", action="append",
                    help="extra combined case, e.g. appA+appB (repeatable)")
    bi.add_argument("-o", "--out", required=True)
    bi.set_defaults(func=_cmd_bench_init)
    bp = bench_sub.add_parser("pairs",
                              help="one case per source/sink group pair")
    bp.add_argument("sidecar", nargs="+")
    bp.add_argument("--susi", required=True)
    bp.add_argument("--group", action="append",
                    help="label=callee1,callee2 grouping (repeatable)")
    _add_strictness(bp)
    bp.add_argument("-o", "--out", required=True)
    bp.set_defaults(func=_cmd_bench_pairs)
    br = bench_sub.add_parser("run", help="execute a suite via the tools")
    br.add_argument("suite")
    br.add_argument("--apps-dir", help="directory with <id>.xml sidecars")
    br.add_argument("--out", help="write the JSON report here")
    br.add_argument("--no-figures", action="store_true",
                    help="skip figure rendering next to --out")
    _add_config(br)
    _add_strictness(br)
    _add_format(br)
    br.set_defaults(func=_cmd_bench_run)
    be = bench_sub.add_parser("eval",
                              help="evaluate stored answers against a suite")
    be.add_argument("suite")
    be.add_argument("--answers", required=True,
                    help="directory with <case-id>.xml answers")
    be.add_argument("--apps-dir")
    _add_strictness(be)
    _add_format(be)
    be.set_defaults(func=_cmd_bench_eval)
    bx = bench_sub.add_parser("export", help="convert a JSON report")
    bx.add_argument("report")
    bx.add_argument("--to", choices=["json", "csv", "sql"], required=True)
    bx.add_argument("-o", "--out")
    bx.add_argument("--no-figures", action="store_true",
                    help="skip figure rendering next to --out")
    bx.set_defaults(func=_cmd_bench_export)
    bt = bench_sub.add_parser("triage",
                              help="cross-tool flow agreement shortlist")
    bt.add_argument("suite")
    bt.add_argument("--answers", action="append", required=True,
                    help="tool=dir with <case-id>.xml answers (repeatable)")
    _add_format(bt)
    bt.set_defaults(func=_cmd_bench_triage)

    session = sub.add_parser("session",
                             help="drive a wizard session from the CLI")
    session.add_argument("dir", help="session directory")
    session_sub = session.add_subparsers(dest="subcommand", required=True)
    sa = session_sub.add_parser("app", help="ingest a sidecar")
    sa.add_argument("sidecar")
    sa.set_defaults(func=_cmd_session_app)
    ss = session_sub.add_parser("susi", help="set the source/sink list")
    ss.add_argument("list")
    ss.set_defaults(func=_cmd_session_susi)
    sc = session_sub.add_parser("candidates", help="list candidates")
    _add_format(sc)
    sc.set_defaults(func=_cmd_session_candidates)
    sel = session_sub.add_parser("select", help="toggle one candidate")
    sel.add_argument("candidate", help="candidate id")
    sel.add_argument("--off", action="store_true")
    sel.set_defaults(func=_cmd_session_select)
    sb = session_sub.add_parser("bulk", help="toggle many candidates")
    sb.add_argument("--off", action="store_true")
    sb.add_argument("--ids", help="comma-separated candidate ids "
                    "(default: all)")
    sb.set_defaults(func=_cmd_session_bulk)
    sg = session_sub.add_parser("group", help="group candidates")
    sg.add_argument("label")
    sg.add_argument("candidate", nargs="+", help="candidate ids")
    sg.set_defaults(func=_cmd_session_group)
    scs = session_sub.add_parser("cases", help="list or rebuild cases")
    scs.add_argument("action", nargs="?", choices=["init", "pairs"],
                     help="rebuild cases (omit to list)")
    scs.add_argument("--combine", action="append",
                     help="combined case appA+appB for init (repeatable)")
    _add_format(scs)
    scs.set_defaults(func=_cmd_session_cases)
    sp = session_sub.add_parser("polarity", help="set case polarity")
    sp.add_argument("case")
    sp.add_argument("polarity", choices=["positive", "negative"])
    sp.set_defaults(func=_cmd_session_polarity)
    sac = session_sub.add_parser("active", help="activate or deactivate")
    sac.add_argument("case")
    sac.add_argument("state", choices=["true", "false"])
    sac.set_defaults(func=_cmd_session_active)
    sr = session_sub.add_parser("run", help="execute the benchmark")
    _add_config(sr)
    _add_strictness(sr)
    _add_format(sr)
    sr.set_defaults(func=_cmd_session_run)
    ssv = session_sub.add_parser("save", help="write the benchmark file")
    ssv.add_argument("-o", "--out", required=True)
    ssv.set_defaults(func=_cmd_session_save)
    sx = session_sub.add_parser("export", help="export the last report")
    sx.add_argument("--to", choices=["json", "csv", "sql"], required=True)
    sx.add_argument("-o", "--out")
    sx.set_defaults(func=_cmd_session_export)

    serve = sub.add_parser("serve", help="run the wizard HTTP service")
    serve.add_argument("--session", required=True,
                       help="session directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--ui-dir", help="serve this directory at /")
    serve.add_argument("--config")
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except AqlBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
