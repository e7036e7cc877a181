"""Flow graph documents and rendered report figures."""

import pytest

from aqlbench.aql.model import Answer, AppIdentifier, Flow, Reference
from aqlbench.bench import (
    BenchmarkCase,
    CaseVerdict,
    Classification,
    Polarity,
    build_report,
)
from aqlbench.report import (
    graph_document,
    render_case_graph_figure,
    render_confusion_figure,
    render_metrics_figure,
    render_report_figures,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def assert_png(path):
    data = path.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 1000


def ref(stmt, app="Demo.apk"):
    return Reference(app=AppIdentifier(app), classname="p.C",
                     method="void m()", statement=stmt)


LEAK = Flow(ref("src()"), ref("dst(x)"))


@pytest.fixture
def case():
    return BenchmarkCase("case-1", ("a",),
                         expected=Answer(frozenset({LEAK})))


@pytest.fixture
def report():
    return build_report([
        CaseVerdict("case-1", Polarity.POSITIVE, Classification.TP,
                    matched_flow=LEAK),
        CaseVerdict("case-2", Polarity.NEGATIVE, Classification.TN),
    ])


# --- graph documents ------------------------------------------------------

def test_expected_only_document(case):
    doc = graph_document(case)
    assert doc["case"] == "case-1"
    assert doc["polarity"] == "positive"
    assert [n["origin"] for n in doc["nodes"]] == ["expected", "expected"]
    # sinks sort before sources
    assert [n["role"] for n in doc["nodes"]] == ["sink", "source"]
    assert {n["label"] for n in doc["nodes"]} == {"src()", "dst(x)"}
    assert len(doc["edges"]) == 1
    edge = doc["edges"][0]
    assert edge["kind"] == "expected"
    assert not edge["matched"]


def test_shared_endpoints_merge_to_both(case):
    hop = Reference(app=AppIdentifier("Demo.apk"), statement="hop()")
    found = Flow(ref("src()"), ref("dst(x)"), via=(hop,))
    extra = Flow(ref("other()"), ref("dst(x)"))
    doc = graph_document(case, Answer(frozenset({found, extra})),
                         matched_flow=found)
    origins = {n["label"]: n["origin"] for n in doc["nodes"]}
    assert origins == {"src()": "both", "dst(x)": "both",
                       "other()": "actual"}
    expected_edge, *actual_edges = doc["edges"]
    assert expected_edge["kind"] == "expected"
    assert expected_edge["matched"]
    # actual edges follow canonical flow order: other() sorts first
    assert [e["matched"] for e in actual_edges] == [False, True]
    assert actual_edges[1]["via"] == ["hop()"]


def test_same_statement_gets_one_node_per_role():
    loop = Flow(ref("x()"), ref("x()"))
    case = BenchmarkCase("loop", ("a",), expected=Answer(frozenset({loop})))
    doc = graph_document(case)
    assert len(doc["nodes"]) == 2
    assert {n["role"] for n in doc["nodes"]} == {"source", "sink"}
    ids = {n["id"] for n in doc["nodes"]}
    assert len(ids) == 2
    assert all(len(i) == 12 for i in ids)


def test_document_for_skeleton_case_is_empty():
    skeleton = BenchmarkCase("bare", ("a",))
    doc = graph_document(skeleton)
    assert doc["nodes"] == []
    assert doc["edges"] == []


def test_via_hop_without_statement_shows_wildcard(case):
    hop = Reference(app=AppIdentifier("Demo.apk"), classname="p.C")
    found = Flow(ref("src()"), ref("dst(x)"), via=(hop,))
    doc = graph_document(case, Answer(frozenset({found})))
    actual_edge = doc["edges"][1]
    assert actual_edge["via"] == ["*"]


def test_documents_are_deterministic(case):
    actual = Answer(frozenset({Flow(ref("a()"), ref("b()")),
                               Flow(ref("c()"), ref("d()"))}))
    assert graph_document(case, actual) == graph_document(case, actual)


# --- figures --------------------------------------------------------------

def test_metrics_figure_renders(tmp_path, report):
    out = render_metrics_figure(report, tmp_path / "metrics.png")
    assert out == tmp_path / "metrics.png"
    assert_png(out)


def test_confusion_figure_renders(tmp_path, report):
    assert_png(render_confusion_figure(report, tmp_path / "confusion.png"))


def test_case_graph_figure_renders(tmp_path, case):
    long_sink = ref("sink(" + "x" * 80 + ")")
    hop = Reference(app=AppIdentifier("Demo.apk"), statement="hop()")
    actual = Answer(frozenset({Flow(ref("src()"), long_sink, via=(hop,))}))
    doc = graph_document(case, actual, matched_flow=None)
    assert_png(render_case_graph_figure(doc, tmp_path / "case.png"))


def test_case_graph_figure_notes_missing_flows(tmp_path):
    doc = graph_document(BenchmarkCase("bare", ("a",)))
    assert_png(render_case_graph_figure(doc, tmp_path / "empty.png"))


def test_render_report_figures_writes_the_set(tmp_path, report, case):
    graphs = {"a/b:c": graph_document(case)}
    written = render_report_figures(report, tmp_path / "figs", graphs)
    assert [p.name for p in written] == \
        ["metrics.png", "confusion.png", "case-a_b_c.png"]
    for path in written:
        assert path.parent == tmp_path / "figs"
        assert_png(path)


def test_render_report_figures_without_graphs(tmp_path, report):
    written = render_report_figures(report, tmp_path)
    assert [p.name for p in written] == ["metrics.png", "confusion.png"]
