"""Report rendering: flow graphs as documents, metrics as figures.

The graph document is plain JSON-friendly data (nodes for sources and
sinks, edges for flows) so a frontend can draw it; the figure functions
render the same material to image files with matplotlib for the
headless report path.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from aqlbench.aql.model import Answer, Flow, Reference  # noqa: E402
from aqlbench.bench import BenchmarkCase, EvaluationReport  # noqa: E402


def _node_id(role: str, ref: Reference) -> str:
    material = "|".join([role, ref.app.path, ref.classname or "",
                         ref.method or "", ref.statement or ""])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


def _node_label(ref: Reference) -> str:
    return ref.statement or "*"


def graph_document(case: BenchmarkCase,
                   actual: Optional[Answer] = None,
                   matched_flow: Optional[Flow] = None) -> dict:
    """Node/edge document comparing expected and actual flows of a case.

    Sources and sinks become nodes; every flow becomes an edge tagged
    with its origin.  With a single expected flow per case (the common
    shape) the matched flag on expected edges mirrors the verdict.
    """
    nodes: dict[str, dict] = {}
    edges: list[dict] = []

    def add_node(role: str, ref: Reference, origin: str) -> str:
        nid = _node_id(role, ref)
        node = nodes.get(nid)
        if node is None:
            nodes[nid] = {"id": nid, "label": _node_label(ref),
                          "role": role, "origin": origin}
        elif node["origin"] != origin:
            node["origin"] = "both"
        return nid

    expected_flows = case.expected.sorted_flows() if case.expected else []
    actual_flows = actual.sorted_flows() if actual else []

    for flow in expected_flows:
        src = add_node("source", flow.source, "expected")
        dst = add_node("sink", flow.sink, "expected")
        edges.append({
            "source": src,
            "target": dst,
            "kind": "expected",
            "matched": matched_flow is not None,
            "via": [],
        })
    for flow in actual_flows:
        src = add_node("source", flow.source, "actual")
        dst = add_node("sink", flow.sink, "actual")
        edges.append({
            "source": src,
            "target": dst,
            "kind": "actual",
            "matched": flow == matched_flow,
            "via": [v.statement or "*" for v in flow.via],
        })
    return {
        "case": case.id,
        "polarity": case.polarity.value,
        "nodes": sorted(nodes.values(), key=lambda n: (n["role"], n["id"])),
        "edges": edges,
    }


def render_metrics_figure(report: EvaluationReport, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    names = ["precision", "recall", "F-measure"]
    values = [float(report.precision), float(report.recall),
              float(report.f_measure)]
    bars = ax.bar(names, values, color=["#4878b0", "#6aa66a", "#b05c5c"])
    for bar, value in zip(bars, values):
        ax.annotate(f"{value:.3f}",
                    (bar.get_x() + bar.get_width() / 2, value),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("score")
    ax.set_title(f"{len(report.verdicts)} cases")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_confusion_figure(report: EvaluationReport,
                            path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    grid = [[report.tp, report.fn], [report.fp, report.tn]]
    ax.imshow(grid, cmap="Blues", vmin=0)
    for i in range(2):
        for j in range(2):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center",
                    fontsize=14)
    ax.set_xticks([0, 1], ["found", "not found"])
    ax.set_yticks([0, 1], ["positive", "negative"])
    ax.set_title("case outcomes")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _truncate(label: str, limit: int = 40) -> str:
    return label if len(label) <= limit else label[:limit - 3] + "..."


def render_case_graph_figure(doc: dict, path: str | Path) -> Path:
    """Draw one case's flow graph: sources left, sinks right."""
    path = Path(path)
    sources = [n for n in doc["nodes"] if n["role"] == "source"]
    sinks = [n for n in doc["nodes"] if n["role"] == "sink"]
    positions: dict[str, tuple[float, float]] = {}
    for column, node_list in ((0.0, sources), (1.0, sinks)):
        count = max(len(node_list), 1)
        for i, node in enumerate(node_list):
            positions[node["id"]] = (column, 1.0 - (i + 0.5) / count)

    fig, ax = plt.subplots(figsize=(7.0, 0.9 + 0.7 * max(
        len(sources), len(sinks), 1)))
    styles = {
        ("expected", False): {"color": "#888888", "linestyle": "--"},
        ("expected", True): {"color": "#2b7a2b", "linestyle": "--"},
        ("actual", False): {"color": "#b05c5c", "linestyle": "-"},
        ("actual", True): {"color": "#2b7a2b", "linestyle": "-"},
    }
    for edge in doc["edges"]:
        x0, y0 = positions[edge["source"]]
        x1, y1 = positions[edge["target"]]
        style = styles[(edge["kind"], edge["matched"])]
        ax.plot([x0, x1], [y0, y1], linewidth=2, **style)
        if edge["via"]:
            ax.annotate(" / ".join(_truncate(v, 18) for v in edge["via"]),
                        ((x0 + x1) / 2, (y0 + y1) / 2), fontsize=7,
                        ha="center", va="bottom", color=style["color"])
    for node in doc["nodes"]:
        x, y = positions[node["id"]]
        marker = "o" if node["role"] == "source" else "s"
        ax.scatter([x], [y], s=160, marker=marker, color="#f0f0f0",
                   edgecolors="#333333", zorder=3)
        align = "right" if node["role"] == "source" else "left"
        offset = -0.04 if node["role"] == "source" else 0.04
        ax.annotate(_truncate(node["label"]), (x + offset, y),
                    fontsize=8, ha=align, va="center")
    if not doc["edges"]:
        ax.annotate("no flows", (0.5, 0.5), ha="center", va="center",
                    fontsize=12, color="#888888")
    ax.set_xlim(-1.1, 2.1)
    ax.set_ylim(-0.05, 1.05)
    ax.axis("off")
    ax.set_title(f"case {doc['case']}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_report_figures(report: EvaluationReport, out_dir: str | Path,
                          graphs: Optional[Mapping[str, dict]] = None
                          ) -> list[Path]:
    """Write the figure set for a report; returns the created files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        render_metrics_figure(report, out_dir / "metrics.png"),
        render_confusion_figure(report, out_dir / "confusion.png"),
    ]
    for case_id, doc in (graphs or {}).items():
        safe = "".join(c if c.isalnum() or c in "-_." else "_"
                       for c in case_id)
        written.append(
            render_case_graph_figure(doc, out_dir / f"case-{safe}.png"))
    return written
