/** Flow graph rendering: sources in a left column, sinks in a right
 * column, one edge per flow.  Expected flows are dashed, actual flows
 * solid; green marks a match.  Pure string output so it can be tested
 * without a DOM.
 */

import type { GraphDoc, GraphEdge, GraphNode } from "./api.js";
import { escapeHtml } from "./html.js";

export interface NodePosition {
  x: number;
  y: number;
}

const WIDTH = 720;
const COLUMN_X = { source: 150, sink: 570 } as const;
const ROW_HEIGHT = 64;
const TOP = 40;

export function layoutNodes(doc: GraphDoc): Map<string, NodePosition> {
  const positions = new Map<string, NodePosition>();
  for (const role of ["source", "sink"] as const) {
    const column = doc.nodes.filter((n) => n.role === role);
    column.forEach((node, i) => {
      positions.set(node.id, { x: COLUMN_X[role], y: TOP + i * ROW_HEIGHT });
    });
  }
  return positions;
}

export function graphHeight(doc: GraphDoc): number {
  const sources = doc.nodes.filter((n) => n.role === "source").length;
  const sinks = doc.nodes.filter((n) => n.role === "sink").length;
  return TOP + ROW_HEIGHT * Math.max(sources, sinks, 1) + 20;
}

function truncate(label: string, limit = 46): string {
  return label.length <= limit ? label : label.slice(0, limit - 3) + "...";
}

export function edgeColor(edge: GraphEdge): string {
  if (edge.matched) return "#2b7a2b";
  return edge.kind === "expected" ? "#888888" : "#b05c5c";
}

function renderEdge(edge: GraphEdge, positions: Map<string, NodePosition>): string {
  const from = positions.get(edge.source);
  const to = positions.get(edge.target);
  if (!from || !to) return "";
  const color = edgeColor(edge);
  const dash = edge.kind === "expected" ? ' stroke-dasharray="7 5"' : "";
  const parts = [
    `<line class="edge edge-${edge.kind}${edge.matched ? " edge-matched" : ""}" ` +
      `x1="${from.x + 8}" y1="${from.y}" x2="${to.x - 8}" y2="${to.y}" ` +
      `stroke="${color}" stroke-width="2"${dash}/>`,
  ];
  if (edge.via.length > 0) {
    // Intermediate statements sit along the edge as small labels, so a
    // flow through n hops reads as a path of n+1 segments.
    const midX = (from.x + to.x) / 2;
    const midY = (from.y + to.y) / 2;
    const hops = edge.via.map((v) => truncate(v, 28)).join(" / ");
    parts.push(
      `<text class="via" x="${midX}" y="${midY - 6}" text-anchor="middle" ` +
        `fill="${color}" font-size="10">${escapeHtml(hops)}</text>`,
    );
  }
  return parts.join("\n");
}

function renderNode(node: GraphNode, positions: Map<string, NodePosition>): string {
  const pos = positions.get(node.id);
  if (!pos) return "";
  const shape =
    node.role === "source"
      ? `<circle cx="${pos.x}" cy="${pos.y}" r="8"`
      : `<rect x="${pos.x - 8}" y="${pos.y - 8}" width="16" height="16"`;
  const anchor = node.role === "source" ? "end" : "start";
  const textX = node.role === "source" ? pos.x - 14 : pos.x + 14;
  return [
    `${shape} class="node node-${node.role} origin-${node.origin}" ` +
      `fill="#f0f0f0" stroke="#333333" stroke-width="1.5"/>`,
    `<text x="${textX}" y="${pos.y + 4}" text-anchor="${anchor}" font-size="11">` +
      `${escapeHtml(truncate(node.label))}</text>`,
  ].join("\n");
}

export function renderGraphSvg(doc: GraphDoc): string {
  const height = graphHeight(doc);
  const positions = layoutNodes(doc);
  const body: string[] = [];
  if (doc.edges.length === 0) {
    body.push(
      `<text class="no-flows" x="${WIDTH / 2}" y="${height / 2}" ` +
        `text-anchor="middle" fill="#888888" font-size="14">no flows</text>`,
    );
  } else {
    for (const edge of doc.edges) body.push(renderEdge(edge, positions));
  }
  for (const node of doc.nodes) body.push(renderNode(node, positions));
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${height}" ` +
    `width="${WIDTH}" height="${height}" role="img" ` +
    `aria-label="flow graph for case ${escapeHtml(doc.case)}">\n` +
    body.join("\n") +
    "\n</svg>"
  );
}
