// Plan graph rendered as an SVG string: fills follow the color legend,
// dependency arrows are solid black, blocked nodes hang on dashed red
// links to the question that will unblock them.

import { nodeFill } from "./colors.js";
import { layout, NODE_H, NODE_W } from "./layout.js";
import type { PlanEdge, PlanNode } from "./types.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderGraph(nodes: PlanNode[], edges: PlanEdge[]): string {
  const placed = layout(nodes, edges);
  const at = new Map(placed.nodes.map((n) => [n.id, n]));
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${placed.width}" ` +
    `height="${placed.height}" data-nodes="${placed.nodes.length}">`);
  parts.push(
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" ` +
    `markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L8,4 L0,8 z"/>` +
    `</marker></defs>`);
  for (const e of edges) {
    if (e.to === null) continue;
    const a = at.get(e.from);
    const b = at.get(e.to);
    if (!a || !b) continue;
    const blocked = a.status === "blocked" || b.status === "blocked";
    const dash = blocked ? ` stroke-dasharray="5,4"` : "";
    const stroke = blocked ? "#c0392b" : "#222";
    parts.push(
      `<line class="edge edge-${e.type}${blocked ? " edge-blocked" : ""}" ` +
      `x1="${a.x + NODE_W / 2}" y1="${a.y}" ` +
      `x2="${b.x + NODE_W / 2}" y2="${b.y + NODE_H}" ` +
      `stroke="${stroke}"${dash} marker-end="url(#arrow)"/>`);
  }
  for (const n of placed.nodes) {
    const faded = n.status === "satisfied" ? ` opacity="0.45"` : "";
    parts.push(
      `<g class="node" data-id="${n.id}" data-kind="${n.kind}" ` +
      `data-status="${n.status}" data-color="${esc(nodeFill(n.kind))}"${faded}>` +
      `<rect x="${n.x}" y="${n.y}" width="${NODE_W}" height="${NODE_H}" rx="6" ` +
      `fill="${nodeFill(n.kind)}" stroke="#333"/>` +
      `<title>${esc(`${n.id} ${n.kind} p=${n.probability}\n${n.verbalization}`)}</title>` +
      `<text x="${n.x + 6}" y="${n.y + 21}" font-size="11">` +
      `${n.id} ${esc(n.kind)}</text></g>`);
  }
  parts.push("</svg>");
  return parts.join("");
}

export function nodeDetail(n: PlanNode, provenance: string[]): string {
  return [
    `<div class="detail">`,
    `<h3>record ${n.id} <span class="kind">${esc(n.kind)}</span></h3>`,
    `<p class="verbalization">${esc(n.verbalization)}</p>`,
    `<p>agent ${esc(n.agent)} | status ${esc(n.status)} | p=${esc(n.probability)}</p>`,
    `<p class="provenance">${provenance.map(esc).join("<br/>")}</p>`,
    `</div>`,
  ].join("");
}
