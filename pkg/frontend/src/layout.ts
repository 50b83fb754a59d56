// Layered DAG layout. Node ids are creation-ordered, so layering by the
// longest dependency path while breaking ties by id reproduces the
// engine's own left-to-right, oldest-first reading of a plan.

import type { PlanEdge, PlanNode } from "./types.js";

export interface PlacedNode extends PlanNode {
  x: number;
  y: number;
  layer: number;
}

export interface LayoutResult {
  nodes: PlacedNode[];
  width: number;
  height: number;
}

export const NODE_W = 150;
export const NODE_H = 34;
const GAP_X = 26;
const GAP_Y = 58;

export function layerOf(nodes: PlanNode[], edges: PlanEdge[]): Map<number, number> {
  // a node sits one layer below the deepest node it depends on
  const parents = new Map<number, number[]>();
  const known = new Set(nodes.map((n) => n.id));
  for (const e of edges) {
    if (e.to === null || !known.has(e.from) || !known.has(e.to)) continue;
    if (e.type === "relativized-to" || e.type === "decomposes") {
      const list = parents.get(e.from) ?? [];
      list.push(e.to);
      parents.set(e.from, list);
    }
  }
  const layers = new Map<number, number>();
  const visiting = new Set<number>();
  const depth = (id: number): number => {
    const cached = layers.get(id);
    if (cached !== undefined) return cached;
    if (visiting.has(id)) return 0; // defensive: the plan graph is acyclic
    visiting.add(id);
    const ps = parents.get(id) ?? [];
    const d = ps.length ? Math.max(...ps.map(depth)) + 1 : 0;
    visiting.delete(id);
    layers.set(id, d);
    return d;
  };
  for (const n of nodes) depth(n.id);
  return layers;
}

export function layout(nodes: PlanNode[], edges: PlanEdge[]): LayoutResult {
  const layers = layerOf(nodes, edges);
  const byLayer = new Map<number, PlanNode[]>();
  for (const n of [...nodes].sort((a, b) => a.id - b.id)) {
    const l = layers.get(n.id) ?? 0;
    const row = byLayer.get(l) ?? [];
    row.push(n);
    byLayer.set(l, row);
  }
  const placed: PlacedNode[] = [];
  let width = 0;
  const layerKeys = [...byLayer.keys()].sort((a, b) => a - b);
  for (const l of layerKeys) {
    const row = byLayer.get(l)!;
    row.forEach((n, i) => {
      placed.push({
        ...n,
        layer: l,
        x: i * (NODE_W + GAP_X) + 10,
        y: l * (NODE_H + GAP_Y) + 10,
      });
    });
    width = Math.max(width, row.length * (NODE_W + GAP_X) + 20);
  }
  const height = (layerKeys.length || 1) * (NODE_H + GAP_Y) + 20;
  return { nodes: placed, width, height };
}
