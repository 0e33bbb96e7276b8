/** Left-to-right layered layout for the workflow DAG, computed client-side. */

import type { IrJson } from "./types.js";

export interface PlacedNode {
  id: string;
  layer: number;
  row: number;
  x: number;
  y: number;
}

export const LAYER_WIDTH = 180;
export const ROW_HEIGHT = 96;
export const NODE_WIDTH = 140;
export const NODE_HEIGHT = 52;

/**
 * Longest-path layering: a node sits one layer right of its furthest
 * predecessor, so every edge points left to right. Rows within a layer
 * follow the mean row of predecessors, ties broken alphabetically.
 */
export function layoutGraph(ir: IrJson): PlacedNode[] {
  const ids = ir.steps.map((step) => step.id);
  const preds = new Map<string, string[]>(ids.map((id) => [id, []]));
  const succs = new Map<string, string[]>(ids.map((id) => [id, []]));
  for (const edge of ir.edges) {
    preds.get(edge.to_step)?.push(edge.from_step);
    succs.get(edge.from_step)?.push(edge.to_step);
  }

  const layer = new Map<string, number>();
  const indegree = new Map<string, number>(ids.map((id) => [id, preds.get(id)!.length]));
  const queue = ids.filter((id) => indegree.get(id) === 0).sort();
  const order: string[] = [];
  while (queue.length > 0) {
    const node = queue.shift()!;
    order.push(node);
    layer.set(node, Math.max(0, ...preds.get(node)!.map((p) => (layer.get(p) ?? 0) + 1)));
    for (const next of [...succs.get(node)!].sort()) {
      indegree.set(next, indegree.get(next)! - 1);
      if (indegree.get(next) === 0) queue.push(next);
    }
    queue.sort();
  }
  if (order.length !== ids.length) {
    throw new Error("graph is cyclic; refusing to lay it out");
  }

  const byLayer = new Map<number, string[]>();
  for (const id of order) {
    const l = layer.get(id)!;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(id);
  }

  const row = new Map<string, number>();
  const placed: PlacedNode[] = [];
  for (const l of [...byLayer.keys()].sort((a, b) => a - b)) {
    const members = byLayer.get(l)!;
    members.sort((a, b) => {
      const mean = (id: string) => {
        const rows = preds.get(id)!.map((p) => row.get(p) ?? 0);
        return rows.length ? rows.reduce((s, r) => s + r, 0) / rows.length : 0;
      };
      return mean(a) - mean(b) || a.localeCompare(b);
    });
    members.forEach((id, index) => {
      row.set(id, index);
      placed.push({
        id,
        layer: l,
        row: index,
        x: l * LAYER_WIDTH + 20,
        y: index * ROW_HEIGHT + 20,
      });
    });
  }
  return placed;
}

export function graphExtent(nodes: PlacedNode[]): { width: number; height: number } {
  const width = Math.max(0, ...nodes.map((n) => n.x + NODE_WIDTH)) + 20;
  const height = Math.max(0, ...nodes.map((n) => n.y + NODE_HEIGHT)) + 20;
  return { width: Math.max(width, 320), height: Math.max(height, 160) };
}
