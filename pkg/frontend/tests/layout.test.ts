import { describe, expect, it } from "vitest";

import { layoutGraph } from "../src/layout.js";
import type { IrJson } from "../src/types.js";

function ir(steps: string[], edges: [string, string][]): IrJson {
  return {
    title: "t",
    origin_digest: "0".repeat(64),
    steps: steps.map((id) => ({
      id,
      kind: "local_compute",
      summary: id,
      in_ports: ["in"],
      out_ports: ["out"],
    })),
    edges: edges.map(([from, to]) => ({
      from_step: from,
      from_port: "out",
      to_step: to,
      to_port: "in",
    })),
    inputs: [],
    outputs: [],
  };
}

describe("layoutGraph", () => {
  it("lays a chain out left to right, one node per layer", () => {
    const placed = layoutGraph(ir(["a", "b", "c"], [["a", "b"], ["b", "c"]]));
    const layers = Object.fromEntries(placed.map((n) => [n.id, n.layer]));
    expect(layers).toEqual({ a: 0, b: 1, c: 2 });
    const xs = placed.sort((m, n) => m.layer - n.layer).map((n) => n.x);
    expect(xs[0]).toBeLessThan(xs[1]);
    expect(xs[1]).toBeLessThan(xs[2]);
  });

  it("places diamond branches in the same layer", () => {
    const placed = layoutGraph(
      ir(["a", "b", "c", "d"], [["a", "b"], ["a", "c"], ["b", "d"], ["c", "d"]]),
    );
    const byId = Object.fromEntries(placed.map((n) => [n.id, n]));
    expect(byId.b.layer).toBe(1);
    expect(byId.c.layer).toBe(1);
    expect(byId.d.layer).toBe(2);
    expect(byId.b.y).not.toBe(byId.c.y);
  });

  it("layers by longest path when branches have different depths", () => {
    const placed = layoutGraph(
      ir(["a", "b", "c", "d"], [["a", "b"], ["b", "c"], ["a", "d"], ["d", "c"]].map(
        ([x, y]) => [x, y] as [string, string],
      )),
    );
    const byId = Object.fromEntries(placed.map((n) => [n.id, n.layer]));
    expect(byId.c).toBe(2);
  });

  it("refuses a forged cyclic graph", () => {
    expect(() => layoutGraph(ir(["a", "b"], [["a", "b"], ["b", "a"]]))).toThrow(/cyclic/);
  });

  it("is deterministic", () => {
    const graph = ir(["a", "b", "c", "d"], [["a", "b"], ["a", "c"], ["b", "d"], ["c", "d"]]);
    expect(layoutGraph(graph)).toEqual(layoutGraph(graph));
  });
});
