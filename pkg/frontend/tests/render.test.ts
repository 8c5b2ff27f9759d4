import { describe, expect, it } from "vitest";

import { fitTransform, laneBounds, pointAt, routeStyle, worldToScreen } from "../src/render.js";
import type { MapLane } from "../src/types.js";

const LANES: MapLane[] = [
  { id: "a", centerline: [[0, 3.5], [170, 3.5]], width: 3.5 },
  { id: "b", centerline: [[0, 0], [170, 0]], width: 3.5 },
];

describe("renderer helpers", () => {
  it("lane bounds include half widths", () => {
    const b = laneBounds(LANES);
    expect(b.minX).toBe(-1.75);
    expect(b.maxX).toBe(171.75);
    expect(b.minY).toBe(-1.75);
    expect(b.maxY).toBe(5.25);
  });

  it("transform fits the world into the canvas with y up", () => {
    const t = fitTransform(laneBounds(LANES), 980, 560, 20);
    const [x0, y0] = worldToScreen(t, -1.75, -1.75);
    const [x1, y1] = worldToScreen(t, 171.75, 5.25);
    expect(x0).toBeGreaterThanOrEqual(19.9);
    expect(x1).toBeLessThanOrEqual(960.1);
    expect(y1).toBeLessThan(y0); // larger world y is higher on screen
    // aspect preserved: equal world spans map to equal pixel spans
    const [ax] = worldToScreen(t, 10, 0);
    const [bx] = worldToScreen(t, 20, 0);
    const [, ay] = worldToScreen(t, 0, 0);
    const [, by] = worldToScreen(t, 0, 10);
    expect(Math.abs(bx - ax)).toBeCloseTo(Math.abs(ay - by), 9);
  });

  it("replanned routes render highlighted", () => {
    expect(routeStyle(true).color).not.toBe(routeStyle(false).color);
    expect(routeStyle(true).width).toBeGreaterThan(routeStyle(false).width);
  });

  it("pointAt interpolates along a polyline", () => {
    const line: [number, number][] = [[0, 0], [10, 0], [10, 10]];
    expect(pointAt(line, 5)).toEqual([5, 0]);
    expect(pointAt(line, 15)).toEqual([10, 5]);
    expect(pointAt(line, 99)).toEqual([10, 10]);
  });

  it("degenerate bounds do not blow up", () => {
    const t = fitTransform(laneBounds([]), 100, 100);
    expect(Number.isFinite(t.scale)).toBe(true);
  });
});
