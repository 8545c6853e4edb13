import { describe, expect, it } from "vitest";

import { fenceRect, fenceViewport, project } from "../src/trajectory";
import { buildTree } from "../src/payloadTree";
import { GeoFence } from "../src/types";

const FENCE: GeoFence = {
  x_min: -200,
  x_max: 200,
  y_min: -200,
  y_max: 200,
  z_min: -100,
  z_max: 0,
};

describe("top-down projection", () => {
  it("centers the fence in the canvas", () => {
    const view = fenceViewport(FENCE, 400, 400);
    const center = project(view, 0, 0);
    expect(center.x).toBeCloseTo(200);
    expect(center.y).toBeCloseTo(200);
  });

  it("north is up: larger x_north means smaller canvas y", () => {
    const view = fenceViewport(FENCE, 400, 400);
    const south = project(view, -50, 0);
    const north = project(view, 50, 0);
    expect(north.y).toBeLessThan(south.y);
    const west = project(view, 0, -50);
    const east = project(view, 0, 50);
    expect(east.x).toBeGreaterThan(west.x);
  });

  it("every in-fence point projects inside the fence rectangle", () => {
    const view = fenceViewport(FENCE, 420, 340);
    const rect = fenceRect(view, FENCE);
    for (const north of [-200, -77, 0, 133, 200]) {
      for (const east of [-200, -10, 0, 85, 200]) {
        const p = project(view, north, east);
        expect(p.x).toBeGreaterThanOrEqual(rect.x - 1e-9);
        expect(p.x).toBeLessThanOrEqual(rect.x + rect.w + 1e-9);
        expect(p.y).toBeGreaterThanOrEqual(rect.y - 1e-9);
        expect(p.y).toBeLessThanOrEqual(rect.y + rect.h + 1e-9);
      }
    }
  });

  it("preserves aspect ratio on non-square canvases", () => {
    const view = fenceViewport(FENCE, 800, 400);
    const a = project(view, 0, 0);
    const b = project(view, 10, 0);
    const c = project(view, 0, 10);
    expect(Math.abs(a.y - b.y)).toBeCloseTo(Math.abs(c.x - a.x));
  });
});

describe("payload tree", () => {
  it("nests objects with sorted keys", () => {
    const tree = buildTree("gps", {
      is_valid: true,
      gnss: { fix_type: 3, geo_point: { latitude: 47.6 } },
    });
    expect(tree.label).toBe("gps");
    expect(tree.children.map((c) => c.label)).toEqual(["gnss", "is_valid"]);
    const gnss = tree.children[0];
    expect(gnss.children.map((c) => c.label)).toEqual(["fix_type", "geo_point"]);
    expect(gnss.children[0].value).toBe("3");
  });

  it("formats scalars in transcript style", () => {
    expect(buildTree("v", true).value).toBe("True");
    expect(buildTree("v", "scene").value).toBe("'scene'");
    expect(buildTree("v", 0.1).value).toBe("0.1");
  });

  it("renders arrays with index labels", () => {
    const tree = buildTree("items", [1, 2]);
    expect(tree.children.map((c) => c.label)).toEqual(["0", "1"]);
  });
});
