import { describe, expect, it } from "vitest";

import { colorizeByRegion, regionColor } from "../src/palette.js";

describe("regionColor", () => {
  it("is stable across calls and sessions", () => {
    const first = regionColor(42);
    expect(regionColor(42)).toEqual(first);
  });

  it("matches the palette the batch pipeline bakes into artifacts", () => {
    // reference values from the server-side palette implementation
    expect(regionColor(0).map((v) => +v.toFixed(10))).toEqual([0.2, 0.2, 0.2]);
    expect(regionColor(1).map((v) => +v.toFixed(10))).toEqual([
      0.3725490196, 0.5796078431, 0.7552941176,
    ]);
    expect(regionColor(2).map((v) => +v.toFixed(10))).toEqual([
      0.5450980392, 0.9623529412, 0.5074509804,
    ]);
    expect(regionColor(7).map((v) => +v.toFixed(10))).toEqual([
      0.6141176471, 0.4603921569, 0.8745098039,
    ]);
  });

  it("colorizes a region buffer per vertex", () => {
    const colors = colorizeByRegion(new Uint32Array([1, 1, 2]));
    expect(colors.length).toBe(9);
    expect(colors[0]).toBeCloseTo(regionColor(1)[0]);
    expect(colors[6]).toBeCloseTo(regionColor(2)[0]);
  });
});
