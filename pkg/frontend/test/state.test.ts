import { describe, expect, it } from "vitest";

import { ViewState } from "../src/state.js";

function snapshot(revision: number, regionOf: Record<string, number>,
                  labels: Record<string, string> = {}) {
  return { revision, supervertex_region: regionOf, region_labels: labels };
}

describe("ViewState", () => {
  it("keeps the label draft across tool changes", () => {
    const state = new ViewState();
    state.labelDraft = "coffee ta";
    state.setTool("split");
    state.setTool("annotate");
    expect(state.labelDraft).toBe("coffee ta");
  });

  it("prunes the selection to live regions on snapshot", () => {
    const state = new ViewState();
    state.applySnapshot(snapshot(0, { "0": 1, "1": 2, "2": 3 }));
    state.selectRegion(2);
    state.selectRegion(3, true);
    expect(state.selectedRegions).toEqual([2, 3]);
    // region 3 merged away at revision 1
    state.applySnapshot(snapshot(1, { "0": 1, "1": 2, "2": 2 }));
    expect(state.selectedRegions).toEqual([2]);
  });

  it("ignores selecting a region that does not exist", () => {
    const state = new ViewState();
    state.applySnapshot(snapshot(0, { "0": 1 }));
    state.selectRegion(99);
    expect(state.selectedRegions).toEqual([]);
  });

  it("suggests labels by prefix", () => {
    const state = new ViewState();
    state.applySnapshot(snapshot(0, { "0": 1, "1": 2, "2": 3 },
                                 { "1": "chair", "2": "Chest", "3": "table" }));
    expect(state.labelSuggestions("ch")).toEqual(["Chest", "chair"]);
  });
});
