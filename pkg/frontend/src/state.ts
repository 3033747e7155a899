// Client view state. The service is the single source of truth for the
// hierarchy; this store only mirrors the last committed snapshot plus
// transient UI state (tool, selection, label draft, pending candidates).

import type { SearchCandidate, Tool } from "./types.js";

export interface Snapshot {
  revision: number;
  regionOfSupervertex: Map<number, number>;
  labels: Map<number, string>;
}

export class ViewState {
  tool: Tool = "merge";
  selectedRegions: number[] = [];
  labelDraft = "";
  pendingCandidates: SearchCandidate[] = [];
  offline = false;
  notice = "";
  snapshot: Snapshot = {
    revision: -1,
    regionOfSupervertex: new Map(),
    labels: new Map(),
  };

  get revision(): number {
    return this.snapshot.revision;
  }

  liveRegions(): Set<number> {
    return new Set(this.snapshot.regionOfSupervertex.values());
  }

  setTool(tool: Tool): void {
    // switching tools must never lose unsaved label text
    this.tool = tool;
  }

  selectRegion(region: number, additive = false): void {
    if (!this.liveRegions().has(region)) {
      return;
    }
    if (!additive) {
      this.selectedRegions = [region];
      return;
    }
    if (!this.selectedRegions.includes(region)) {
      this.selectedRegions.push(region);
    }
  }

  clearSelection(): void {
    this.selectedRegions = [];
  }

  applySnapshot(doc: {
    revision: number;
    supervertex_region?: Record<string, number>;
    region_labels?: Record<string, string>;
  }): void {
    if (doc.supervertex_region === undefined) {
      this.snapshot.revision = doc.revision;
      return;
    }
    const regionOf = new Map<number, number>();
    for (const [sv, region] of Object.entries(doc.supervertex_region)) {
      regionOf.set(Number(sv), region);
    }
    const labels = new Map<number, string>();
    for (const [region, label] of Object.entries(doc.region_labels ?? {})) {
      labels.set(Number(region), label);
    }
    this.snapshot = { revision: doc.revision, regionOfSupervertex: regionOf, labels };
    // selection must always refer to live region ids at the new revision
    const live = this.liveRegions();
    this.selectedRegions = this.selectedRegions.filter((r) => live.has(r));
  }

  labelSuggestions(prefix: string): string[] {
    const seen = new Set<string>();
    for (const label of this.snapshot.labels.values()) {
      if (label.toLowerCase().startsWith(prefix.toLowerCase())) {
        seen.add(label);
      }
    }
    return [...seen].sort();
  }
}
