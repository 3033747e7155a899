// Interaction flows between the view state and the service. Every mutation
// goes through `mutate`, which serializes in-flight requests, re-syncs and
// surfaces a notice on a 409 conflict, and flips the offline banner when
// the network drops. Local state only ever changes after the service has
// committed a new revision.

import { ApiClient, ConflictError } from "./api.js";
import { ViewState } from "./state.js";
import type { CameraSpec, SearchCandidate } from "./types.js";

export interface MeshView {
  setRegionIds(regionIds: Uint32Array): void;
}

export class Controller {
  api: ApiClient;
  state: ViewState;
  view: MeshView | null;
  private inFlight: Promise<unknown> = Promise.resolve();

  constructor(api: ApiClient, state: ViewState, view: MeshView | null = null) {
    this.api = api;
    this.state = state;
    this.view = view;
  }

  async bootstrap(): Promise<void> {
    const doc = await this.api.hierarchy();
    this.state.applySnapshot(doc as any);
    this.state.offline = false;
  }

  async refresh(): Promise<void> {
    const doc = await this.api.hierarchy(this.state.revision);
    if (!doc.unchanged) {
      this.state.applySnapshot(doc as any);
      await this.refreshRegionColors();
    }
  }

  private async refreshRegionColors(): Promise<void> {
    if (!this.view) {
      return;
    }
    const payload = await this.api.mesh();
    this.view.setRegionIds(payload.regionIds);
  }

  /** Serialized mutation with conflict recovery. Returns null on conflict. */
  private async mutate<T>(fn: () => Promise<T>): Promise<T | null> {
    const run = this.inFlight.then(async () => {
      try {
        const result = await fn();
        this.state.offline = false;
        return result;
      } catch (err) {
        if (err instanceof ConflictError) {
          // stale revision: re-sync and tell the user to replay the edit
          const doc = await this.api.hierarchy();
          this.state.applySnapshot(doc as any);
          await this.refreshRegionColors();
          this.state.notice =
            "Edit conflicted with a newer change; state refreshed, please retry.";
          return null;
        }
        if (err instanceof TypeError) {
          // fetch network failure: drop into read-only mode
          this.state.offline = true;
          this.state.notice = "Connection lost; read-only until it returns.";
          return null;
        }
        throw err;
      }
    });
    this.inFlight = run.catch(() => undefined);
    return run as Promise<T | null>;
  }

  /** Stroke with the merge tool: resolve regions, merge them, recolor. */
  async strokeMerge(polyline: number[][], camera: CameraSpec): Promise<number | null> {
    const hit = await this.api.stroke(polyline, camera);
    const regions = [...new Set(hit.regions)];
    if (regions.length < 2) {
      this.state.notice = "Stroke stayed inside one region; nothing to merge.";
      return null;
    }
    return this.mutate(async () => {
      const res = await this.api.merge(regions, this.state.revision);
      await this.afterMutation(res.revision);
      return res.region;
    });
  }

  async strokeSplit(
    region: number, polyline: number[][], camera: CameraSpec,
  ): Promise<number[] | null> {
    return this.mutate(async () => {
      const res = await this.api.split(region, this.state.revision, polyline, camera);
      await this.afterMutation(res.revision);
      return res.regions;
    });
  }

  async extract(region: number): Promise<number[] | null> {
    return this.mutate(async () => {
      const res = await this.api.extract(region, this.state.revision);
      await this.afterMutation(res.revision);
      return res.supervertices;
    });
  }

  async annotateSelected(): Promise<boolean> {
    const label = this.state.labelDraft.trim();
    if (!label || this.state.selectedRegions.length === 0) {
      return false;
    }
    const region = this.state.selectedRegions[0];
    const ok = await this.mutate(async () => {
      const res = await this.api.annotate(region, label, this.state.revision);
      await this.afterMutation(res.revision);
      return true;
    });
    if (ok) {
      this.state.labelDraft = "";
    }
    return ok === true;
  }

  async undo(): Promise<boolean> {
    const res = await this.mutate(async () => {
      const out = await this.api.undo(this.state.revision);
      await this.afterMutation(out.revision);
      return out.undone;
    });
    return res === true;
  }

  async runSearch(regions: number[]): Promise<SearchCandidate[]> {
    const { template_id } = await this.api.registerTemplate(regions);
    const { job_id } = await this.api.startSearch(template_id);
    for (;;) {
      const doc = await this.api.pollSearch(job_id);
      if (doc.status === "done") {
        this.state.pendingCandidates = doc.candidates ?? [];
        return this.state.pendingCandidates;
      }
      if (doc.status === "error") {
        throw new Error(doc.error ?? "search failed");
      }
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
  }

  /** Accepting a candidate merges its regions and labels them in one
      revision step on the service side. */
  async acceptCandidate(
    candidate: SearchCandidate, label: string | null,
  ): Promise<number | null> {
    const result = await this.mutate(async () => {
      const res = await this.api.acceptObject(
        candidate.regions, label, this.state.revision,
      );
      await this.afterMutation(res.revision);
      return res.region;
    });
    if (result !== null) {
      this.state.pendingCandidates = this.state.pendingCandidates.filter(
        (c) => c !== candidate,
      );
    }
    return result;
  }

  rejectCandidate(candidate: SearchCandidate): void {
    this.state.pendingCandidates = this.state.pendingCandidates.filter(
      (c) => c !== candidate,
    );
  }

  private async afterMutation(revision: number): Promise<void> {
    const doc = await this.api.hierarchy();
    this.state.applySnapshot(doc as any);
    if (this.state.revision !== revision) {
      // another writer advanced the session between our edit and the
      // snapshot fetch; the snapshot is still the newest committed state
      this.state.notice = "Session advanced concurrently; showing latest state.";
    }
    await this.refreshRegionColors();
  }
}
