// In-memory stand-in for the Python session service, implementing the same
// HTTP contract (routes, revision checks, status codes) over a fetch-like
// function. Used by the flow tests; state survives client "reloads".

export interface FakeSceneSpec {
  regionOfSupervertex: Record<number, number>;
  labels?: Record<number, string>;
  // stroke resolution stub: polyline index -> regions hit
  strokeRegions?: number[][];
  candidates?: { regions: number[]; C: number; E: number; T: number[] }[];
}

export class FakeService {
  revision = 0;
  regionOf: Map<number, number>;
  labels: Map<number, string>;
  strokeQueue: number[][];
  candidates: { regions: number[]; C: number; E: number; T: number[] }[];
  undoLog: { regionOf: Map<number, number>; labels: Map<number, string> }[] = [];
  jobs = new Map<string, any>();
  meshRequests = 0;

  constructor(spec: FakeSceneSpec) {
    this.regionOf = new Map(
      Object.entries(spec.regionOfSupervertex).map(([k, v]) => [Number(k), v]),
    );
    this.labels = new Map(
      Object.entries(spec.labels ?? {}).map(([k, v]) => [Number(k), v]),
    );
    this.strokeQueue = [...(spec.strokeRegions ?? [])];
    this.candidates = spec.candidates ?? [];
  }

  liveRegions(): Set<number> {
    return new Set(this.regionOf.values());
  }

  private snapshotForUndo(): void {
    this.undoLog.push({
      regionOf: new Map(this.regionOf),
      labels: new Map(this.labels),
    });
  }

  private hierarchyDoc(): any {
    const supervertex_region: Record<string, number> = {};
    for (const [sv, region] of this.regionOf) {
      supervertex_region[String(sv)] = region;
    }
    const region_labels: Record<string, string> = {};
    for (const [region, label] of this.labels) {
      region_labels[String(region)] = label;
    }
    return { revision: this.revision, supervertex_region, region_labels };
  }

  private meshPayload(): ArrayBuffer {
    // one vertex per supervertex, a single dummy face
    const svs = [...this.regionOf.keys()].sort((a, b) => a - b);
    const n = svs.length;
    const size = 4 + n * 12 + 4 + 12 + n * 4 + n * 3;
    const buffer = new ArrayBuffer(size);
    const view = new DataView(buffer);
    let off = 0;
    view.setUint32(off, n, true);
    off += 4;
    for (let i = 0; i < n; i++) {
      view.setFloat32(off, i, true);
      view.setFloat32(off + 4, 0, true);
      view.setFloat32(off + 8, 0, true);
      off += 12;
    }
    view.setUint32(off, 1, true);
    off += 4;
    for (const idx of [0, 1 % n, 2 % n]) {
      view.setUint32(off, idx, true);
      off += 4;
    }
    for (const sv of svs) {
      view.setUint32(off, this.regionOf.get(sv)!, true);
      off += 4;
    }
    for (let i = 0; i < n; i++) {
      buffer && new Uint8Array(buffer, off, 3).set([128, 128, 128]);
      off += 3;
    }
    return buffer;
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    const method = init?.method ?? "GET";

    const conflict = () =>
      new Response(`stale revision ${body.revision}; current is ${this.revision}`,
                   { status: 409 });
    const json = (doc: unknown, status = 200) =>
      new Response(JSON.stringify(doc), {
        status, headers: { "Content-Type": "application/json" },
      });

    if (path === "/mesh" && method === "GET") {
      this.meshRequests += 1;
      return new Response(this.meshPayload(), {
        status: 200,
        headers: {
          "Content-Type": "application/octet-stream",
          "X-Revision": String(this.revision),
        },
      });
    }
    if (path.startsWith("/hierarchy") && method === "GET") {
      const match = path.match(/rev=(\d+)/);
      if (match && Number(match[1]) === this.revision) {
        return json({ revision: this.revision, unchanged: true });
      }
      return json(this.hierarchyDoc());
    }
    if (path === "/stroke" && method === "POST") {
      const regions = this.strokeQueue.shift();
      if (!regions) {
        return new Response("stroke does not intersect the mesh", { status: 422 });
      }
      return json({
        revision: this.revision,
        vertices: regions.map((_, i) => i),
        supervertices: regions.map((_, i) => i),
        regions,
      });
    }
    if (path === "/merge" && method === "POST") {
      if (body.revision !== this.revision) return conflict();
      const regions: number[] = [...new Set<number>(body.regions)].sort((a, b) => a - b);
      if (regions.length < 2) {
        return new Response("merge needs at least 2 distinct regions", { status: 422 });
      }
      this.snapshotForUndo();
      const survivor = regions[0];
      for (const [sv, region] of this.regionOf) {
        if (regions.includes(region)) {
          this.regionOf.set(sv, survivor);
        }
      }
      for (const region of regions.slice(1)) {
        this.labels.delete(region);
      }
      this.revision += 1;
      return json({ revision: this.revision, region: survivor });
    }
    if (path === "/annotate" && method === "POST") {
      if (body.revision !== this.revision) return conflict();
      if (!this.liveRegions().has(body.region)) {
        return new Response(`unknown region ${body.region}`, { status: 422 });
      }
      this.snapshotForUndo();
      this.labels.set(body.region, body.label);
      this.revision += 1;
      return json({ revision: this.revision });
    }
    if (path === "/undo" && method === "POST") {
      if (body.revision !== this.revision) return conflict();
      const prior = this.undoLog.pop();
      if (!prior) {
        return json({ revision: this.revision, undone: false });
      }
      this.regionOf = prior.regionOf;
      this.labels = prior.labels;
      this.revision += 1;
      return json({ revision: this.revision, undone: true });
    }
    if (path === "/accept_object" && method === "POST") {
      if (body.revision !== this.revision) return conflict();
      this.snapshotForUndo();
      const regions: number[] = [...new Set<number>(body.regions)].sort((a, b) => a - b);
      const survivor = regions[0];
      for (const [sv, region] of this.regionOf) {
        if (regions.includes(region)) {
          this.regionOf.set(sv, survivor);
        }
      }
      for (const region of regions.slice(1)) {
        this.labels.delete(region);
      }
      if (body.label) {
        this.labels.set(survivor, body.label);
      }
      this.revision += 1;     // merge + label commits as ONE revision step
      return json({ revision: this.revision, region: survivor });
    }
    if (path === "/template" && method === "POST") {
      return json({ revision: this.revision, template_id: 0 });
    }
    if (path === "/search" && method === "POST") {
      const jobId = "job1";
      this.jobs.set(jobId, { status: "done", candidates: this.candidates, error: null });
      return json({ revision: this.revision, job_id: jobId });
    }
    if (path.startsWith("/search/") && method === "GET") {
      const job = this.jobs.get(path.split("/")[2]);
      if (!job) {
        return new Response("unknown job", { status: 404 });
      }
      return json(job);
    }
    return new Response(`no route ${method} ${path}`, { status: 404 });
  };
}
