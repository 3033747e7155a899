// REST + binary client for the annotation session service. Every mutating
// call sends the revision the client believes is current; the service
// answers 409 when that is stale, and the caller is expected to re-sync.

import type {
  CameraSpec, HierarchyDoc, MeshPayload, SearchCandidate, StrokeResult,
} from "./types.js";

export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class ServiceError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.name = "ServiceError";
    this.status = status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export function parseMeshPayload(buffer: ArrayBuffer, revision: number): MeshPayload {
  const view = new DataView(buffer);
  let off = 0;
  const vertexCount = view.getUint32(off, true);
  off += 4;
  const positions = new Float32Array(buffer, off, vertexCount * 3);
  off += vertexCount * 12;
  const faceCount = view.getUint32(off, true);
  off += 4;
  const faces = new Uint32Array(buffer.slice(off, off + faceCount * 12));
  off += faceCount * 12;
  const regionIds = new Uint32Array(buffer.slice(off, off + vertexCount * 4));
  off += vertexCount * 4;
  const colors = new Uint8Array(buffer.slice(off, off + vertexCount * 3));
  off += vertexCount * 3;
  if (off !== buffer.byteLength) {
    throw new Error(`mesh payload size mismatch: read ${off} of ${buffer.byteLength}`);
  }
  return { positions, faces, regionIds, colors, vertexCount, faceCount, revision };
}

export class ApiClient {
  base: string;
  fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = fetch.bind(globalThis)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    if (response.status === 409) {
      throw new ConflictError(await response.text());
    }
    if (!response.ok) {
      throw new ServiceError(response.status, await response.text());
    }
    return response;
  }

  private async post(path: string, body: unknown): Promise<any> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return response.json();
  }

  async mesh(): Promise<MeshPayload> {
    const response = await this.request("/mesh");
    const revision = Number(response.headers.get("X-Revision") ?? "0");
    return parseMeshPayload(await response.arrayBuffer(), revision);
  }

  async hierarchy(rev?: number): Promise<HierarchyDoc> {
    const query = rev === undefined ? "" : `?rev=${rev}`;
    const response = await this.request(`/hierarchy${query}`);
    return response.json();
  }

  async stroke(polyline: number[][], camera: CameraSpec): Promise<StrokeResult> {
    return this.post("/stroke", { polyline, camera });
  }

  async merge(regions: number[], revision: number): Promise<{ revision: number; region: number }> {
    return this.post("/merge", { regions, revision });
  }

  async extract(region: number, revision: number): Promise<{ revision: number; supervertices: number[] }> {
    return this.post("/extract", { region, revision });
  }

  async split(
    region: number, revision: number, polyline: number[][], camera: CameraSpec,
  ): Promise<{ revision: number; regions: number[] }> {
    return this.post("/split", { region, revision, polyline, camera });
  }

  async annotate(region: number, label: string, revision: number): Promise<{ revision: number }> {
    return this.post("/annotate", { region, label, revision });
  }

  async undo(revision: number): Promise<{ revision: number; undone: boolean }> {
    return this.post("/undo", { revision });
  }

  async acceptObject(
    regions: number[], label: string | null, revision: number,
  ): Promise<{ revision: number; region: number }> {
    return this.post("/accept_object", { regions, label, revision });
  }

  async registerTemplate(regions: number[]): Promise<{ template_id: number }> {
    return this.post("/template", { regions });
  }

  async startSearch(templateId: number): Promise<{ job_id: string }> {
    return this.post("/search", { template_id: templateId });
  }

  async pollSearch(jobId: string): Promise<{
    status: string; candidates: SearchCandidate[] | null; error: string | null;
  }> {
    const response = await this.request(`/search/${jobId}`);
    return response.json();
  }

  async frameMasks(frameId: number, align = false): Promise<any> {
    const response = await this.request(
      `/frames/${frameId}/masks${align ? "?align=true" : ""}`,
    );
    return response.json();
  }

  frameImageUrl(frameId: number): string {
    return `${this.base}/frames/${frameId}/image`;
  }
}
