export interface MeshPayload {
  positions: Float32Array;   // 3 * vertexCount
  faces: Uint32Array;        // 3 * faceCount
  regionIds: Uint32Array;    // per vertex
  colors: Uint8Array;        // 3 * vertexCount
  vertexCount: number;
  faceCount: number;
  revision: number;
}

export interface HierarchyDoc {
  revision: number;
  unchanged?: boolean;
  supervertex_region?: Record<string, number>;
  region_labels?: Record<string, string>;
}

export interface StrokeResult {
  revision: number;
  vertices: number[];
  supervertices: number[];
  regions: number[];
}

export interface SearchCandidate {
  regions: number[];
  C: number;
  E: number;
  T: number[];
}

export interface CameraSpec {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  pose: number[];
  width: number;
  height: number;
}

export type Tool =
  | "merge"
  | "extract"
  | "split"
  | "annotate"
  | "template"
  | "guided-merge";
