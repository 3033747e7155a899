// Stable hash palette: a region id always maps to the same color, in any
// session, matching the colors the batch pipeline bakes into PLY artifacts.

const KNUTH = 2654435761n;
const MASK = 16777216n; // 2^24

export function regionColor(regionId: number): [number, number, number] {
  const h = (BigInt(regionId >>> 0) * KNUTH) % MASK;
  const n = Number(h);
  const r = (n >> 16) & 255;
  const g = (n >> 8) & 255;
  const b = n & 255;
  return [
    0.2 + (0.8 * r) / 255,
    0.2 + (0.8 * g) / 255,
    0.2 + (0.8 * b) / 255,
  ];
}

export function colorizeByRegion(regionIds: Uint32Array): Float32Array {
  const out = new Float32Array(regionIds.length * 3);
  const cache = new Map<number, [number, number, number]>();
  for (let i = 0; i < regionIds.length; i++) {
    const id = regionIds[i];
    let c = cache.get(id);
    if (!c) {
      c = regionColor(id);
      cache.set(id, c);
    }
    out[i * 3] = c[0];
    out[i * 3 + 1] = c[1];
    out[i * 3 + 2] = c[2];
  }
  return out;
}
