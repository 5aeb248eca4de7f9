// Orthographic 2.5D voxel scene from exported (morton, site, colour)
// records: decode the interleaved address, project isometrically, and sort
// into painter order. No geographic basemap; the cube view is the scene.

import type { VoxelRecord } from "./types.js";

const M0 = 0x1249249249249249n;
const M1 = 0x10c30c30c30c30c3n;
const M2 = 0x100f00f00f00f00fn;
const M3 = 0x1f0000ff0000ffn;
const M4 = 0x1f00000000ffffn;
const M5 = 0x1fffffn;

function compact(v: bigint): number {
  v &= M0;
  v = (v | (v >> 2n)) & M1;
  v = (v | (v >> 4n)) & M2;
  v = (v | (v >> 8n)) & M3;
  v = (v | (v >> 16n)) & M4;
  v = (v | (v >> 32n)) & M5;
  return Number(v);
}

export function mortonDecode(code: number | string | bigint): [number, number, number] {
  const c = BigInt(code);
  if (c < 0n || c >= 1n << 63n) throw new Error(`morton code ${code} out of range`);
  return [compact(c), compact(c >> 1n), compact(c >> 2n)];
}

export interface SceneCell {
  morton: number;
  i: number;
  j: number;
  k: number;
  x: number;
  y: number;
  depth: number;
  site: number;
  colour: number;
}

const ISO_X = Math.cos(Math.PI / 6);
const ISO_Y = Math.sin(Math.PI / 6);

export function orthographicScene(voxels: VoxelRecord[], cellPx = 12): SceneCell[] {
  const cells = voxels.map((v) => {
    const [i, j, k] = mortonDecode(v.morton);
    return {
      morton: v.morton,
      i,
      j,
      k,
      x: (i - j) * ISO_X * cellPx,
      y: (i + j) * ISO_Y * cellPx - k * cellPx,
      depth: i + j + k,
      site: v.site,
      colour: v.colour,
    };
  });
  // painter order: far cells first, ties resolved by morton for determinism
  cells.sort((a, b) => a.depth - b.depth || (a.morton < b.morton ? -1 : 1));
  return cells;
}

export function sceneBounds(cells: SceneCell[]): { minX: number; maxX: number; minY: number; maxY: number } {
  if (cells.length === 0) return { minX: 0, maxX: 0, minY: 0, maxY: 0 };
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const c of cells) {
    minX = Math.min(minX, c.x);
    maxX = Math.max(maxX, c.x);
    minY = Math.min(minY, c.y);
    maxY = Math.max(maxY, c.y);
  }
  return { minX, maxX, minY, maxY };
}
