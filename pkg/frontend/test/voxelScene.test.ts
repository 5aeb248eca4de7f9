import { describe, expect, it } from "vitest";

import { mortonDecode, orthographicScene, sceneBounds } from "../src/voxelScene.js";
import type { RecordView } from "../src/types.js";
import { fixture } from "./helpers.js";

interface MortonFixture {
  cases: { ijk: number[]; code: string }[];
}

describe("morton decoding", () => {
  it("inverts the engine's codes from the shared fixture", () => {
    const { cases } = fixture<MortonFixture>("morton_cases.json");
    for (const c of cases) {
      expect(mortonDecode(c.code)).toEqual(c.ijk);
    }
  });

  it("decodes the unit cell", () => {
    expect(mortonDecode(0)).toEqual([0, 0, 0]);
    expect(mortonDecode(7)).toEqual([1, 1, 1]);
    expect(mortonDecode(1)).toEqual([1, 0, 0]);
    expect(mortonDecode(2)).toEqual([0, 1, 0]);
    expect(mortonDecode(4)).toEqual([0, 0, 1]);
  });

  it("rejects out-of-range codes", () => {
    expect(() => mortonDecode(-1)).toThrow(/out of range/);
  });
});

describe("orthographic scene", () => {
  const voxels = fixture<RecordView>("round0_view.json").voxels;

  it("projects every exported voxel deterministically", () => {
    const a = orthographicScene(voxels);
    const b = orthographicScene(voxels);
    expect(a).toHaveLength(voxels.length);
    expect(a).toEqual(b);
  });

  it("sorts painter order by depth", () => {
    const cells = orthographicScene(voxels);
    for (let i = 1; i < cells.length; i++) {
      expect(cells[i].depth).toBeGreaterThanOrEqual(cells[i - 1].depth);
    }
  });

  it("keeps colour identity per cell", () => {
    const cells = orthographicScene(voxels);
    const byMorton = new Map(voxels.map((v) => [v.morton, v.colour]));
    for (const cell of cells) {
      expect(cell.colour).toBe(byMorton.get(cell.morton));
    }
  });

  it("computes finite bounds", () => {
    const bounds = sceneBounds(orthographicScene(voxels));
    expect(bounds.maxX).toBeGreaterThanOrEqual(bounds.minX);
    expect(bounds.maxY).toBeGreaterThanOrEqual(bounds.minY);
  });
});
