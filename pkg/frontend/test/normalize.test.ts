import { describe, expect, it } from "vitest";

import { normalizeSlice, validateSlice } from "../src/normalize.js";
import { fixture } from "./helpers.js";

interface NormalizationFixture {
  cases: { input: number[][]; expected_json: string }[];
}

describe("normalizeSlice", () => {
  it("is byte-equal with the engine on the shared fixture", () => {
    const { cases } = fixture<NormalizationFixture>("normalization.json");
    expect(cases.length).toBeGreaterThan(0);
    for (const testCase of cases) {
      const normalized = normalizeSlice(testCase.input);
      expect(JSON.stringify(normalized)).toBe(testCase.expected_json);
    }
  });

  it("normalizes sliders (2,2) to (0.5, 0.5)", () => {
    expect(normalizeSlice([[2], [2]])).toEqual([[0.5], [0.5]]);
  });

  it("passes already-normalized slices through unchanged", () => {
    const slice = [
      [0.25, 0.5],
      [0.75, 0.5],
    ];
    expect(normalizeSlice(slice)).toEqual(slice);
    expect(normalizeSlice(slice)).not.toBe(slice); // copy, not alias
  });

  it("rejects a zero colour column", () => {
    const check = validateSlice([
      [1, 0],
      [2, 0],
    ]);
    expect(check.ok).toBe(false);
    expect(check.zeroColumns).toEqual([1]);
    expect(() => normalizeSlice([[0], [0]])).toThrow(/sums to zero/);
  });

  it("rejects negative entries", () => {
    const check = validateSlice([
      [1, -0.5],
      [2, 1],
    ]);
    expect(check.hasNegative).toBe(true);
    expect(check.ok).toBe(false);
  });
});
