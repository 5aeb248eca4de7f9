// Client-side mirror of the engine's decision normalization.
//
// Every number displayed in the UI comes from a service payload; the one
// exception is this preview, which must therefore match the engine bit for
// bit (shared fixture tests lock it down). Column sums run left to right
// like the engine's small-row summation, and already-normalized slices
// pass through unchanged.

export const STOCHASTIC_TOL = 1e-12;

export interface SliceValidation {
  ok: boolean;
  zeroColumns: number[];
  hasNegative: boolean;
  hasNonFinite: boolean;
}

export function validateSlice(slice: number[][]): SliceValidation {
  const n = slice.length;
  const o = n > 0 ? slice[0].length : 0;
  const result: SliceValidation = {
    ok: false,
    zeroColumns: [],
    hasNegative: false,
    hasNonFinite: n === 0 || o === 0,
  };
  if (result.hasNonFinite) return result;
  for (let k = 0; k < o; k++) {
    let sum = 0;
    for (let j = 0; j < n; j++) {
      const v = slice[j][k];
      if (!Number.isFinite(v)) result.hasNonFinite = true;
      else if (v < 0) result.hasNegative = true;
      else sum += v;
    }
    if (sum === 0) result.zeroColumns.push(k);
  }
  result.ok = !result.hasNegative && !result.hasNonFinite && result.zeroColumns.length === 0;
  return result;
}

export function normalizeSlice(slice: number[][]): number[][] {
  const check = validateSlice(slice);
  if (!check.ok) {
    if (check.hasNonFinite) throw new Error("slice contains non-finite entries");
    if (check.hasNegative) throw new Error("slice contains negative entries");
    throw new Error(`colour column ${check.zeroColumns[0]} sums to zero`);
  }
  const n = slice.length;
  const o = slice[0].length;
  const sums = new Array<number>(o);
  for (let k = 0; k < o; k++) {
    let sum = 0;
    for (let j = 0; j < n; j++) sum += slice[j][k];
    sums[k] = sum;
  }
  const allStochastic = sums.every((s) => Math.abs(s - 1.0) <= STOCHASTIC_TOL);
  if (allStochastic) return slice.map((row) => row.slice());
  return slice.map((row) => row.map((v, k) => v / sums[k]));
}
