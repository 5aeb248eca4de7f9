// Decision form model: slider state in, service-schema payload out.
// Raw slider values are submitted as-is; the engine normalizes server-side.
// The preview pane shows the client-side normalization, which is fixture-
// locked to the engine's.

import { normalizeSlice, validateSlice } from "./normalize.js";
import type { DecisionPayload } from "./types.js";

export interface FormState {
  interests: number[][];
  weights: number[];
  comment: string;
}

export function weightsValid(weights: number[]): boolean {
  return weights.length > 0 && weights.every((w) => Number.isFinite(w) && w >= 0);
}

export function canSubmit(state: FormState): boolean {
  return validateSlice(state.interests).ok && weightsValid(state.weights);
}

export function validationMessage(state: FormState): string | null {
  const check = validateSlice(state.interests);
  if (check.hasNonFinite) return "interest sliders contain invalid values";
  if (check.hasNegative) return "interest sliders must be nonnegative";
  if (check.zeroColumns.length > 0) {
    return `give at least one site a share of colour ${check.zeroColumns.join(", ")}`;
  }
  if (!weightsValid(state.weights)) return "criteria weights must be nonnegative";
  return null;
}

export function previewNormalized(state: FormState): number[][] | null {
  return validateSlice(state.interests).ok ? normalizeSlice(state.interests) : null;
}

export function submissionPayload(state: FormState): DecisionPayload {
  if (!canSubmit(state)) {
    throw new Error(validationMessage(state) ?? "invalid decision");
  }
  return {
    interests: state.interests.map((row) => row.slice()),
    weights: state.weights.slice(),
    comment: state.comment,
  };
}

export function submissionJson(state: FormState): string {
  return JSON.stringify(submissionPayload(state));
}
