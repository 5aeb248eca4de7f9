import { describe, expect, it } from "vitest";

import {
  canSubmit,
  previewNormalized,
  submissionJson,
  validationMessage,
} from "../src/decisionForm.js";
import { fixture } from "./helpers.js";

interface PayloadFixture {
  interests: number[][];
  weights: number[];
  comment: string;
  expected_json: string;
}

describe("decision form", () => {
  it("emits the service payload byte-equal with the engine fixture", () => {
    const fx = fixture<PayloadFixture>("decision_payload.json");
    const state = { interests: fx.interests, weights: fx.weights, comment: fx.comment };
    expect(submissionJson(state)).toBe(fx.expected_json);
  });

  it("previews (2,2) as (0.5, 0.5)", () => {
    const state = { interests: [[2], [2]], weights: [1], comment: "" };
    expect(previewNormalized(state)).toEqual([[0.5], [0.5]]);
  });

  it("disables submit on an all-zero colour column, with a message", () => {
    const state = { interests: [[1, 0], [1, 0]], weights: [1], comment: "" };
    expect(canSubmit(state)).toBe(false);
    expect(validationMessage(state)).toMatch(/colour 1/);
    expect(previewNormalized(state)).toBeNull();
  });

  it("disables submit on negative weights", () => {
    const state = { interests: [[1], [1]], weights: [-0.2], comment: "" };
    expect(canSubmit(state)).toBe(false);
    expect(validationMessage(state)).toMatch(/weights/);
  });
});
