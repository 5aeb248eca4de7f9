import { describe, expect, it } from "vitest";

import {
  RoundFeed,
  badgeBanner,
  diffIsEmpty,
  gainSeries,
  scoreSeries,
  voxelDiff,
} from "../src/roundView.js";
import type { RecordView, RoundCompleteEvent, Snapshot } from "../src/types.js";
import { fixture } from "./helpers.js";

const snapshot = fixture<Snapshot>("snapshot.json");
const round0 = fixture<RecordView>("round0_view.json");
const round1 = fixture<RecordView>("round1_view.json");
const completeEvent = fixture<RoundCompleteEvent>("round_complete_event.json");

describe("score charts", () => {
  it("chart series equal the payload series", () => {
    const series = scoreSeries(snapshot);
    const byName = Object.fromEntries(series.map((s) => [s.name, s.values]));
    expect(byName["transport_efficacy"]).toEqual(
      snapshot.score_history.map((s) => s.transport_efficacy),
    );
    expect(byName["change_score"]).toEqual(snapshot.score_history.map((s) => s.change_score));
    for (const name of Object.keys(snapshot.score_history[0].fields)) {
      expect(byName[`field:${name}`]).toEqual(
        snapshot.score_history.map((s) => s.fields[name].normalized),
      );
    }
  });

  it("gain series carry one line per actor", () => {
    const series = gainSeries(snapshot);
    expect(series).toHaveLength(snapshot.actors.length);
    series.forEach((line, i) => {
      expect(line.values).toEqual(snapshot.gain_history.map((round) => round[i]));
    });
  });
});

describe("badge banner", () => {
  it("names match the event payload", () => {
    const banner = badgeBanner(completeEvent.t, completeEvent.badges, snapshot.actors);
    expect(banner.gainer).toBe(snapshot.actors[completeEvent.badges.gainer].name);
    if (completeEvent.badges.player !== null) {
      expect(banner.player).toBe(snapshot.actors[completeEvent.badges.player].name);
    }
    if (completeEvent.badges.contributor !== null) {
      expect(banner.contributor).toBe(snapshot.actors[completeEvent.badges.contributor].name);
    }
  });

  it("never mentions a loser", () => {
    expect("loser" in completeEvent.badges).toBe(false);
    const banner = badgeBanner(completeEvent.t, completeEvent.badges, snapshot.actors);
    expect(JSON.stringify(banner)).not.toContain("loser");
  });
});

describe("voxel diff", () => {
  it("is zero across two identical consecutive configurations", () => {
    const diff = voxelDiff(round0.voxels, round1.voxels);
    expect(diffIsEmpty(diff)).toBe(true);
    expect(diff.unchanged).toBe(round0.voxels.length);
  });

  it("detects additions, removals, and recolours", () => {
    const prev = [
      { morton: 1, site: 0, colour: 0 },
      { morton: 2, site: 0, colour: 1 },
      { morton: 3, site: 1, colour: 2 },
    ];
    const next = [
      { morton: 2, site: 0, colour: 3 },
      { morton: 3, site: 1, colour: 2 },
      { morton: 9, site: 1, colour: 0 },
    ];
    const diff = voxelDiff(prev, next);
    expect(diff.added.map((v) => v.morton)).toEqual([9]);
    expect(diff.removed.map((v) => v.morton)).toEqual([1]);
    expect(diff.recoloured).toEqual([{ morton: 2, from: 1, to: 3 }]);
    expect(diff.unchanged).toBe(1);
  });

  it("treats the first round as all additions", () => {
    const diff = voxelDiff(null, round0.voxels);
    expect(diff.added).toHaveLength(round0.voxels.length);
  });
});

describe("round feed", () => {
  it("applies a replayed stream in order", () => {
    const feed = new RoundFeed(snapshot.actors);
    feed.apply({ id: 1, event: "ROUND_STARTED", data: JSON.stringify({ t: 0 }) });
    feed.apply({ id: 2, event: "DECISION_RECEIVED", data: JSON.stringify({ round: 0, count: 1 }) });
    feed.apply({ id: 3, event: "ROUND_COMPLETE", data: JSON.stringify(completeEvent) });
    feed.apply({ id: 4, event: "ROUND_STARTED", data: JSON.stringify({ t: 1 }) });
    expect(feed.banners).toHaveLength(1);
    expect(feed.currentRound).toBe(1);
    expect(feed.decisionsPending).toBe(0);
    expect(feed.connectionLost).toBe(false);
  });

  it("flags a resync hint as a lost connection", () => {
    const feed = new RoundFeed(snapshot.actors);
    feed.apply({ id: null, event: "RESYNC", data: "{}" });
    expect(feed.connectionLost).toBe(true);
  });
});
