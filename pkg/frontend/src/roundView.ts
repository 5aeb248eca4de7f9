// Live round view state: score charts, badge banners, and the voxel diff
// between consecutive mass configurations.

import type {
  ActorRef,
  PublicBadges,
  RoundCompleteEvent,
  Snapshot,
  VoxelRecord,
} from "./types.js";
import type { StreamEvent } from "./sse.js";

export interface ChartSeries {
  name: string;
  values: number[];
}

export function scoreSeries(snapshot: Snapshot): ChartSeries[] {
  const fieldNames = Object.keys(snapshot.score_history[0]?.fields ?? {}).sort();
  const series: ChartSeries[] = fieldNames.map((name) => ({
    name: `field:${name}`,
    values: snapshot.score_history.map((s) => s.fields[name].normalized),
  }));
  series.push({
    name: "transport_efficacy",
    values: snapshot.score_history.map((s) => s.transport_efficacy),
  });
  series.push({
    name: "change_score",
    values: snapshot.score_history.map((s) => s.change_score),
  });
  return series;
}

export function gainSeries(snapshot: Snapshot): ChartSeries[] {
  return snapshot.actors.map((actor, i) => ({
    name: actor.name,
    values: snapshot.gain_history.map((round) => round[i]),
  }));
}

export interface BadgeBanner {
  round: number;
  gainer: string;
  player: string | null;
  contributor: string | null;
}

function actorName(actors: ActorRef[], index: number | null): string | null {
  if (index === null || index < 0 || index >= actors.length) return null;
  return actors[index].name;
}

export function badgeBanner(
  round: number,
  badges: PublicBadges,
  actors: ActorRef[],
): BadgeBanner {
  return {
    round,
    gainer: actorName(actors, badges.gainer) ?? `actor ${badges.gainer}`,
    player: actorName(actors, badges.player),
    contributor: actorName(actors, badges.contributor),
  };
}

export interface VoxelDiff {
  added: VoxelRecord[];
  removed: VoxelRecord[];
  recoloured: { morton: number; from: number; to: number }[];
  unchanged: number;
}

export function voxelDiff(previous: VoxelRecord[] | null, next: VoxelRecord[]): VoxelDiff {
  const before = new Map<number, VoxelRecord>();
  for (const v of previous ?? []) before.set(v.morton, v);
  const diff: VoxelDiff = { added: [], removed: [], recoloured: [], unchanged: 0 };
  for (const v of next) {
    const prev = before.get(v.morton);
    if (prev === undefined) {
      diff.added.push(v);
    } else {
      if (prev.colour !== v.colour) {
        diff.recoloured.push({ morton: v.morton, from: prev.colour, to: v.colour });
      } else {
        diff.unchanged += 1;
      }
      before.delete(v.morton);
    }
  }
  diff.removed = [...before.values()];
  return diff;
}

export function diffIsEmpty(diff: VoxelDiff): boolean {
  return diff.added.length === 0 && diff.removed.length === 0 && diff.recoloured.length === 0;
}

/** Ordered application of the event stream into a render-ready feed. */
export class RoundFeed {
  banners: BadgeBanner[] = [];
  decisionsPending = 0;
  currentRound = 0;
  connectionLost = false;

  constructor(private actors: ActorRef[]) {}

  apply(event: StreamEvent): void {
    if (event.event === "ROUND_STARTED") {
      const data = JSON.parse(event.data) as { t: number };
      this.currentRound = data.t;
      this.decisionsPending = 0;
    } else if (event.event === "DECISION_RECEIVED") {
      const data = JSON.parse(event.data) as { count: number };
      this.decisionsPending = data.count;
    } else if (event.event === "ROUND_COMPLETE") {
      const data = JSON.parse(event.data) as RoundCompleteEvent;
      this.banners.push(badgeBanner(data.t, data.badges, this.actors));
    } else if (event.event === "RESYNC") {
      this.connectionLost = true;
    }
  }
}
