// Game-master dashboard rendering: ANOVA table, Levene line, round stats,
// interaction polylines, and the time-vs-score panel. Only visible with a
// master token; the loser field appears here and nowhere else.

import type { AnalyticsReport, AnovaRow } from "./types.js";

export interface Table {
  header: string[];
  rows: (string | number | null)[][];
}

export function anovaTable(report: AnalyticsReport): Table {
  return {
    header: ["Source", "SS", "df", "MS", "F", "p", "eta^2"],
    rows: report.anova.map((row: AnovaRow) => [
      row.source,
      row.ss,
      row.df,
      row.ms,
      row.f,
      row.p,
      row.eta_sq,
    ]),
  };
}

export function leveneLine(report: AnalyticsReport): string {
  if (report.levene.error !== undefined) return `Levene: ${report.levene.error}`;
  const { w, df, p } = report.levene;
  return `Levene W = ${w} (df ${df![0]}, ${df![1]}), p = ${p}`;
}

export function roundStatsTable(report: AnalyticsReport): Table {
  return {
    header: ["Round", "Mean", "Std"],
    rows: report.round_stats.map((r) => [r.round, r.mean, r.std]),
  };
}

export interface Polyline {
  label: string;
  points: [number, number][];
}

export interface InteractionPlot {
  title: string;
  xLabels: number[];
  lines: Polyline[];
}

export function interactionPolylines(report: AnalyticsReport): InteractionPlot[] {
  return report.interactions.map((inter) => ({
    title: `${inter.factor_a} x ${inter.factor_b}`,
    xLabels: inter.levels_b,
    lines: inter.levels_a.map((level, idx) => ({
      label: `${inter.factor_a} ${level}`,
      points: inter.means[idx].map((mean, x) => [x, mean] as [number, number]),
    })),
  }));
}

export function timeScorePanel(report: AnalyticsReport): Table {
  return {
    header: ["Score", "Status", "r"],
    rows: report.correlations.map((c) => [c.name, c.status, c.r]),
  };
}

export interface Dashboard {
  visible: boolean;
  anova?: Table;
  levene?: string;
  roundStats?: Table;
  interactions?: InteractionPlot[];
  timeScore?: Table;
}

/** Null report (403 from the service) hides the whole panel. */
export function masterDashboard(report: AnalyticsReport | null): Dashboard {
  if (report === null) return { visible: false };
  return {
    visible: true,
    anova: anovaTable(report),
    levene: leveneLine(report),
    roundStats: roundStatsTable(report),
    interactions: interactionPolylines(report),
    timeScore: timeScorePanel(report),
  };
}
