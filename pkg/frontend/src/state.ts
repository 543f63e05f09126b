/** Console state and the pure view helpers. Values flow from the API
 * payloads straight to the screen; nothing here accumulates, rounds, or
 * otherwise re-derives a fitness figure. */

import type { HistoryRow, PendingCard, RunInfo } from "./api.js";

export type SortKey = "fab" | "species" | "role" | "rpm";

export interface AppState {
  reachable: boolean;
  run: RunInfo | null;
  history: HistoryRow[];
  pending: PendingCard | null;
  inFlight: boolean;
  notice: string;
  sortKey: SortKey;
  sortAscending: boolean;
}

export function initialState(): AppState {
  return {
    reachable: true,
    run: null,
    history: [],
    pending: null,
    inFlight: false,
    notice: "",
    sortKey: "fab",
    sortAscending: true,
  };
}

/** Mirrors the server's acceptance rule (finite, non-negative number); the
 * server remains authoritative. Returns null for anything it would 422. */
export function parseRpm(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") {
    return null;
  }
  const value = Number(trimmed);
  return Number.isFinite(value) && value >= 0 ? value : null;
}

export interface ChartPoint {
  x: number;
  y: number;
  value: number;
}

/** One chart point per evaluation, in payload order, values untouched. */
export function chartPoints(
  series: readonly number[],
  width: number,
  height: number,
  pad = 10,
): ChartPoint[] {
  if (series.length === 0) {
    return [];
  }
  let lo = series[0];
  let hi = series[0];
  for (const value of series) {
    lo = Math.min(lo, value);
    hi = Math.max(hi, value);
  }
  const span = hi - lo || 1;
  const dx = series.length > 1 ? (width - 2 * pad) / (series.length - 1) : 0;
  return series.map((value, index) => ({
    x: pad + index * dx,
    y: height - pad - ((value - lo) / span) * (height - 2 * pad),
    value,
  }));
}

/** SVG path for a step-after line: the best-so-far value holds until the
 * next evaluation changes it. */
export function stepPath(points: readonly ChartPoint[]): string {
  if (points.length === 0) {
    return "";
  }
  const parts = [`M ${points[0].x} ${points[0].y}`];
  for (let i = 1; i < points.length; i += 1) {
    parts.push(`H ${points[i].x}`);
    parts.push(`V ${points[i].y}`);
  }
  return parts.join(" ");
}

/** Non-mutating sort for the history table; rows pass through unchanged. */
export function sortRows(
  rows: readonly HistoryRow[],
  key: SortKey,
  ascending: boolean,
): HistoryRow[] {
  const direction = ascending ? 1 : -1;
  return [...rows].sort((a, b) => {
    const left = a[key];
    const right = b[key];
    if (left < right) {
      return -direction;
    }
    if (left > right) {
      return direction;
    }
    return 0;
  });
}
