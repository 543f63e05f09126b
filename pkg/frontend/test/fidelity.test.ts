/** Display fidelity at the view-model level: chart and table values are the
 * API payloads verbatim, never recomputed. */

import { describe, expect, it } from "vitest";

import { chartPoints, parseRpm, sortRows, stepPath } from "../src/state.js";
import { makeRow } from "./mock.js";

describe("chart view model", () => {
  it("mirrors the series verbatim, one point per evaluation", () => {
    // deliberately non-monotone: a client recomputing a running max would
    // silently repair this, which is exactly what must not happen
    const series = [3.5, 1.25, 2.0, 2.0, 9.75];
    const points = chartPoints(series, 640, 240);
    expect(points.map((p) => p.value)).toEqual(series);
  });

  it("lays points out left to right within the padded box", () => {
    const points = chartPoints([1, 5, 2, 8], 640, 240, 10);
    for (let i = 1; i < points.length; i += 1) {
      expect(points[i].x).toBeGreaterThan(points[i - 1].x);
    }
    for (const point of points) {
      expect(point.x).toBeGreaterThanOrEqual(10);
      expect(point.x).toBeLessThanOrEqual(630);
      expect(point.y).toBeGreaterThanOrEqual(10);
      expect(point.y).toBeLessThanOrEqual(230);
    }
  });

  it("handles single-point and constant series", () => {
    expect(chartPoints([7], 640, 240)).toHaveLength(1);
    const flat = chartPoints([4, 4, 4], 640, 240);
    expect(new Set(flat.map((p) => p.y)).size).toBe(1);
    expect(chartPoints([], 640, 240)).toEqual([]);
    expect(stepPath([])).toBe("");
  });

  it("renders a step-after path", () => {
    const path = stepPath(chartPoints([1, 2, 3], 100, 100, 0));
    expect(path.startsWith("M ")).toBe(true);
    expect(path.match(/H /g)).toHaveLength(2);
    expect(path.match(/V /g)).toHaveLength(2);
  });
});

describe("history view model", () => {
  it("sorting permutes rows without touching their values", () => {
    const rows = [makeRow(0, 50.125), makeRow(1, 10.5), makeRow(2, 99.9)];
    const sorted = sortRows(rows, "rpm", false);
    expect(sorted.map((r) => r.rpm)).toEqual([99.9, 50.125, 10.5]);
    expect(sorted).toHaveLength(rows.length);
    // same row objects, new order; the originals are untouched
    expect(new Set(sorted)).toEqual(new Set(rows));
    expect(rows.map((r) => r.fab)).toEqual([0, 1, 2]);
  });

  it("keeps every row: 160 journaled evaluations give 160 table rows", () => {
    const rows = Array.from({ length: 160 }, (_, i) => makeRow(i, 1000 + i));
    expect(sortRows(rows, "fab", true)).toHaveLength(160);
  });

  it("sorts ascending and descending on any column", () => {
    const rows = [makeRow(2, 5), makeRow(0, 7), makeRow(1, 6)];
    expect(sortRows(rows, "fab", true).map((r) => r.fab)).toEqual([0, 1, 2]);
    expect(sortRows(rows, "fab", false).map((r) => r.fab)).toEqual([2, 1, 0]);
    expect(sortRows(rows, "species", true)[0].species).toBe("A");
  });
});

describe("rpm validation mirror", () => {
  it("accepts what the server accepts", () => {
    expect(parseRpm("2429")).toBe(2429);
    expect(parseRpm(" 12.5 ")).toBe(12.5);
    expect(parseRpm("0")).toBe(0);
  });

  it("rejects what the server 422s", () => {
    for (const bad of ["-1", "abc", "Infinity", "-Infinity", "NaN", ""]) {
      expect(parseRpm(bad)).toBeNull();
    }
  });
});
