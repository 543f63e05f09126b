/** In-memory stand-in for the run service. Routes and status codes mirror
 * the real endpoints: 200 accepted, 404 unknown id, 409 already measured,
 * 422 malformed payload. */

import type { FetchLike, HistoryRow, PendingCard, RunInfo } from "../src/api.js";

function genome(fill: number): number[] {
  return new Array<number>(16).fill(fill);
}

export function makeCard(requestId: number): PendingCard {
  return {
    request_id: requestId,
    run_id: "demo",
    species: requestId % 2 === 0 ? "A" : "B",
    role: "steady",
    arrangement: {
      position_a: { genome: genome(1), spin: "clockwise" },
      position_b: { genome: genome(2), spin: "counter-clockwise" },
    },
    arrangement_text:
      "Mount position A (left pin): design spinning clockwise. " +
      "Mount position B (right pin): design spinning counter-clockwise. " +
      "Measure the combined rotational speed of the pair in rpm.",
    stl: { A: `/runs/demo/A/${requestId}.stl`, B: `/runs/demo/B/${requestId}.stl` },
  };
}

export function makeRow(fab: number, rpm: number): HistoryRow {
  return {
    fab,
    species: fab % 2 === 0 ? "A" : "B",
    role: "steady",
    rpm,
    offspring: fab,
    genome: genome(3),
    partner: genome(4),
    position_a: genome(3),
    position_b: genome(4),
  };
}

export class MockService {
  rows: HistoryRow[] = [];
  queue: PendingCard[] = [];
  answered = new Set<number>();
  calls: string[] = [];
  budget = 160;

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  runInfo(): RunInfo {
    const best: number[] = [];
    for (const row of this.rows) {
      const previous = best.length === 0 ? -Infinity : best[best.length - 1];
      best.push(Math.max(previous, row.rpm));
    }
    let fittest: RunInfo["fittest"] = null;
    for (const row of this.rows) {
      if (fittest === null || row.rpm > fittest.rpm) {
        fittest = {
          fab: row.fab, rpm: row.rpm,
          position_a: row.position_a, position_b: row.position_b,
        };
      }
    }
    return {
      run_id: "demo",
      mode: "cga",
      population: 20,
      budget: this.budget,
      evaluations: this.rows.length,
      complete: this.queue.length === 0,
      best_so_far: best,
      backend: "hardware",
      config: {},
      fittest,
    };
  }

  fetch: FetchLike = async (input, init) => {
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    this.calls.push(`${method} ${path}`);

    if (method === "GET" && path === "/api/run") {
      return this.json(200, this.runInfo());
    }
    if (method === "GET" && path === "/api/history") {
      return this.json(200, { rows: this.rows });
    }
    if (method === "GET" && path === "/api/pending") {
      return this.json(200, { pending: this.queue[0] ?? null });
    }
    if (method === "POST" && path === "/api/measurement") {
      return this.measurement(init?.body);
    }
    return this.json(404, { error: "no such endpoint" });
  };

  private measurement(body: BodyInit | null | undefined): Response {
    let requestId: number;
    let rpm: number;
    try {
      const payload = JSON.parse(String(body)) as { request_id?: unknown; rpm?: unknown };
      if (typeof payload.request_id !== "number" || typeof payload.rpm !== "number") {
        throw new Error("missing fields");
      }
      requestId = payload.request_id;
      rpm = payload.rpm;
    } catch {
      return this.json(422, { error: "bad measurement payload" });
    }
    if (!Number.isFinite(rpm) || rpm < 0) {
      return this.json(422, { error: "rpm must be a finite non-negative number" });
    }
    if (this.answered.has(requestId)) {
      return this.json(409, { error: `request ${requestId} already has a measurement` });
    }
    const current = this.queue[0];
    if (current === undefined || current.request_id !== requestId) {
      return this.json(404, { error: `no pending request with id ${requestId}` });
    }
    this.answered.add(requestId);
    this.queue.shift();
    this.rows.push(makeRow(requestId, rpm));
    return this.json(200, { status: "accepted", request_id: requestId });
  }
}
