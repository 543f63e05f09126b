/** Typed client for the run service. Every number the console displays is
 * read through this module and passed on verbatim; the client never
 * recomputes fitness or progress figures. */

export interface FittestPair {
  fab: number;
  rpm: number;
  position_a: number[];
  position_b: number[];
}

export interface RunInfo {
  run_id: string;
  mode: string;
  population: number;
  budget: number;
  evaluations: number;
  complete: boolean;
  best_so_far: number[];
  backend: string;
  config: Record<string, unknown>;
  fittest: FittestPair | null;
}

export interface HistoryRow {
  fab: number;
  species: string;
  role: string;
  rpm: number;
  offspring: number | null;
  genome: number[];
  partner: number[];
  position_a: number[];
  position_b: number[];
}

export interface MountPlan {
  genome: number[];
  spin: string;
}

export interface PendingCard {
  request_id: number;
  run_id: string;
  species: string;
  role: string;
  arrangement: { position_a: MountPlan; position_b: MountPlan };
  arrangement_text: string;
  stl: Record<string, string>;
}

export type SubmitOutcome =
  | { kind: "accepted"; requestId: number }
  | { kind: "rejected"; status: number; message: string }
  | { kind: "unreachable"; message: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const browserFetch: FetchLike = (input, init) => fetch(input, init);

export class ApiClient {
  constructor(
    readonly base: string = "",
    private readonly fetchFn: FetchLike = browserFetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) {
      throw new Error(`GET ${path} failed with status ${response.status}`);
    }
    return (await response.json()) as T;
  }

  run(): Promise<RunInfo> {
    return this.getJson<RunInfo>("/api/run");
  }

  async history(): Promise<HistoryRow[]> {
    const payload = await this.getJson<{ rows: HistoryRow[] }>("/api/history");
    return payload.rows;
  }

  async pending(): Promise<PendingCard | null> {
    const payload = await this.getJson<{ pending: PendingCard | null }>("/api/pending");
    return payload.pending;
  }

  /** Download URL for one turbine of the pending pair ("A" or "B"). */
  stlUrl(species: string): string {
    return `${this.base}/api/pending/${species}.stl`;
  }

  async submit(requestId: number, rpm: number): Promise<SubmitOutcome> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}/api/measurement`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ request_id: requestId, rpm }),
      });
    } catch (error) {
      return { kind: "unreachable", message: String(error) };
    }
    if (response.ok) {
      return { kind: "accepted", requestId };
    }
    let message = `status ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) {
        message = body.error;
      }
    } catch {
      // non-JSON error body; the status line is all we have
    }
    return { kind: "rejected", status: response.status, message };
  }
}
