/** Poll loop and submission state machine.
 *
 * At most one measurement POST is ever in flight; the submit button stays
 * disabled until the outcome lands. A failed poll flips the degraded banner
 * but keeps the last good payloads on screen, and the loop keeps retrying.
 */

import type { ApiClient } from "./api.js";
import { initialState, parseRpm, type AppState, type SortKey } from "./state.js";

export const POLL_INTERVAL_MS = 2000;

export class ConsoleController {
  state: AppState = initialState();

  constructor(
    private readonly api: ApiClient,
    private onChange: (state: AppState) => void = () => {},
  ) {}

  subscribe(listener: (state: AppState) => void): void {
    this.onChange = listener;
  }

  private update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async refresh(): Promise<void> {
    try {
      const [run, history, pending] = await Promise.all([
        this.api.run(),
        this.api.history(),
        this.api.pending(),
      ]);
      this.update({ run, history, pending, reachable: true });
    } catch {
      this.update({ reachable: false });
    }
  }

  async submit(text: string): Promise<void> {
    if (this.state.inFlight || this.state.pending === null) {
      return;
    }
    const rpm = parseRpm(text);
    if (rpm === null) {
      this.update({ notice: "rpm must be a finite non-negative number" });
      return;
    }
    const requestId = this.state.pending.request_id;
    this.update({ inFlight: true, notice: "" });
    const outcome = await this.api.submit(requestId, rpm);
    if (outcome.kind === "accepted") {
      this.update({ inFlight: false, notice: `measurement for request ${requestId} accepted` });
      await this.refresh();
    } else if (outcome.kind === "rejected") {
      this.update({ inFlight: false, notice: `${outcome.status}: ${outcome.message}` });
    } else {
      this.update({ inFlight: false, notice: `service unreachable: ${outcome.message}` });
    }
  }

  setSort(key: SortKey): void {
    if (this.state.sortKey === key) {
      this.update({ sortAscending: !this.state.sortAscending });
    } else {
      this.update({ sortKey: key, sortAscending: true });
    }
  }

  /** Start polling; returns a stop function. */
  start(intervalMs: number = POLL_INTERVAL_MS): () => void {
    void this.refresh();
    const timer = setInterval(() => void this.refresh(), intervalMs);
    return () => clearInterval(timer);
  }
}
