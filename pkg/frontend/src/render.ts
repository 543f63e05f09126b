/** DOM rendering. The whole console is rebuilt on every state change; the
 * tree is small and the poll cadence is seconds, so diffing would buy
 * nothing. */

import type { PendingCard } from "./api.js";
import { chartPoints, sortRows, stepPath, type AppState, type SortKey } from "./state.js";

export interface Actions {
  submit(text: string): void;
  sortBy(key: SortKey): void;
  stlUrl(species: string): string;
}

const CHART_WIDTH = 640;
const CHART_HEIGHT = 240;
const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function header(state: AppState): HTMLElement {
  const section = el("header");
  section.append(el("h1", {}, "turbine pair design mining"));
  if (!state.reachable) {
    section.append(
      el("div", { class: "banner", "data-testid": "degraded" },
        "service unreachable; retrying..."),
    );
  }
  const run = state.run;
  if (run !== null) {
    const status = run.complete ? "complete" : "running";
    section.append(
      el("p", { class: "status", "data-testid": "run-status" },
        `${run.run_id} | mode ${run.mode} | ${run.backend} backend | ` +
        `${run.evaluations} of ${run.budget} evaluations | ${status}`),
    );
    if (run.fittest !== null) {
      section.append(
        el("p", { class: "fittest", "data-testid": "fittest" },
          `fittest pairing: fabrication ${run.fittest.fab} at ${run.fittest.rpm} rpm`),
      );
    }
  }
  return section;
}

function pendingSection(state: AppState, actions: Actions): HTMLElement {
  const section = el("section", { id: "pending" });
  section.append(el("h2", {}, "measurement"));
  const card = state.pending;
  if (card === null) {
    section.append(
      el("p", { class: "idle", "data-testid": "idle" },
        "evolving / idle; no measurement pending"),
    );
    return section;
  }
  section.append(pendingCard(card, state, actions));
  return section;
}

function pendingCard(card: PendingCard, state: AppState, actions: Actions): HTMLElement {
  const box = el("div", { class: "card", "data-testid": "pending-card" });
  box.append(
    el("p", {}, `request ${card.request_id} | fabrication ${card.request_id} | ` +
      `species ${card.species} | role ${card.role}`),
    el("p", { class: "instructions" }, card.arrangement_text),
  );

  const spins = el("ul", { class: "spins" });
  spins.append(
    el("li", {}, `position A: spin ${card.arrangement.position_a.spin}`),
    el("li", {}, `position B: spin ${card.arrangement.position_b.spin}`),
  );
  box.append(spins);

  // exactly the files the service lists for this request, nothing invented
  const links = el("p", { class: "stl-links", "data-testid": "stl-links" });
  for (const species of Object.keys(card.stl).sort()) {
    const link = el("a", { href: actions.stlUrl(species), download: "" },
      `download ${species}.stl`);
    links.append(link, document.createTextNode(" "));
  }
  box.append(links);

  const form = el("form", { "data-testid": "measurement-form" });
  const input = el("input", {
    type: "number", id: "rpm-input", min: "0", step: "any",
    placeholder: "measured rpm",
  });
  const button = el("button", { type: "submit" }, "submit measurement");
  if (state.inFlight) {
    button.setAttribute("disabled", "");
  }
  form.append(input, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    actions.submit(input.value);
  });
  box.append(form);

  if (state.notice !== "") {
    box.append(el("p", { class: "notice", "data-testid": "notice" }, state.notice));
  }
  return box;
}

function progressSection(state: AppState): HTMLElement {
  const section = el("section", { id: "progress" });
  section.append(el("h2", {}, "best so far"));
  const run = state.run;
  if (run === null || run.best_so_far.length === 0) {
    section.append(
      el("p", { class: "empty", "data-testid": "empty-chart" }, "no evaluations yet"),
    );
    return section;
  }

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`);
  svg.setAttribute("width", String(CHART_WIDTH));
  svg.setAttribute("height", String(CHART_HEIGHT));
  svg.setAttribute("role", "img");

  const points = chartPoints(run.best_so_far, CHART_WIDTH, CHART_HEIGHT);
  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("d", stepPath(points));
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "#2a6");
  path.setAttribute("stroke-width", "2");
  // the series exactly as the service reported it; tests hold us to this
  path.setAttribute("data-values", JSON.stringify(run.best_so_far));
  svg.append(path);
  section.append(svg);
  return section;
}

const COLUMNS: { key: SortKey; label: string }[] = [
  { key: "fab", label: "fab" },
  { key: "species", label: "species" },
  { key: "role", label: "role" },
  { key: "rpm", label: "rpm" },
];

function historySection(state: AppState, actions: Actions): HTMLElement {
  const section = el("section", { id: "history" });
  section.append(el("h2", {}, "evaluation history"));
  if (state.history.length === 0) {
    section.append(
      el("p", { class: "empty", "data-testid": "empty-history" }, "no evaluations yet"),
    );
    return section;
  }

  const table = el("table", { "data-testid": "history-table" });
  const head = el("thead");
  const headRow = el("tr");
  for (const column of COLUMNS) {
    const cell = el("th", { "data-key": column.key });
    const marker = state.sortKey === column.key ? (state.sortAscending ? " ^" : " v") : "";
    const button = el("button", { type: "button" }, column.label + marker);
    button.addEventListener("click", () => actions.sortBy(column.key));
    cell.append(button);
    headRow.append(cell);
  }
  headRow.append(el("th", {}, "genome"), el("th", {}, "partner"));
  head.append(headRow);
  table.append(head);

  const body = el("tbody");
  for (const row of sortRows(state.history, state.sortKey, state.sortAscending)) {
    const tr = el("tr");
    tr.append(
      el("td", {}, String(row.fab)),
      el("td", {}, row.species),
      el("td", {}, row.role),
      el("td", { class: "rpm" }, String(row.rpm)),
      el("td", { class: "genome" }, row.genome.join(" ")),
      el("td", { class: "genome" }, row.partner.join(" ")),
    );
    body.append(tr);
  }
  table.append(body);
  section.append(table);
  return section;
}

export function render(state: AppState, root: HTMLElement, actions: Actions): void {
  root.textContent = "";
  root.append(
    header(state),
    pendingSection(state, actions),
    progressSection(state),
    historySection(state, actions),
  );
}
