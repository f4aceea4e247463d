/** Payload-to-DOM renderers.
 *
 * Every displayed number is copied from a payload field (light formatting
 * only); raw values ride along in data-* attributes so tests can check the
 * mapping. No statistics are computed here — geometry only.
 */

import type {
  CandidateEntry,
  CandidatesPayload,
  FitPayload,
  HistoryRecord,
  LogContrastEntry,
  ScreePayload,
  SessionSummary,
} from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function fmt(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined || Number.isNaN(value)) return "—";
  return value.toFixed(digits);
}

export function methodName(method: number): string {
  if (method === 1) return "unrestricted search";
  if (method === 2) return "non-overlapping search";
  return "subcomposition search";
}

/** Current model: ratio, estimate, s.e., p-value rows. */
export function renderFitTable(container: HTMLElement, fit: FitPayload): void {
  container.replaceChildren();
  const table = el("table", { class: "fit-table" });
  const head = el("tr");
  for (const h of ["term", "estimate", "s.e.", "p-value"]) head.append(el("th", {}, h));
  table.append(head);
  fit.term_labels.forEach((label, i) => {
    const row = el("tr", {
      "data-term": label,
      "data-estimate": String(fit.coefficients[i]),
    });
    row.append(el("td", {}, label));
    row.append(el("td", {}, fmt(fit.coefficients[i])));
    row.append(el("td", {}, fmt(fit.std_errors[i])));
    row.append(el("td", {}, fmt(fit.p_values[i])));
    table.append(row);
  });
  container.append(table);
  const note = el("p", { class: "fit-note" });
  note.textContent =
    `-2logLik ${fmt(fit.minus2loglik, 2)} · objective ${fmt(fit.objective, 2)} · ` +
    `penalty/parameter ${fmt(fit.penalty_per_parameter, 4)}`;
  container.append(note);
}

export interface CandidateHandlers {
  onPick: (term: string) => void;
}

type CandidateSortKey = "rank" | "term" | "minus2loglik" | "delta_deviance" | "objective";

function sortedEntries(
  entries: readonly CandidateEntry[],
  key: CandidateSortKey,
  descending: boolean,
): CandidateEntry[] {
  const out = [...entries];
  if (key !== "rank") {
    out.sort((a, b) => {
      if (key === "term") return a.term.localeCompare(b.term);
      return a[key] - b[key];
    });
  }
  if (descending) out.reverse();
  return out;
}

/** Ranked candidates; headers re-sort, would-stop rows carry a badge and flag. */
export function renderCandidateTable(
  container: HTMLElement,
  payload: CandidatesPayload,
  handlers: CandidateHandlers,
  sortKey: CandidateSortKey = "rank",
  descending = false,
): void {
  container.replaceChildren();
  if (payload.exhausted) {
    container.append(el("p", { class: "exhausted" }, "no eligible candidates remain"));
    return;
  }
  const rankOf = new Map(payload.entries.map((e, i) => [e.term, i + 1]));
  const table = el("table", { class: "candidate-table", "data-sort": sortKey });
  const head = el("tr");
  const columns: [string, CandidateSortKey | null][] = [
    ["rank", "rank"],
    ["ratio", "term"],
    ["-2logLik", "minus2loglik"],
    ["Δ deviance", "delta_deviance"],
    ["objective", "objective"],
    ["", null],
  ];
  for (const [title, key] of columns) {
    const th = el("th", key ? { class: "sortable", "data-sort-key": key } : {}, title);
    if (key) {
      th.addEventListener("click", () => {
        const flip = sortKey === key && !descending;
        renderCandidateTable(container, payload, handlers, key, flip);
      });
    }
    head.append(th);
  }
  table.append(head);
  sortedEntries(payload.entries, sortKey, descending).forEach((entry: CandidateEntry) => {
    const row = el("tr", {
      class: entry.would_stop ? "candidate would-stop" : "candidate",
      "data-term": entry.term,
      "data-m2ll": String(entry.minus2loglik),
      "data-delta": String(entry.delta_deviance),
      "data-objective": String(entry.objective),
      "data-would-stop": String(entry.would_stop),
    });
    row.append(el("td", {}, String(rankOf.get(entry.term))));
    row.append(el("td", {}, entry.term));
    row.append(el("td", {}, fmt(entry.minus2loglik)));
    row.append(el("td", {}, fmt(entry.delta_deviance)));
    row.append(el("td", {}, fmt(entry.objective)));
    row.append(el("td", { class: "badge" }, entry.would_stop ? "would stop" : ""));
    row.addEventListener("click", () => handlers.onPick(entry.term));
    table.append(row);
  });
  container.append(table);
  for (const note of payload.diagnostics) {
    container.append(el("p", { class: "diagnostic" }, `excluded: ${note}`));
  }
}

export function renderHistory(container: HTMLElement, history: HistoryRecord[]): void {
  container.replaceChildren();
  const table = el("table", { class: "history-table" });
  const head = el("tr");
  for (const h of ["step", "term", "-2logLik", "objective", "rank", "forced"]) {
    head.append(el("th", {}, h));
  }
  table.append(head);
  for (const r of history) {
    const row = el("tr", { "data-step": String(r.step) });
    row.append(el("td", {}, String(r.step)));
    row.append(el("td", {}, r.term ?? "(start)"));
    row.append(el("td", {}, fmt(r.minus2loglik)));
    row.append(el("td", {}, fmt(r.objective)));
    row.append(el("td", {}, r.step === 0 ? "" : String(r.choice_rank)));
    row.append(el("td", {}, r.forced_choice ? "yes" : ""));
    table.append(row);
  }
  container.append(table);
}

/** Scree chart: dark incremental bars in front of light cumulative bars. */
export function renderScree(container: HTMLElement, scree: ScreePayload): void {
  container.replaceChildren();
  const width = 420;
  const height = 220;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "scree-chart",
    "data-units": scree.units,
  });
  const rows = scree.rows;
  if (!rows.length) {
    container.append(svg);
    container.append(el("p", {}, "no steps yet"));
    return;
  }
  const maxValue = scree.units === "percent" ? 100 : Math.max(...rows.map((r) => r.cumulative));
  const band = width / rows.length;
  rows.forEach((row, i) => {
    const cumH = (row.cumulative / maxValue) * (height - 30);
    const incH = (row.incremental / maxValue) * (height - 30);
    svg.append(
      svgEl("rect", {
        class: "cumulative-bar",
        x: String(i * band + 4),
        y: String(height - 20 - cumH),
        width: String(band - 8),
        height: String(Math.max(cumH, 0)),
        fill: "#c8c8c8",
        "data-step": String(row.step),
        "data-cumulative": String(row.cumulative),
      }),
    );
    svg.append(
      svgEl("rect", {
        class: "incremental-bar",
        x: String(i * band + band * 0.25),
        y: String(height - 20 - incH),
        width: String(band * 0.5 - 4),
        height: String(Math.max(incH, 0)),
        fill: "#222222",
        "data-step": String(row.step),
        "data-incremental": String(row.incremental),
      }),
    );
    const label = svgEl("text", {
      x: String(i * band + band / 2),
      y: String(height - 6),
      "text-anchor": "middle",
      "font-size": "9",
    });
    label.textContent = row.label;
    svg.append(label);
  });
  container.append(svg);
}

/** Multiplicative-effect plot with CI whiskers and the no-effect line at 1. */
export function renderEffects(
  container: HTMLElement,
  entries: LogContrastEntry[] | null,
  disabledReason: string | null,
): void {
  container.replaceChildren();
  if (!entries) {
    container.append(
      el("p", { class: "effects-disabled" }, `effects plot unavailable: ${disabledReason ?? ""}`),
    );
    return;
  }
  const width = 420;
  const height = 240;
  const svg = svgEl("svg", { viewBox: `0 0 ${width} ${height}`, class: "effects-plot" });
  const values: number[] = [];
  for (const e of entries) {
    values.push(e.multiplicative_effect);
    if (e.effect_ci_lower != null) values.push(e.effect_ci_lower);
    if (e.effect_ci_upper != null) values.push(e.effect_ci_upper);
  }
  const top = Math.max(...values, 1) * 1.15;
  const bottom = Math.min(...values, 1) / 1.15;
  const yOf = (v: number): number =>
    height - 30 - ((Math.log(v) - Math.log(bottom)) / (Math.log(top) - Math.log(bottom))) * (height - 50);

  const refY = yOf(1);
  svg.append(
    svgEl("line", {
      class: "reference-line",
      x1: "0",
      x2: String(width),
      y1: String(refY),
      y2: String(refY),
      stroke: "#888888",
      "stroke-dasharray": "4 3",
      "data-reference-value": "1",
    }),
  );
  const band = width / entries.length;
  entries.forEach((e, i) => {
    const cx = i * band + band / 2;
    if (e.effect_ci_lower != null && e.effect_ci_upper != null) {
      svg.append(
        svgEl("line", {
          class: "ci-whisker",
          x1: String(cx),
          x2: String(cx),
          y1: String(yOf(e.effect_ci_lower)),
          y2: String(yOf(e.effect_ci_upper)),
          stroke: "#444444",
          "data-part": e.part,
          "data-ci-lower": String(e.effect_ci_lower),
          "data-ci-upper": String(e.effect_ci_upper),
        }),
      );
    }
    svg.append(
      svgEl("circle", {
        class: "effect-point",
        cx: String(cx),
        cy: String(yOf(e.multiplicative_effect)),
        r: "4",
        fill: "#1f4e79",
        "data-part": e.part,
        "data-effect": String(e.multiplicative_effect),
        "data-coefficient": String(e.coefficient),
      }),
    );
    const label = svgEl("text", {
      x: String(cx),
      y: String(height - 8),
      "text-anchor": "middle",
      "font-size": "10",
    });
    label.textContent = e.part;
    svg.append(label);
  });
  container.append(svg);
}

interface DotEdge {
  from: string;
  to: string;
}

/** Minimal parser for the DOT text the service emits. */
export function parseDot(dot: string): { edges: DotEdge[]; connected: boolean } {
  const edges: DotEdge[] = [];
  for (const match of dot.matchAll(/"([^"]+)"\s*->\s*"([^"]+)"/g)) {
    edges.push({ from: match[1]!, to: match[2]! });
  }
  return { edges, connected: /\/\/\s*connected:\s*true/.test(dot) };
}

/** Selection graph: vertices on a circle, arrows denominator -> numerator. */
export function renderGraph(container: HTMLElement, dot: string): void {
  container.replaceChildren();
  const { edges, connected } = parseDot(dot);
  const parts: string[] = [];
  for (const e of edges) {
    for (const p of [e.from, e.to]) if (!parts.includes(p)) parts.push(p);
  }
  const size = 300;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${size} ${size}`,
    class: "selection-graph",
    "data-connected": String(connected),
  });
  const marker = svgEl("marker", {
    id: "arrowhead",
    markerWidth: "8",
    markerHeight: "8",
    refX: "7",
    refY: "3",
    orient: "auto",
  });
  marker.append(svgEl("path", { d: "M0,0 L8,3 L0,6 z", fill: "#333333" }));
  const defs = svgEl("defs");
  defs.append(marker);
  svg.append(defs);

  const center = size / 2;
  const radius = size / 2 - 36;
  const pos = new Map<string, { x: number; y: number }>();
  parts.forEach((p, i) => {
    const angle = (2 * Math.PI * i) / Math.max(parts.length, 1) - Math.PI / 2;
    pos.set(p, { x: center + radius * Math.cos(angle), y: center + radius * Math.sin(angle) });
  });
  edges.forEach((e, i) => {
    const a = pos.get(e.from)!;
    const b = pos.get(e.to)!;
    const dx = b.x - a.x;
    const dy = b.y - a.y;
    const len = Math.hypot(dx, dy) || 1;
    const trim = 14;
    svg.append(
      svgEl("line", {
        class: "graph-edge",
        x1: String(a.x + (dx / len) * trim),
        y1: String(a.y + (dy / len) * trim),
        x2: String(b.x - (dx / len) * trim),
        y2: String(b.y - (dy / len) * trim),
        stroke: "#333333",
        "marker-end": "url(#arrowhead)",
        "data-from": e.from,
        "data-to": e.to,
        "data-order": String(i + 1),
      }),
    );
  });
  for (const p of parts) {
    const { x, y } = pos.get(p)!;
    svg.append(svgEl("circle", { cx: String(x), cy: String(y), r: "12", fill: "#e8eef6", stroke: "#1f4e79" }));
    const label = svgEl("text", {
      x: String(x),
      y: String(y + 3),
      "text-anchor": "middle",
      "font-size": "9",
      class: "graph-label",
    });
    label.textContent = p;
    svg.append(label);
  }
  container.append(svg);
  container.append(
    el("p", { class: "graph-note" }, connected ? "graph is connected" : "graph is not connected"),
  );
}

export function renderStatus(container: HTMLElement, summary: SessionSummary): void {
  container.replaceChildren();
  container.append(
    el(
      "p",
      { class: "status-line", "data-stopped": String(summary.stopped) },
      `${methodName(summary.method)} · ${summary.criterion.kind} · step ${summary.step}` +
        (summary.alr_denominator ? ` · denominator ${summary.alr_denominator}` : "") +
        (summary.stopped ? " · stopped" : ""),
    ),
  );
}

export function renderToasts(container: HTMLElement, toasts: string[]): void {
  container.replaceChildren();
  for (const t of toasts.slice(-3)) container.append(el("p", { class: "toast" }, t));
}
