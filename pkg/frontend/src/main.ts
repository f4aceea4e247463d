/** Browser wiring: setup wizard, candidate/fit panes, visual tabs. */

import { SessionClient } from "./api.js";
import {
  methodName,
  renderCandidateTable,
  renderEffects,
  renderFitTable,
  renderGraph,
  renderHistory,
  renderScree,
  renderStatus,
  renderToasts,
} from "./render.js";
import { SessionStore } from "./state.js";
import type { UiSessionView } from "./state.js";

const API_BASE = (window as { LRSELECT_API?: string }).LRSELECT_API ?? "http://127.0.0.1:8000";

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

export function wireApp(root: Document = document): SessionStore {
  const client = new SessionClient(API_BASE);
  const store = new SessionStore(client, (msg) => window.confirm(msg), render);

  function render(view: UiSessionView): void {
    const setup = byId("setup-pane");
    const work = byId("work-pane");
    renderToasts(byId("toasts"), view.toasts);
    if (!view.summary) {
      setup.hidden = false;
      work.hidden = true;
      byId("setup-error").textContent = view.setupError ?? "";
      return;
    }
    byId("setup-error").textContent = "";
    setup.hidden = true;
    work.hidden = false;
    renderStatus(byId("status"), view.summary);
    renderFitTable(byId("fit-pane"), view.summary.fit);
    renderHistory(byId("history-pane"), view.summary.history);
    if (view.candidates) {
      renderCandidateTable(byId("candidates-pane"), view.candidates, {
        onPick: (term) => void store.pickCandidate(term),
      });
    } else {
      byId("candidates-pane").replaceChildren();
      byId("candidates-pane").append(
        Object.assign(root.createElement("p"), {
          textContent: view.summary.stopped
            ? "session stopped — undo a step to continue, or read the reports"
            : "no candidates",
        }),
      );
    }
    if (view.scree) renderScree(byId("scree-pane"), view.scree);
    if (view.graphDot) renderGraph(byId("graph-pane"), view.graphDot);
    renderEffects(byId("effects-pane"), view.effects, view.effectsDisabledReason);
  }

  const form = byId("setup-form") as HTMLFormElement;
  const methodSelect = byId("method") as HTMLSelectElement;
  const flowLabel = byId("flow-label");
  methodSelect.addEventListener("change", () => {
    flowLabel.textContent = methodName(Number(methodSelect.value));
  });
  flowLabel.textContent = methodName(Number(methodSelect.value));

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const file = data.get("csv") as File | null;
    const finish = (csvText: string) =>
      void store.create({
        csv_text: csvText,
        response: String(data.get("response") || "y"),
        family: String(data.get("family") || "binomial"),
        method: Number(data.get("method") || 1),
        criterion: String(data.get("criterion") || "bic"),
        alpha: Number(data.get("alpha") || 0.05),
        forced_terms: String(data.get("forced") || "")
          .split(",")
          .map((s) => s.trim())
          .filter(Boolean),
        seed: Number(data.get("seed") || 0),
      });
    if (file && file.size) {
      void file.text().then(finish);
    } else {
      finish(String(data.get("csv_text") || ""));
    }
  });

  byId("step-optimal").addEventListener("click", () => void store.stepOptimal());
  byId("undo").addEventListener("click", () => void store.undo());
  byId("bootstrap").addEventListener("click", () => void store.loadBootstrapIntervals(400));
  byId("refresh").addEventListener("click", () => void store.refresh());
  return store;
}

if (typeof document !== "undefined" && document.getElementById("setup-form")) {
  wireApp();
}
