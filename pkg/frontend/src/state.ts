/** Client-side session state machine.
 *
 * The store owns the latest server payloads and the version token; every
 * mutation sends the token and a stale 409 triggers a silent refetch plus a
 * toast. The UI layer renders from `view` and never derives statistics —
 * each number on screen comes from a payload field.
 */

import { ApiError, SessionClient } from "./api.js";
import type {
  CandidatesPayload,
  CreateSessionBody,
  LogContrastEntry,
  ScreePayload,
  SessionSummary,
} from "./types.js";

export type Phase = "setup" | "stepping" | "stopped";

export interface UiSessionView {
  summary: SessionSummary | null;
  candidates: CandidatesPayload | null;
  scree: ScreePayload | null;
  graphDot: string | null;
  effects: LogContrastEntry[] | null;
  effectsDisabledReason: string | null;
  toasts: string[];
  setupError: string | null;
}

export type ConfirmFn = (message: string) => boolean | Promise<boolean>;

export class SessionStore {
  view: UiSessionView = {
    summary: null,
    candidates: null,
    scree: null,
    graphDot: null,
    effects: null,
    effectsDisabledReason: null,
    toasts: [],
    setupError: null,
  };

  topK = 20;

  constructor(
    private readonly client: SessionClient,
    private readonly confirmFn: ConfirmFn = () => true,
    private readonly onChange: (view: UiSessionView) => void = () => {},
  ) {}

  phase(): Phase {
    if (!this.view.summary) return "setup";
    return this.view.summary.stopped ? "stopped" : "stepping";
  }

  private emit(): void {
    this.onChange(this.view);
  }

  private toast(message: string): void {
    this.view.toasts = [...this.view.toasts, message];
  }

  async create(body: CreateSessionBody): Promise<void> {
    this.view.setupError = null;
    try {
      this.view.summary = await this.client.createSession(body);
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        this.view.setupError = String(err.detail);
        this.emit();
        return;
      }
      throw err;
    }
    await this.refresh();
  }

  /** Refetch everything renderable for the current session. */
  async refresh(): Promise<void> {
    const summary = this.view.summary;
    if (!summary) return;
    this.view.summary = await this.client.getSession(summary.id);
    const id = this.view.summary.id;

    if (this.view.summary.stopped) {
      this.view.candidates = null;
    } else {
      try {
        this.view.candidates = await this.client.getCandidates(id, this.topK);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          this.view.candidates = null; // stopped between the two calls
        } else {
          throw err;
        }
      }
    }

    this.view.scree = (await this.client.screeReport(id)).scree;
    this.view.graphDot = await this.client.graphDot(id);

    if (this.view.summary.selected.length || this.view.summary.forced_terms.length) {
      try {
        this.view.effects = (await this.client.logcontrastReport(id)).logcontrast;
        this.view.effectsDisabledReason = null;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          this.view.effects = null;
          this.view.effectsDisabledReason = String(err.detail);
        } else {
          throw err;
        }
      }
    } else {
      this.view.effects = null;
      this.view.effectsDisabledReason = "no terms selected yet";
    }
    this.emit();
  }

  /** Attach bootstrap CIs to the effects plot (heavier call, on demand). */
  async loadBootstrapIntervals(b = 400, seed?: number): Promise<void> {
    const summary = this.view.summary;
    if (!summary) return;
    try {
      const payload = await this.client.bootstrapReport(summary.id, b, seed);
      this.view.effects = payload.logcontrast;
      this.view.effectsDisabledReason = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.view.effectsDisabledReason = String(err.detail);
      } else {
        throw err;
      }
    }
    this.emit();
  }

  private async mutate(action: () => Promise<SessionSummary>): Promise<void> {
    try {
      this.view.summary = await action();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale version: somebody else won; silently refetch and tell the user
        const state = err.conflictState();
        if (state) this.view.summary = state;
        this.toast("session changed elsewhere; view refreshed");
        await this.refresh();
        return;
      }
      if (err instanceof ApiError && err.status === 422) {
        this.toast(String(err.detail));
        this.emit();
        return;
      }
      throw err;
    }
    await this.refresh();
  }

  /** Apply a candidate; would-stop rows need an explicit confirmation. */
  async pickCandidate(term: string): Promise<void> {
    const summary = this.view.summary;
    if (!summary) return;
    const entry = this.view.candidates?.entries.find((e) => e.term === term);
    let force = false;
    if (entry?.would_stop) {
      const ok = await this.confirmFn(
        `${term} does not improve the penalized objective; force it into the model?`,
      );
      if (!ok) return;
      force = true;
    }
    await this.mutate(() =>
      this.client.step(summary.id, { term, force, version: summary.version }),
    );
  }

  /** Take the statistically optimal candidate. */
  async stepOptimal(): Promise<void> {
    const summary = this.view.summary;
    if (!summary) return;
    await this.mutate(() => this.client.step(summary.id, { version: summary.version }));
  }

  async undo(): Promise<void> {
    const summary = this.view.summary;
    if (!summary) return;
    await this.mutate(() => this.client.undo(summary.id, summary.version));
  }
}
