/** Wizard controller: mirrors the server session and funnels every
 * mutation through the HTTP API.  After each successful write the
 * affected mirror is refetched, so closing and reopening the page
 * against the same session reproduces the same view.
 */

import {
  ApiClient,
  ApiError,
  type AppInfo,
  type CandidateRow,
  type CaseRow,
  type GraphDoc,
  type Polarity,
  type Report,
  type SessionSummary,
} from "./api.js";
import {
  goBack,
  goNext,
  initialViewState,
  markClean,
  markDirty,
  markFailed,
  type WizardViewState,
} from "./state.js";

export interface WizardMirror {
  session: SessionSummary | null;
  apps: AppInfo[];
  candidates: CandidateRow[];
  cases: CaseRow[];
  report: Report | null;
}

export class Wizard {
  view: WizardViewState = initialViewState();
  mirror: WizardMirror = {
    session: null,
    apps: [],
    candidates: [],
    cases: [],
    report: null,
  };

  constructor(readonly api: ApiClient) {}

  next(): void {
    this.view = goNext(this.view);
  }

  back(): void {
    this.view = goBack(this.view);
  }

  /** Pull every mirror the current session can serve. */
  async refresh(): Promise<void> {
    const session = await this.api.session();
    this.mirror.session = session;
    this.mirror.apps = await this.api.apps();
    this.mirror.candidates = session.susi_loaded ? await this.api.candidates() : [];
    this.mirror.cases = await this.api.cases();
    this.mirror.report = session.has_report ? await this.api.report() : null;
    this.view = markClean(this.view);
  }

  // A failed write keeps the dirty flag and shows the server's message
  // inline; the refetch is skipped so local edits stay visible.
  private async mutate<T>(action: () => Promise<T>): Promise<T | null> {
    this.view = markDirty(this.view);
    try {
      const result = await action();
      await this.refresh();
      return result;
    } catch (err) {
      const message =
        err instanceof ApiError ? err.message : err instanceof Error ? err.message : String(err);
      this.view = markFailed(this.view, message);
      return null;
    }
  }

  addApp(doc: string): Promise<{ id: string } | null> {
    return this.mutate(() => this.api.addApp(doc));
  }

  setSusi(text: string): Promise<{ entries: number } | null> {
    return this.mutate(() => this.api.setSusi(text));
  }

  toggleCandidate(id: string, selected: boolean): Promise<{ id: string; selected: boolean } | null> {
    return this.mutate(() => this.api.select(id, selected));
  }

  bulkSelect(selected: boolean, ids?: string[]): Promise<{ count: number } | null> {
    return this.mutate(() => this.api.bulkSelect(selected, ids));
  }

  addGroup(label: string, ids: string[]): Promise<{ label: string; members: number } | null> {
    return this.mutate(() => this.api.addGroup(label, ids));
  }

  initCases(combinations?: string[][]): Promise<{ cases: number } | null> {
    return this.mutate(() => this.api.initCases(combinations));
  }

  pairCases(): Promise<{ cases: number } | null> {
    return this.mutate(() => this.api.pairCases());
  }

  setPolarity(caseId: string, polarity: Polarity): Promise<{ id: string } | null> {
    return this.mutate(() => this.api.setPolarity(caseId, polarity));
  }

  setActive(caseId: string, active: boolean): Promise<{ id: string } | null> {
    return this.mutate(() => this.api.setActive(caseId, active));
  }

  run(strictness: "exact" | "name-only" = "exact"): Promise<Report | null> {
    return this.mutate(() => this.api.run(strictness));
  }

  graph(caseId: string): Promise<GraphDoc> {
    return this.api.graph(caseId);
  }

  candidateById(id: string): CandidateRow | undefined {
    return this.mirror.candidates.find((c) => c.id === id);
  }
}
