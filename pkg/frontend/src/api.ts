/** Typed client for the benchmark session HTTP API.
 *
 * Every response shape here mirrors what the server actually sends;
 * the UI never derives or recomputes any of these values.
 */

export interface SessionSummary {
  apps: number;
  susi_loaded: boolean;
  candidates: number;
  selected: number;
  groups: number;
  cases: number;
  has_report: boolean;
}

export interface HashInfo {
  algorithm: string;
  value: string;
}

export interface AppInfo {
  id: string;
  file: string;
  classes: number;
  statements: number;
  hashes: HashInfo[];
}

export type CandidateKind = "source" | "sink";

export interface CandidateRow {
  id: string;
  app: string;
  classname: string;
  method: string;
  index: number;
  kind: CandidateKind;
  statement: string;
  selected: boolean;
  group: string | null;
}

export type Polarity = "positive" | "negative";

export interface CaseRow {
  id: string;
  polarity: Polarity;
  active: boolean;
  apps: string[];
  has_expected: boolean;
  query: string | null;
}

export interface RunInfo {
  tool: string;
  exit_status: string;
  wall_time_s: number;
  cache_hit: boolean;
}

export interface Verdict {
  case_id: string;
  polarity: Polarity;
  classification: "TP" | "FP" | "TN" | "FN";
  degraded: boolean;
  run: RunInfo | null;
  matched: { source: string; sink: string } | null;
}

export interface Report {
  counts: { cases: number; tp: number; fp: number; tn: number; fn: number };
  metrics: { precision: number; recall: number; f_measure: number };
  verdicts: Verdict[];
}

export interface GraphNode {
  id: string;
  label: string;
  role: "source" | "sink";
  origin: "expected" | "actual" | "both";
}

export interface GraphEdge {
  source: string;
  target: string;
  kind: "expected" | "actual";
  matched: boolean;
  via: string[];
}

export interface GraphDoc {
  case: string;
  polarity: Polarity;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export type ExportFormat = "json" | "csv" | "sql";

/** Error documents arrive as {"error": {"code", "message"}}. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} on ${path}`;
      try {
        const doc = await response.json();
        if (doc && doc.error) {
          code = doc.error.code ?? code;
          message = doc.error.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the fallback message
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return response.json() as Promise<T>;
  }

  session(): Promise<SessionSummary> {
    return this.getJson("/session");
  }

  apps(): Promise<AppInfo[]> {
    return this.getJson("/apps");
  }

  /** Upload one sidecar document (XML or JSON text). */
  addApp(doc: string): Promise<{ id: string }> {
    return this.postJson("/apps", { doc });
  }

  setSusi(text: string): Promise<{ entries: number }> {
    return this.postJson("/susi", { text });
  }

  candidates(): Promise<CandidateRow[]> {
    return this.getJson("/candidates");
  }

  select(id: string, selected: boolean): Promise<{ id: string; selected: boolean }> {
    return this.postJson(`/candidates/${id}/select`, { selected });
  }

  bulkSelect(selected: boolean, ids?: string[]): Promise<{ selected: boolean; count: number }> {
    return this.postJson("/candidates/bulk", ids ? { selected, ids } : { selected });
  }

  addGroup(label: string, ids: string[]): Promise<{ label: string; members: number }> {
    return this.postJson("/groups", { label, ids });
  }

  cases(): Promise<CaseRow[]> {
    return this.getJson("/cases");
  }

  initCases(combinations?: string[][]): Promise<{ cases: number }> {
    return this.postJson("/cases", combinations ? { action: "init", combinations } : { action: "init" });
  }

  pairCases(): Promise<{ cases: number }> {
    return this.postJson("/cases", { action: "pairs" });
  }

  setPolarity(caseId: string, polarity: Polarity): Promise<{ id: string; polarity: Polarity }> {
    return this.postJson(`/cases/${encodeURIComponent(caseId)}/polarity`, { polarity });
  }

  setActive(caseId: string, active: boolean): Promise<{ id: string; active: boolean }> {
    return this.postJson(`/cases/${encodeURIComponent(caseId)}/active`, { active });
  }

  run(strictness: "exact" | "name-only" = "exact"): Promise<Report> {
    return this.postJson("/run", { strictness });
  }

  report(): Promise<Report> {
    return this.getJson("/report");
  }

  graph(caseId: string): Promise<GraphDoc> {
    return this.getJson(`/report/graph/${encodeURIComponent(caseId)}`);
  }

  exportUrl(format: ExportFormat): string {
    return `${this.base}/export?format=${format}`;
  }

  async exportReport(format: ExportFormat): Promise<string> {
    return (await this.request(`/export?format=${format}`)).text();
  }

  /** The benchmark suite file exactly as the server would save it. */
  async benchmark(): Promise<Uint8Array> {
    const response = await this.request("/benchmark");
    return new Uint8Array(await response.arrayBuffer());
  }
}
