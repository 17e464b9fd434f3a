/**
 * Typed client for the review-session service (/v1).
 *
 * Every statistic the console shows comes out of these response bodies;
 * the client only moves JSON, it never computes.
 */

export interface TracePointJson {
  n: number;
  x: number;
  alpha: number;
  beta: number;
  mean: number;
  q05: number;
  q95: number;
  reliability: number;
}

export interface PriorAssessmentJson {
  mean: number;
  q05: number;
  q95: number;
  reliability: number;
  total_blocks: number;
  predictive_argmax: number;
  predictive_interval: [number, number];
  predictive_mass: number;
}

export interface SessionHandle {
  id: string;
  created_at: string;
  workbook_name: string;
  sheets: string[];
  status: string;
  decision: string;
  judged: number;
  defects: number;
  total_blocks: number;
}

export interface CreatedSession extends SessionHandle {
  prior: { alpha: number; beta: number };
  policy: Record<string, number>;
  prior_assessment: PriorAssessmentJson;
}

export interface BlockDetail {
  id: string;
  sheet: string;
  representative: string;
  members: string[];
  formula: string;
  relative: string | null;
  flagged: boolean;
  position: number;
  total: number;
}

export interface OutcomeResponse {
  trace_point: TracePointJson;
  decision: string;
  status: string;
}

export interface PredictiveJson {
  remaining: number;
  argmax: number;
  interval: [number, number];
  mass: number;
}

export interface TraceResponse {
  status: string;
  decision: string;
  decision_log: [number, string][];
  acceptable_cer: number;
  points: TracePointJson[];
  prior_assessment: PriorAssessmentJson;
  predictive: PredictiveJson;
  advisory: string;
  what_if?: {
    acceptable_cer: number;
    first_stop_accept: number | null;
    first_redevelop: number | null;
  };
}

export interface GridCellJson {
  ref: string;
  kind: "formula" | "value";
  value?: string;
  formula?: string;
  block?: string | null;
}

export interface GridBlockJson {
  id: string;
  representative: string;
  members: string[];
  flagged: boolean;
  judged: boolean;
  current: boolean;
}

export interface GridResponse {
  sheet: string;
  cells: GridCellJson[];
  blocks: GridBlockJson[];
}

export type Verdict = "correct" | "defect" | "qualitative";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly path: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type Fetcher = (input: string, init?: RequestInit) => Promise<Response>;

export class ConsoleApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetcher: Fetcher = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetcher(`${this.baseUrl}${path}`, init);
    const payload = await response.json();
    if (!response.ok) {
      const err = payload as { code?: string; message?: string; path?: string };
      throw new ApiError(
        response.status,
        err.code ?? "unknown",
        err.message ?? `request failed with ${response.status}`,
        err.path ?? path,
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/v1/health");
  }

  listSessions(): Promise<{ sessions: SessionHandle[] }> {
    return this.request("GET", "/v1/sessions");
  }

  createSession(body: {
    workbook: unknown;
    prior: Record<string, number>;
    policy?: Record<string, number>;
    ordering?: { kind: string; seed?: number };
  }): Promise<CreatedSession> {
    return this.request("POST", "/v1/sessions", body);
  }

  getSession(id: string): Promise<CreatedSession> {
    return this.request("GET", `/v1/sessions/${id}`);
  }

  nextBlock(id: string): Promise<BlockDetail> {
    return this.request("GET", `/v1/sessions/${id}/next`);
  }

  postOutcome(id: string, block: string, verdict: Verdict, note = ""): Promise<OutcomeResponse> {
    return this.request("POST", `/v1/sessions/${id}/outcomes`, { block, verdict, note });
  }

  reopen(id: string): Promise<{ status: string }> {
    return this.request("POST", `/v1/sessions/${id}/reopen`);
  }

  getTrace(id: string, acceptable?: number): Promise<TraceResponse> {
    const query = acceptable === undefined ? "" : `?acceptable=${acceptable}`;
    return this.request("GET", `/v1/sessions/${id}/trace${query}`);
  }

  getGrid(id: string, sheet: string): Promise<GridResponse> {
    return this.request("GET", `/v1/sessions/${id}/grid/${encodeURIComponent(sheet)}`);
  }

  traceCsvUrl(id: string): string {
    return `${this.baseUrl}/v1/sessions/${id}/trace?format=csv`;
  }
}
