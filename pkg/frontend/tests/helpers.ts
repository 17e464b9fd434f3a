/** Test doubles: a scripted fetcher and a scripted ConsoleApi. */

import type {
  BlockDetail,
  CreatedSession,
  GridResponse,
  OutcomeResponse,
  TraceResponse,
  Verdict,
} from "../src/api.js";
import { ApiError } from "../src/api.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body?: unknown;
}

export function scriptedFetcher(
  script: { status: number; body: unknown }[],
  log: RecordedRequest[] = [],
) {
  let call = 0;
  const fetcher = async (url: string, init?: RequestInit): Promise<Response> => {
    const entry = script[call];
    if (entry === undefined) throw new Error(`unexpected request #${call} to ${url}`);
    call += 1;
    log.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body === undefined ? undefined : JSON.parse(init.body as string),
    });
    return new Response(JSON.stringify(entry.body), {
      status: entry.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetcher, log };
}

/** A fake ConsoleApi driven by fixture data, for store tests. */
export class FakeApi {
  outcomes: { block: string; verdict: Verdict; note: string }[] = [];
  outcomeQueue: OutcomeResponse[] = [];
  nextBlocks: (BlockDetail | null)[] = [];
  session!: CreatedSession;
  trace!: TraceResponse;
  grid!: GridResponse;
  whatIfTrace: TraceResponse | null = null;
  gate: Promise<void> | null = null;

  async getSession(): Promise<CreatedSession> {
    return structuredClone(this.session);
  }

  async getTrace(_id: string, acceptable?: number): Promise<TraceResponse> {
    if (acceptable !== undefined && this.whatIfTrace !== null) {
      return structuredClone(this.whatIfTrace);
    }
    return structuredClone(this.trace);
  }

  async getGrid(): Promise<GridResponse> {
    return structuredClone(this.grid);
  }

  async nextBlock(): Promise<BlockDetail> {
    const next = this.nextBlocks.shift();
    if (next === null || next === undefined) {
      throw new ApiError(409, "exhausted", "every block has a verdict", "/next");
    }
    return structuredClone(next);
  }

  async postOutcome(
    _id: string,
    block: string,
    verdict: Verdict,
    note = "",
  ): Promise<OutcomeResponse> {
    if (this.gate !== null) await this.gate;
    this.outcomes.push({ block, verdict, note });
    const response = this.outcomeQueue.shift();
    if (response === undefined) throw new ApiError(409, "duplicate_verdict", "dup", "/outcomes");
    return structuredClone(response);
  }

  async reopen(): Promise<{ status: string }> {
    this.session.status = "in_progress";
    return { status: "in_progress" };
  }
}
