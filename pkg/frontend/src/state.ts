/**
 * Console state: everything the page shows, reconstructible from GET
 * endpoints alone (refresh-safe), with a single-in-flight submission
 * gate so a double click can never post twice.
 */

import {
  ApiError,
  type BlockDetail,
  type ConsoleApi,
  type CreatedSession,
  type GridResponse,
  type TraceResponse,
  type Verdict,
} from "./api.js";
import { bannerChanged, bannerFor, type BannerState } from "./banner.js";

export interface ConsoleView {
  session: CreatedSession | null;
  trace: TraceResponse | null;
  grid: GridResponse | null;
  currentBlock: BlockDetail | null;
  banner: BannerState | null;
  bannerFlips: number;
  whatIf: TraceResponse | null;
  lastError: string | null;
}

export type SubmitResult = "recorded" | "ignored" | "failed";

const POLL_BASE_MS = 2000;
const POLL_CAP_MS = 30000;

/** Poll delay with backoff: doubles per idle cycle, capped. */
export function nextPollDelay(idleCycles: number): number {
  const delay = POLL_BASE_MS * 2 ** Math.max(0, idleCycles);
  return Math.min(delay, POLL_CAP_MS);
}

export class ConsoleStore {
  readonly view: ConsoleView = {
    session: null,
    trace: null,
    grid: null,
    currentBlock: null,
    banner: null,
    bannerFlips: 0,
    whatIf: null,
    lastError: null,
  };

  private inFlight = false;

  constructor(
    private readonly api: ConsoleApi,
    private readonly sessionId: string,
  ) {}

  get submitting(): boolean {
    return this.inFlight;
  }

  canSubmit(): boolean {
    return (
      !this.inFlight &&
      this.view.session?.status === "in_progress" &&
      this.view.currentBlock !== null
    );
  }

  private applyDecision(decision: string): void {
    const next = bannerFor(decision);
    if (bannerChanged(this.view.banner, next)) {
      this.view.banner = next;
      this.view.bannerFlips += 1;
    }
  }

  /** Rebuild the whole view from GET endpoints (used on load and poll). */
  async refresh(): Promise<void> {
    const session = await this.api.getSession(this.sessionId);
    this.view.session = session;
    this.view.trace = await this.api.getTrace(this.sessionId);
    this.view.currentBlock = await this.fetchCurrentBlock();
    const sheet = this.view.currentBlock?.sheet ?? session.sheets[0] ?? null;
    this.view.grid = sheet === null ? null : await this.api.getGrid(this.sessionId, sheet);
    this.applyDecision(this.view.trace.decision);
    this.view.lastError = null;
  }

  private async fetchCurrentBlock(): Promise<BlockDetail | null> {
    try {
      return await this.api.nextBlock(this.sessionId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) return null;
      throw error;
    }
  }

  /**
   * Post one verdict. While a submission is in flight every further call
   * is ignored, so the verdict controls cannot double-submit.
   */
  async submitVerdict(verdict: Verdict, note = ""): Promise<SubmitResult> {
    if (!this.canSubmit()) return "ignored";
    const block = this.view.currentBlock;
    if (block === null) return "ignored";
    this.inFlight = true;
    try {
      const outcome = await this.api.postOutcome(this.sessionId, block.id, verdict, note);
      if (this.view.trace !== null) {
        this.view.trace.points.push(outcome.trace_point);
        this.view.trace.status = outcome.status;
        this.view.trace.decision = outcome.decision;
      }
      if (this.view.session !== null) {
        this.view.session.status = outcome.status;
        this.view.session.decision = outcome.decision;
        this.view.session.judged += 1;
        if (verdict === "defect") this.view.session.defects += 1;
      }
      this.applyDecision(outcome.decision);
      this.view.currentBlock =
        outcome.status === "in_progress" ? await this.fetchCurrentBlock() : null;
      if (this.view.grid !== null) {
        this.view.grid = await this.api.getGrid(this.sessionId, this.view.grid.sheet);
      }
      this.view.lastError = null;
      return "recorded";
    } catch (error) {
      this.view.lastError = error instanceof Error ? error.message : String(error);
      return "failed";
    } finally {
      this.inFlight = false;
    }
  }

  async reopen(): Promise<void> {
    await this.api.reopen(this.sessionId);
    await this.refresh();
  }

  /** What-if: reliability series recomputed server-side at another rate. */
  async exploreAcceptable(acceptable: number): Promise<TraceResponse> {
    const trace = await this.api.getTrace(this.sessionId, acceptable);
    this.view.whatIf = trace;
    return trace;
  }

  clearWhatIf(): void {
    this.view.whatIf = null;
  }
}
