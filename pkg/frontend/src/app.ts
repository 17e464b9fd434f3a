/**
 * DOM shell: binds the store to the page. Configuration is the service
 * base URL plus a session id, both taken from the query string
 * (?base=http://127.0.0.1:8033&session=...); without a session id the
 * page lists the sessions the service knows.
 *
 * Polling: the view refreshes from GET endpoints with exponential
 * backoff while nothing changes; any verdict resets the backoff.
 */

import { ConsoleApi } from "./api.js";
import { meanBandChart, reliabilityChart } from "./charts.js";
import { count, escapeHtml, interval, stat } from "./format.js";
import { renderGrid } from "./grid.js";
import { ConsoleStore, nextPollDelay } from "./state.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node;
}

function renderStats(store: ConsoleStore): string {
  const trace = store.view.trace;
  const session = store.view.session;
  if (trace === null || session === null) return "";
  const last = trace.points[trace.points.length - 1];
  const rows: [string, string][] = [];
  rows.push(["blocks judged", `${count(session.judged)} of ${count(session.total_blocks)}`]);
  rows.push(["defects", count(session.defects)]);
  if (last !== undefined) {
    rows.push(["posterior mean", stat(last.mean)]);
    rows.push(["90% band", `[${stat(last.q05)}, ${stat(last.q95)}]`]);
    rows.push(["reliability", stat(last.reliability)]);
  } else {
    rows.push(["prior mean", stat(trace.prior_assessment.mean)]);
    rows.push(["prior reliability", stat(trace.prior_assessment.reliability)]);
  }
  rows.push([
    `errors among ${count(trace.predictive.remaining)} untested (most likely)`,
    count(trace.predictive.argmax),
  ]);
  rows.push([
    `${stat(trace.predictive.mass)} predictive interval`,
    interval(trace.predictive.interval),
  ]);
  return (
    "<dl>" +
    rows.map(([k, v]) => `<dt>${escapeHtml(k)}</dt><dd>${v}</dd>`).join("") +
    "</dl>" +
    `<p class="advisory">${escapeHtml(trace.advisory)}</p>`
  );
}

function renderCurrentBlock(store: ConsoleStore): string {
  const block = store.view.currentBlock;
  if (block === null) return "<p>No block pending.</p>";
  return (
    `<h3>block ${count(block.position)} of ${count(block.total)}: ${escapeHtml(block.id)}</h3>` +
    `<p>members: ${block.members.map(escapeHtml).join(", ")}</p>` +
    `<p>formula: <code>${escapeHtml(block.formula)}</code></p>` +
    (block.relative !== null
      ? `<p>relative form: <code>${escapeHtml(block.relative)}</code></p>`
      : "") +
    (block.flagged ? '<p class="flagged">formula did not parse; judge manually</p>' : "")
  );
}

function draw(store: ConsoleStore): void {
  const { session, trace, grid, banner, whatIf } = store.view;
  if (session === null || trace === null) return;
  el("session-title").textContent =
    `${session.workbook_name} — session ${session.id.slice(0, 8)} (${session.status})`;
  const bannerBox = el("banner");
  if (banner !== null) {
    bannerBox.textContent = banner.label;
    bannerBox.dataset.tone = banner.tone;
    bannerBox.dataset.decision = banner.decision;
  }
  el("grid").innerHTML = grid === null ? "" : renderGrid(grid);
  el("current-block").innerHTML = renderCurrentBlock(store);
  el("stats").innerHTML = renderStats(store);
  el("chart-band").innerHTML = meanBandChart(trace.points, trace.prior_assessment);
  el("chart-reliability").innerHTML = reliabilityChart(
    trace.points,
    trace.prior_assessment,
    trace.acceptable_cer,
    (session.policy?.target_reliability as number | undefined) ?? 0.95,
  );
  const whatIfBox = el("chart-whatif");
  whatIfBox.innerHTML =
    whatIf === null
      ? ""
      : reliabilityChart(
          whatIf.points,
          whatIf.prior_assessment,
          whatIf.acceptable_cer,
          (session.policy?.target_reliability as number | undefined) ?? 0.95,
        );
  const disabled = !store.canSubmit();
  for (const id of ["btn-correct", "btn-defect", "btn-qualitative"]) {
    (el(id) as HTMLButtonElement).disabled = disabled;
  }
  (el("btn-reopen") as HTMLButtonElement).hidden =
    session.status === "in_progress" || session.status === "exhausted";
}

async function runConsole(api: ConsoleApi, sessionId: string): Promise<void> {
  const store = new ConsoleStore(api, sessionId);
  await store.refresh();
  draw(store);

  let idleCycles = 0;
  const submit = async (verdict: "correct" | "defect" | "qualitative") => {
    const note = (el("note") as HTMLInputElement).value;
    const result = await store.submitVerdict(verdict, note);
    if (result === "recorded") {
      (el("note") as HTMLInputElement).value = "";
      idleCycles = 0;
    }
    draw(store);
  };
  el("btn-correct").addEventListener("click", () => void submit("correct"));
  el("btn-defect").addEventListener("click", () => void submit("defect"));
  el("btn-qualitative").addEventListener("click", () => void submit("qualitative"));
  el("btn-reopen").addEventListener("click", () => {
    void store.reopen().then(() => draw(store));
  });
  el("btn-whatif").addEventListener("click", () => {
    const value = Number((el("whatif-rate") as HTMLInputElement).value);
    if (Number.isFinite(value) && value > 0 && value <= 1) {
      void store.exploreAcceptable(value).then(() => draw(store));
    }
  });
  (el("csv-link") as HTMLAnchorElement).href = api.traceCsvUrl(sessionId);

  const poll = async () => {
    const judgedBefore = store.view.session?.judged ?? 0;
    if (!store.submitting) {
      try {
        await store.refresh();
        draw(store);
      } catch {
        // transient poll failures surface on the next cycle
      }
    }
    idleCycles = (store.view.session?.judged ?? 0) === judgedBefore ? idleCycles + 1 : 0;
    window.setTimeout(() => void poll(), nextPollDelay(idleCycles));
  };
  window.setTimeout(() => void poll(), nextPollDelay(0));
}

async function listSessions(api: ConsoleApi): Promise<void> {
  const { sessions } = await api.listSessions();
  el("session-title").textContent = "choose a session";
  el("grid").innerHTML =
    "<ul>" +
    sessions
      .map(
        (s) =>
          `<li><a href="?session=${s.id}">${escapeHtml(s.workbook_name)}</a> ` +
          `— ${escapeHtml(s.status)}, ${count(s.judged)}/${count(s.total_blocks)} judged</li>`,
      )
      .join("") +
    "</ul>";
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? "http://127.0.0.1:8033";
  const api = new ConsoleApi(base);
  const sessionId = params.get("session");
  void (sessionId === null ? listSessions(api) : runConsole(api, sessionId)).catch((error) => {
    el("banner").textContent = error instanceof Error ? error.message : String(error);
    el("banner").dataset.tone = "stop";
  });
}

boot();
