/**
 * SVG chart builders for the audit trace.
 *
 * Chart A: posterior mean with the 5%/95% credible band, one point per
 * block tested, the prior as the point at n=0. Chart B: reliability per
 * block tested with the policy's target line and the acceptable error
 * rate echoed in the legend.
 *
 * These are pure string builders: data in, SVG out. Pixel mapping is the
 * only arithmetic; every number a reader can see (legend values, marker
 * data attributes) is the verbatim server value.
 */

import type { PriorAssessmentJson, TracePointJson } from "./api.js";
import { stat } from "./format.js";

export interface ChartSize {
  width: number;
  height: number;
  marginTop: number;
  marginRight: number;
  marginBottom: number;
  marginLeft: number;
}

export const DEFAULT_SIZE: ChartSize = {
  width: 640,
  height: 260,
  marginTop: 18,
  marginRight: 16,
  marginBottom: 28,
  marginLeft: 46,
};

interface BandPoint {
  n: number;
  mean: number;
  q05: number;
  q95: number;
}

function px(value: number): string {
  return value.toFixed(2);
}

function xScale(size: ChartSize, maxN: number): (n: number) => number {
  const span = size.width - size.marginLeft - size.marginRight;
  return (n) => size.marginLeft + (maxN === 0 ? 0 : (n / maxN) * span);
}

function yScale(size: ChartSize, maxY: number): (v: number) => number {
  const span = size.height - size.marginTop - size.marginBottom;
  return (v) => size.marginTop + span - (maxY === 0 ? 0 : (v / maxY) * span);
}

function axes(size: ChartSize): string {
  const x0 = size.marginLeft;
  const y0 = size.height - size.marginBottom;
  const x1 = size.width - size.marginRight;
  const y1 = size.marginTop;
  return (
    `<line class="axis" x1="${px(x0)}" y1="${px(y0)}" x2="${px(x1)}" y2="${px(y0)}"/>` +
    `<line class="axis" x1="${px(x0)}" y1="${px(y0)}" x2="${px(x0)}" y2="${px(y1)}"/>`
  );
}

function open(size: ChartSize, kind: string, title: string): string {
  return (
    `<svg class="chart ${kind}" viewBox="0 0 ${size.width} ${size.height}" ` +
    `xmlns="http://www.w3.org/2000/svg" role="img" aria-label="${title}">` +
    `<title>${title}</title>`
  );
}

/** Chart A: posterior mean with the 5%/95% band per block tested. */
export function meanBandChart(
  points: TracePointJson[],
  prior: PriorAssessmentJson,
  size: ChartSize = DEFAULT_SIZE,
): string {
  const series: BandPoint[] = [
    { n: 0, mean: prior.mean, q05: prior.q05, q95: prior.q95 },
    ...points.map((p) => ({ n: p.n, mean: p.mean, q05: p.q05, q95: p.q95 })),
  ];
  const maxN = Math.max(1, series[series.length - 1]!.n);
  const maxY = Math.max(...series.map((p) => p.q95)) * 1.08;
  const sx = xScale(size, maxN);
  const sy = yScale(size, maxY);

  const upper = series.map((p) => `${px(sx(p.n))},${px(sy(p.q95))}`);
  const lower = [...series].reverse().map((p) => `${px(sx(p.n))},${px(sy(p.q05))}`);
  const band = `<polygon class="band" points="${upper.join(" ")} ${lower.join(" ")}"/>`;
  const meanLine = `<polyline class="mean" fill="none" points="${series
    .map((p) => `${px(sx(p.n))},${px(sy(p.mean))}`)
    .join(" ")}"/>`;

  const last = series[series.length - 1]!;
  const marker =
    `<circle class="marker" cx="${px(sx(last.n))}" cy="${px(sy(last.mean))}" r="3" ` +
    `data-n="${last.n}" data-mean="${stat(last.mean)}" ` +
    `data-q05="${stat(last.q05)}" data-q95="${stat(last.q95)}"/>`;
  const priorDot =
    `<circle class="prior-point" cx="${px(sx(0))}" cy="${px(sy(prior.mean))}" r="3" ` +
    `data-mean="${stat(prior.mean)}"/>`;

  const legend =
    `<text class="legend" x="${px(size.marginLeft + 6)}" y="${px(size.marginTop - 4)}">` +
    `error-rate mean and 90% band; latest mean ${stat(last.mean)}</text>`;

  return (
    open(size, "mean-band", "Posterior mean of the error rate with 5% and 95% quantiles") +
    axes(size) +
    band +
    meanLine +
    priorDot +
    marker +
    legend +
    `<text class="x-label" x="${px(size.width / 2)}" y="${px(size.height - 6)}">blocks tested</text>` +
    "</svg>"
  );
}

/** Chart B: reliability per block tested, with the target line. */
export function reliabilityChart(
  points: TracePointJson[],
  prior: PriorAssessmentJson,
  acceptableCer: number,
  targetReliability: number,
  size: ChartSize = DEFAULT_SIZE,
): string {
  const series = [
    { n: 0, reliability: prior.reliability },
    ...points.map((p) => ({ n: p.n, reliability: p.reliability })),
  ];
  const maxN = Math.max(1, series[series.length - 1]!.n);
  const sx = xScale(size, maxN);
  const sy = yScale(size, 1.0);

  const line = `<polyline class="reliability" fill="none" points="${series
    .map((p) => `${px(sx(p.n))},${px(sy(p.reliability))}`)
    .join(" ")}"/>`;
  const targetY = sy(targetReliability);
  const target =
    `<line class="target" x1="${px(size.marginLeft)}" y1="${px(targetY)}" ` +
    `x2="${px(size.width - size.marginRight)}" y2="${px(targetY)}" ` +
    `data-target="${stat(targetReliability)}"/>` +
    `<text class="target-label" x="${px(size.width - size.marginRight)}" ` +
    `y="${px(targetY - 4)}" text-anchor="end">target ${stat(targetReliability)}</text>`;

  const last = series[series.length - 1]!;
  const marker =
    `<circle class="marker" cx="${px(sx(last.n))}" cy="${px(sy(last.reliability))}" r="3" ` +
    `data-n="${last.n}" data-reliability="${stat(last.reliability)}"/>`;

  const legend =
    `<text class="legend" x="${px(size.marginLeft + 6)}" y="${px(size.marginTop - 4)}">` +
    `P(error rate &#8804; ${stat(acceptableCer)}); latest ${stat(last.reliability)}</text>`;

  return (
    open(size, "reliability", "Reliability against the acceptable error rate") +
    axes(size) +
    target +
    line +
    marker +
    legend +
    `<text class="x-label" x="${px(size.width / 2)}" y="${px(size.height - 6)}">blocks tested</text>` +
    "</svg>"
  );
}
