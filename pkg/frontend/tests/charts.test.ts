import { describe, expect, it } from "vitest";

import type { TraceResponse } from "../src/api.js";
import { meanBandChart, reliabilityChart } from "../src/charts.js";

import traceFixture from "./fixtures/worked_example_trace.json";
import whatIfFixture from "./fixtures/worked_example_whatif.json";

const trace = traceFixture as unknown as TraceResponse;
const whatIf = whatIfFixture as unknown as TraceResponse;

function attr(svg: string, name: string, element = "marker"): string {
  const scoped = new RegExp(`class="${element}"[^>]*\\b${name}="([^"]*)"`).exec(svg);
  if (scoped) return scoped[1]!;
  const anywhere = new RegExp(`\\b${name}="([^"]*)"`).exec(svg);
  if (!anywhere) throw new Error(`missing ${name} in svg`);
  return anywhere[1]!;
}

describe("meanBandChart", () => {
  const svg = meanBandChart(trace.points, trace.prior_assessment);

  it("matches the snapshot for the recorded replay", () => {
    expect(svg).toMatchSnapshot();
  });

  it("carries the final posterior values verbatim from the service", () => {
    const last = trace.points[trace.points.length - 1]!;
    expect(attr(svg, "data-mean")).toBe(String(last.mean));
    expect(attr(svg, "data-q05")).toBe(String(last.q05));
    expect(attr(svg, "data-q95")).toBe(String(last.q95));
  });

  it("final band brackets the replay mean 0.1333...", () => {
    const mean = Number(attr(svg, "data-mean"));
    const q05 = Number(attr(svg, "data-q05"));
    const q95 = Number(attr(svg, "data-q95"));
    expect(mean).toBeCloseTo(0.13333333333333333, 12);
    expect(q05).toBeLessThan(0.13333333333333333);
    expect(q95).toBeGreaterThan(0.13333333333333333);
  });

  it("shows the displayed mean in the legend text verbatim", () => {
    const last = trace.points[trace.points.length - 1]!;
    expect(svg).toContain(`latest mean ${String(last.mean)}`);
  });

  it("renders axes plus the prior point when the trace is empty", () => {
    const empty = meanBandChart([], trace.prior_assessment);
    expect(empty).toContain('class="axis"');
    expect(empty).toContain('class="prior-point"');
    expect(attr(empty, "data-mean", "prior-point")).toBe(
      String(trace.prior_assessment.mean),
    );
    expect(attr(empty, "data-mean", "marker")).toBe(String(trace.prior_assessment.mean));
  });
});

describe("reliabilityChart", () => {
  const svg = reliabilityChart(trace.points, trace.prior_assessment, trace.acceptable_cer, 0.95);

  it("matches the snapshot for the recorded replay", () => {
    expect(svg).toMatchSnapshot();
  });

  it("shows the acceptable rate and latest reliability verbatim", () => {
    const last = trace.points[trace.points.length - 1]!;
    expect(svg).toContain(String(trace.acceptable_cer));
    expect(attr(svg, "data-reliability")).toBe(String(last.reliability));
  });

  it("draws the target line at the policy value", () => {
    expect(attr(svg, "data-target")).toBe("0.95");
    expect(svg).toContain("target 0.95");
  });

  it("renders the what-if series from the server recomputation", () => {
    const overridden = reliabilityChart(
      whatIf.points,
      whatIf.prior_assessment,
      whatIf.acceptable_cer,
      0.95,
    );
    expect(overridden).toContain(String(whatIf.acceptable_cer));
    const last = whatIf.points[whatIf.points.length - 1]!;
    expect(attr(overridden, "data-reliability")).toBe(String(last.reliability));
    // raising the acceptable rate never lowers any reliability value
    for (let i = 0; i < trace.points.length; i++) {
      expect(whatIf.points[i]!.reliability).toBeGreaterThanOrEqual(
        trace.points[i]!.reliability,
      );
    }
  });
});
