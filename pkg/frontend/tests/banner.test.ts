import { describe, expect, it } from "vitest";

import type { OutcomeResponse } from "../src/api.js";
import { bannerChanged, bannerFor, type BannerState } from "../src/banner.js";

import flipFixture from "./fixtures/banner_flip_outcomes.json";
import steadyFixture from "./fixtures/worked_example_outcomes.json";

const flipOutcomes = flipFixture as unknown as OutcomeResponse[];
const steadyOutcomes = steadyFixture as unknown as OutcomeResponse[];

function replay(outcomes: OutcomeResponse[]): { flips: number; states: BannerState[] } {
  let banner: BannerState | null = null;
  let flips = 0;
  const states: BannerState[] = [];
  for (const outcome of outcomes) {
    const next = bannerFor(outcome.decision);
    if (bannerChanged(banner, next)) {
      banner = next;
      flips += 1;
    }
    states.push(banner!);
  }
  return { flips, states };
}

describe("decision banner", () => {
  it("flips exactly when the server decision changes", () => {
    const { flips, states } = replay(flipOutcomes);
    // recorded sequence: continue x4 then stop_accept -> initial set + one flip
    expect(flipOutcomes.map((o) => o.decision)).toEqual([
      "continue", "continue", "continue", "continue", "stop_accept",
    ]);
    expect(flips).toBe(2);
    expect(states[0]!.decision).toBe("continue");
    expect(states[states.length - 1]!.decision).toBe("stop_accept");
    expect(states[states.length - 1]!.tone).toBe("go");
  });

  it("does not flip while the decision stays the same", () => {
    const { flips } = replay(steadyOutcomes);
    expect(new Set(steadyOutcomes.map((o) => o.decision))).toEqual(new Set(["continue"]));
    expect(flips).toBe(1); // only the initial banner
  });

  it("maps every decision the service emits", () => {
    expect(bannerFor("continue").tone).toBe("neutral");
    expect(bannerFor("stop_accept").tone).toBe("go");
    expect(bannerFor("recommend_redevelop").tone).toBe("stop");
    expect(bannerFor("exhausted").tone).toBe("done");
  });
});
