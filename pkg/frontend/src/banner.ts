/** Decision banner: a pure mapping from the server's decision string. */

export type BannerTone = "neutral" | "go" | "stop" | "done";

export interface BannerState {
  decision: string;
  label: string;
  tone: BannerTone;
}

const LABELS: Record<string, [string, BannerTone]> = {
  continue: ["Keep testing", "neutral"],
  stop_accept: ["Testing can stop: acceptable error rate met", "go"],
  recommend_redevelop: ["Redevelopment recommended: reliability is poor", "stop"],
  exhausted: ["Every block reviewed", "done"],
};

export function bannerFor(decision: string): BannerState {
  const entry = LABELS[decision] ?? [decision, "neutral" as BannerTone];
  return { decision, label: entry[0], tone: entry[1] };
}

/** The banner flips exactly when the server decision changes. */
export function bannerChanged(previous: BannerState | null, next: BannerState): boolean {
  return previous === null || previous.decision !== next.decision;
}
