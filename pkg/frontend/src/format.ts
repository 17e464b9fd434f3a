/**
 * Verbatim display of server-sent statistics.
 *
 * The console's contract is zero client-side math: a number shown to the
 * auditor is the exact value from a service response, stringified the way
 * JavaScript round-trips it. Nothing here rounds, scales, or recomputes.
 */

export function stat(value: number): string {
  return String(value);
}

export function count(value: number): string {
  return String(value);
}

export function interval(pair: [number, number]): string {
  return `[${String(pair[0])}, ${String(pair[1])}]`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
