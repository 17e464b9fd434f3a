/**
 * Sheet rendering: an HTML table of the grid snapshot with one color
 * class per block, judged/pending badges, and the current block outlined.
 *
 * Only layout happens here (A1 refs to row/column positions); cell
 * content and block state come straight from the service.
 */

import type { GridResponse } from "./api.js";
import { escapeHtml } from "./format.js";

const PALETTE_SIZE = 8;

function parseRef(ref: string): { column: number; row: number } {
  const match = /^([A-Z]+)([0-9]+)$/.exec(ref);
  if (!match) throw new Error(`not an A1 reference: ${ref}`);
  let column = 0;
  for (const ch of match[1]!) column = column * 26 + (ch.charCodeAt(0) - 64);
  return { column, row: Number(match[2]) };
}

function columnLetters(column: number): string {
  let out = "";
  let n = column;
  while (n > 0) {
    const r = (n - 1) % 26;
    out = String.fromCharCode(65 + r) + out;
    n = Math.floor((n - 1) / 26);
  }
  return out;
}

/** Render the grid snapshot; blocks get stable palette classes in order. */
export function renderGrid(grid: GridResponse): string {
  const colorOf = new Map<string, number>();
  grid.blocks.forEach((block, index) => colorOf.set(block.id, index % PALETTE_SIZE));
  const stateOf = new Map(grid.blocks.map((b) => [b.id, b]));

  let maxColumn = 1;
  let maxRow = 1;
  const byPosition = new Map<string, (typeof grid.cells)[number]>();
  for (const cell of grid.cells) {
    const pos = parseRef(cell.ref);
    maxColumn = Math.max(maxColumn, pos.column);
    maxRow = Math.max(maxRow, pos.row);
    byPosition.set(`${pos.column}:${pos.row}`, cell);
  }

  const head = ['<tr><th class="corner"></th>'];
  for (let c = 1; c <= maxColumn; c++) head.push(`<th>${columnLetters(c)}</th>`);
  head.push("</tr>");

  const rows: string[] = [];
  for (let r = 1; r <= maxRow; r++) {
    const tds = [`<tr><th>${r}</th>`];
    for (let c = 1; c <= maxColumn; c++) {
      const cell = byPosition.get(`${c}:${r}`);
      if (cell === undefined) {
        tds.push('<td class="empty"></td>');
        continue;
      }
      if (cell.kind === "value") {
        tds.push(`<td class="value">${escapeHtml(cell.value ?? "")}</td>`);
        continue;
      }
      const blockId = cell.block ?? "";
      const block = stateOf.get(blockId);
      const classes = ["formula", `block-c${colorOf.get(blockId) ?? 0}`];
      if (block?.current) classes.push("current");
      if (block?.judged) classes.push("judged");
      if (block?.flagged) classes.push("flagged");
      const badge = block?.judged
        ? '<span class="badge done">judged</span>'
        : '<span class="badge pending">pending</span>';
      tds.push(
        `<td class="${classes.join(" ")}" data-block="${escapeHtml(blockId)}" ` +
          `title="${escapeHtml(blockId)}">` +
          `<code>${escapeHtml(cell.formula ?? "")}</code>${badge}</td>`,
      );
    }
    tds.push("</tr>");
    rows.push(tds.join(""));
  }

  return `<table class="grid" data-sheet="${escapeHtml(grid.sheet)}">${head.join("")}${rows.join("")}</table>`;
}
