"""Unique-formula-block detection and review ordering.

A block is a maximal set of formula cells that are copies of one another
(equal relative forms) and contiguous under strict 4-adjacency: directly
above, below, left, or right, with no blank or different-formula cell in
between. Each block is one test unit: checking its representative checks
the block.

Cells whose formulas did not parse become flagged singleton blocks so an
audit can proceed over messy workbooks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .addressing import CellAddress
from .formula import RelativeFormula, to_relative
from .workbook import Sheet, Workbook

__all__ = ["FormulaBlock", "detect_blocks", "review_order", "shuffled_order"]


@dataclass(frozen=True)
class FormulaBlock:
    """A maximal group of contiguous copy-equivalent formulas."""

    id: str
    representative: CellAddress
    members: tuple[CellAddress, ...]
    relative: RelativeFormula | None
    source: str
    flagged: bool = False

    @property
    def sheet(self) -> str:
        return self.representative.sheet

    @property
    def size(self) -> int:
        return len(self.members)


def detect_blocks(sheet: Sheet) -> list[FormulaBlock]:
    """Partition a sheet's formula cells into unique formula blocks.

    Connected components under 4-adjacency and relative-form equality,
    ordered column-major by representative (the block's first cell in
    column-major order).
    """
    formula_cells = sheet.formula_cells()
    forms: dict[tuple[int, int], RelativeFormula | None] = {}
    sources: dict[tuple[int, int], str] = {}
    for cell in formula_cells:
        key = (cell.address.column, cell.address.row)
        sources[key] = cell.formula or ""
        if cell.parse_error is not None or cell.parsed is None:
            forms[key] = None
        else:
            forms[key] = to_relative(cell.parsed, cell.address)

    blocks: list[FormulaBlock] = []
    visited: set[tuple[int, int]] = set()
    for start in sorted(forms):  # column-major discovery order
        if start in visited:
            continue
        form = forms[start]
        component = [start]
        visited.add(start)
        if form is not None:  # unparseable cells stay singletons
            queue = deque([start])
            while queue:
                col, row = queue.popleft()
                for ncol, nrow in (
                    (col, row - 1),
                    (col, row + 1),
                    (col - 1, row),
                    (col + 1, row),
                ):
                    key = (ncol, nrow)
                    if key in visited or forms.get(key) != form:
                        continue
                    visited.add(key)
                    component.append(key)
                    queue.append(key)
        component.sort()
        members = tuple(
            CellAddress(sheet=sheet.name, column=c, row=r) for c, r in component
        )
        representative = members[0]
        blocks.append(
            FormulaBlock(
                id=f"{sheet.name}!{representative.a1}",
                representative=representative,
                members=members,
                relative=form,
                source=sources[component[0]],
                flagged=form is None,
            )
        )
    blocks.sort(key=lambda b: (b.representative.column, b.representative.row))
    return blocks


def review_order(workbook: Workbook) -> list[FormulaBlock]:
    """All blocks in review order: sheets in workbook order, then
    column-major by representative within each sheet."""
    out: list[FormulaBlock] = []
    for sheet in workbook.sheets:
        out.extend(detect_blocks(sheet))
    return out


def shuffled_order(workbook: Workbook, seed: int) -> list[FormulaBlock]:
    """A seed-deterministic uniform permutation of the review order."""
    ordered = review_order(workbook)
    perm = np.random.default_rng(seed).permutation(len(ordered))
    return [ordered[i] for i in perm]
