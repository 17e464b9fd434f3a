"""Shared workbook fixtures.

The 12-cell demo grid (9 literals, 3 formulas, two of them copies with an
empty column splitting the third off) is the canonical block-detection
case. The isolated-blocks builder makes workbooks with an exact number of
singleton blocks for trace and decision scenarios.
"""

from __future__ import annotations

import json

from spreadaudit import Workbook, load_workbook

FIG_GRID_DOC = {
    "name": "fig-grid",
    "sheets": [
        {
            "name": "Sheet1",
            "cells": [
                {"ref": "A1", "value": "1"},
                {"ref": "B1", "value": "5"},
                {"ref": "D1", "value": "7"},
                {"ref": "A2", "value": "3"},
                {"ref": "B2", "value": "7"},
                {"ref": "D2", "value": "8"},
                {"ref": "A3", "value": "5"},
                {"ref": "B3", "value": "9"},
                {"ref": "D3", "value": "9"},
                {"ref": "A5", "formula": "=A3+A2-A1"},
                {"ref": "B5", "formula": "=B3+B2-B1"},
                {"ref": "D5", "formula": "=D3+D2-D1"},
            ],
        }
    ],
}


def fig_grid_workbook() -> Workbook:
    return load_workbook(json.dumps(FIG_GRID_DOC))


def isolated_blocks_doc(n_blocks: int, name: str = "synthetic") -> dict:
    """A workbook whose sheet has exactly ``n_blocks`` singleton blocks.

    Cells A1..An hold formulas with identical reference shape but distinct
    literals, so vertical neighbours are not copy-equivalent and every
    cell is its own block; review order is A1, A2, ...
    """
    cells = [
        {"ref": f"A{row}", "formula": f"=B{row}+{row}"}
        for row in range(1, n_blocks + 1)
    ]
    return {"name": name, "sheets": [{"name": "Sheet1", "cells": cells}]}


def isolated_blocks_workbook(n_blocks: int, name: str = "synthetic") -> Workbook:
    return load_workbook(isolated_blocks_doc(n_blocks, name))
