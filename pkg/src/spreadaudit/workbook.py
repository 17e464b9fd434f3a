"""Workbook data model and loaders.

The canonical ingestion format is a JSON document::

    { "name": str,
      "sheets": [ { "name": str,
                    "cells": [ {"ref": "A1", "formula": "=..."} |
                               {"ref": "A1", "value": "text"} ] } ] }

Exactly one of formula/value per cell; omitted cells are empty. A CSV
convenience loader takes one sheet per file, row-major, each non-empty
field either a literal or an "="-prefixed formula.

Formula cells are parsed at load time; a cell whose formula the grammar
rejects is kept and flagged, never silently treated as a value.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .addressing import CellAddress
from .formula import FormulaParseError, ParsedFormula, parse_formula

__all__ = [
    "Cell",
    "Sheet",
    "Workbook",
    "WorkbookError",
    "WorkbookSchemaError",
    "WorkbookIntegrityError",
    "load_workbook",
    "load_sheet_csv",
    "workbook_from_csv",
]


class WorkbookError(ValueError):
    """Base class for workbook ingestion failures."""


class WorkbookSchemaError(WorkbookError):
    """Document shape violation; ``path`` locates the offending node."""

    def __init__(self, message: str, path: str) -> None:
        super().__init__(f"{message} (at {path})")
        self.path = path


class WorkbookIntegrityError(WorkbookError):
    """Structurally valid document with inconsistent content."""


@dataclass(frozen=True)
class Cell:
    """A non-empty cell: either a formula or a literal value."""

    address: CellAddress
    formula: str | None = None
    value: str | None = None
    parsed: ParsedFormula | None = field(default=None, repr=False, compare=False)
    parse_error: str | None = None

    @property
    def is_formula(self) -> bool:
        return self.formula is not None


class Sheet:
    """One worksheet: a name and a sparse cell grid."""

    def __init__(self, name: str, cells: list[Cell]) -> None:
        self.name = name
        grid: dict[tuple[int, int], Cell] = {}
        for cell in cells:
            key = (cell.address.column, cell.address.row)
            if key in grid:
                raise WorkbookIntegrityError(
                    f"duplicate cell {cell.address} in sheet {name!r}"
                )
            grid[key] = cell
        self._grid = grid

    def cell_at(self, column: int, row: int) -> Cell | None:
        return self._grid.get((column, row))

    def cells(self) -> list[Cell]:
        """All non-empty cells in column-major order."""
        return [self._grid[key] for key in sorted(self._grid)]

    def formula_cells(self) -> list[Cell]:
        return [c for c in self.cells() if c.is_formula]

    def __len__(self) -> int:
        return len(self._grid)

    def __repr__(self) -> str:
        return f"Sheet(name={self.name!r}, cells={len(self._grid)})"


class Workbook:
    def __init__(self, name: str, sheets: list[Sheet]) -> None:
        self.name = name
        self.sheets = tuple(sheets)
        by_name: dict[str, Sheet] = {}
        for sheet in sheets:
            if sheet.name in by_name:
                raise WorkbookIntegrityError(f"duplicate sheet name {sheet.name!r}")
            by_name[sheet.name] = sheet
        self._by_name = by_name

    def sheet(self, name: str) -> Sheet | None:
        return self._by_name.get(name)

    @property
    def cell_count(self) -> int:
        return sum(len(s) for s in self.sheets)

    @property
    def formula_count(self) -> int:
        return sum(len(s.formula_cells()) for s in self.sheets)

    @property
    def unparseable_count(self) -> int:
        return sum(
            1 for s in self.sheets for c in s.formula_cells() if c.parse_error
        )

    def __repr__(self) -> str:
        return (
            f"Workbook(name={self.name!r}, sheets={len(self.sheets)}, "
            f"cells={self.cell_count}, formulas={self.formula_count})"
        )


def _make_cell(address: CellAddress, formula: str | None, value: str | None) -> Cell:
    if formula is not None:
        try:
            parsed = parse_formula(formula)
        except FormulaParseError as exc:
            return Cell(address=address, formula=formula, parse_error=str(exc))
        return Cell(address=address, formula=formula, parsed=parsed)
    return Cell(address=address, value=value)


def _require(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise WorkbookSchemaError(message, path)


def load_workbook(document: bytes | str | dict) -> Workbook:
    """Build a Workbook from the JSON document format."""
    if isinstance(document, (bytes, str)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise WorkbookSchemaError(f"not valid JSON: {exc}", "$") from exc
    else:
        data = document
    _require(isinstance(data, dict), "document must be an object", "$")
    _require("name" in data, 'missing "name"', "$")
    _require(isinstance(data["name"], str), '"name" must be a string', "$.name")
    _require("sheets" in data, 'missing "sheets"', "$")
    _require(isinstance(data["sheets"], list), '"sheets" must be a list', "$.sheets")

    sheets: list[Sheet] = []
    for si, sheet_node in enumerate(data["sheets"]):
        spath = f"$.sheets[{si}]"
        _require(isinstance(sheet_node, dict), "sheet must be an object", spath)
        _require("name" in sheet_node, 'missing "name"', spath)
        name = sheet_node["name"]
        _require(isinstance(name, str), '"name" must be a string', f"{spath}.name")
        _require("cells" in sheet_node, 'missing "cells"', spath)
        cell_nodes = sheet_node["cells"]
        _require(isinstance(cell_nodes, list), '"cells" must be a list', f"{spath}.cells")

        cells: list[Cell] = []
        for ci, node in enumerate(cell_nodes):
            cpath = f"{spath}.cells[{ci}]"
            _require(isinstance(node, dict), "cell must be an object", cpath)
            _require("ref" in node, 'missing "ref"', cpath)
            ref = node["ref"]
            _require(isinstance(ref, str), '"ref" must be a string', f"{cpath}.ref")
            try:
                address = CellAddress.from_a1(name, ref)
            except ValueError as exc:
                raise WorkbookSchemaError(str(exc), f"{cpath}.ref") from exc
            has_formula = "formula" in node
            has_value = "value" in node
            _require(
                has_formula != has_value,
                'cell must carry exactly one of "formula" or "value"',
                cpath,
            )
            if has_formula:
                formula = node["formula"]
                _require(
                    isinstance(formula, str),
                    '"formula" must be a string',
                    f"{cpath}.formula",
                )
                _require(
                    formula.startswith("="),
                    'formula must begin with "="',
                    f"{cpath}.formula",
                )
                cells.append(_make_cell(address, formula, None))
            else:
                value = node["value"]
                _require(
                    isinstance(value, str),
                    '"value" must be a string',
                    f"{cpath}.value",
                )
                cells.append(_make_cell(address, None, value))
        sheets.append(Sheet(name, cells))
    return Workbook(data["name"], sheets)


def load_sheet_csv(text: str, name: str = "Sheet1") -> Sheet:
    """One sheet from CSV text: row-major, "="-prefixed fields are formulas."""
    cells: list[Cell] = []
    for ri, row in enumerate(csv.reader(io.StringIO(text))):
        for ci, raw in enumerate(row):
            if raw == "":
                continue
            address = CellAddress(sheet=name, column=ci + 1, row=ri + 1)
            if raw.startswith("="):
                cells.append(_make_cell(address, raw, None))
            else:
                cells.append(_make_cell(address, None, raw))
    return Sheet(name, cells)


def workbook_from_csv(workbook_name: str, sheets: list[tuple[str, str]]) -> Workbook:
    """Assemble a workbook from (sheet name, CSV text) pairs."""
    return Workbook(workbook_name, [load_sheet_csv(t, n) for n, t in sheets])
