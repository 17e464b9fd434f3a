"""Cell addresses and A1-style column arithmetic.

Columns use bijective base-26 letters (A=1 ... Z=26, AA=27, ...) with no
upper limit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_A1_RE = re.compile(r"^\$?([A-Za-z]+)\$?([0-9]+)$")


def column_letters(column: int) -> str:
    """1-based column index to letters: 1 -> A, 26 -> Z, 27 -> AA."""
    if column < 1:
        raise ValueError(f"column index must be >= 1, got {column}")
    out = []
    n = column
    while n:
        n, r = divmod(n - 1, 26)
        out.append(chr(ord("A") + r))
    return "".join(reversed(out))


def letters_to_column(letters: str) -> int:
    """Column letters to 1-based index: A -> 1, AA -> 27."""
    if not letters or not letters.isalpha():
        raise ValueError(f"invalid column letters {letters!r}")
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


@dataclass(frozen=True, order=True)
class CellAddress:
    """A cell position: sheet name plus 1-based column and row.

    Ordering is column-major within a sheet (sheet, column, row), which is
    the review order the audit walks.
    """

    sheet: str
    column: int
    row: int

    def __post_init__(self) -> None:
        if self.column < 1 or self.row < 1:
            raise ValueError(
                f"column and row must be >= 1, got ({self.column}, {self.row})"
            )

    @property
    def a1(self) -> str:
        return f"{column_letters(self.column)}{self.row}"

    @classmethod
    def from_a1(cls, sheet: str, ref: str) -> "CellAddress":
        m = _A1_RE.match(ref.strip())
        if m is None:
            raise ValueError(f"not an A1-style reference: {ref!r}")
        column = letters_to_column(m.group(1))
        row = int(m.group(2))
        if row < 1:
            raise ValueError(f"row must be >= 1 in reference {ref!r}")
        return cls(sheet=sheet, column=column, row=row)

    def __str__(self) -> str:
        return f"{self.sheet}!{self.a1}"
