"""Formula tokenizer, validator, and copy-equivalence normalization.

A formula is lexed into tokens (cell references with their absolute/relative
flags, numbers, strings, operators, function calls, and opaque passthrough
for constructs the grammar does not model, such as array literals) and
checked against an expression grammar so unbalanced parentheses and dangling
operators fail with a character position.

Copy equivalence works on the relative form: every relative reference
component is rewritten as an offset from the host cell, absolute components
stay absolute, and function names are case-normalized. Two formulas that are
fill-down/fill-right copies of one another produce identical relative forms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

from .addressing import CellAddress, column_letters, letters_to_column

__all__ = [
    "FormulaParseError",
    "Ref",
    "Token",
    "ParsedFormula",
    "RelRef",
    "RelativeFormula",
    "parse_formula",
    "to_relative",
    "render",
]


class FormulaParseError(ValueError):
    """Formula text the grammar rejects; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


# Token kinds
REF = "ref"
NUMBER = "number"
STRING = "string"
BOOL = "bool"
FUNC = "func"
OP = "op"
LPAREN = "lparen"
RPAREN = "rparen"
COMMA = "comma"
COLON = "colon"
PERCENT = "percent"
OPAQUE = "opaque"


@dataclass(frozen=True)
class Ref:
    """A parsed cell reference with its anchoring flags."""

    sheet: str | None
    column: int
    row: int
    column_absolute: bool
    row_absolute: bool


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int
    ref: Ref | None = None


@dataclass(frozen=True)
class ParsedFormula:
    source: str
    tokens: tuple[Token, ...]

    @property
    def references(self) -> tuple[Ref, ...]:
        return tuple(t.ref for t in self.tokens if t.kind == REF and t.ref is not None)


_WS_RE = re.compile(r"\s+")
_STRING_RE = re.compile(r'"(?:[^"]|"")*"')
_FUNC_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_.]*)\s*\(")
_REF_RE = re.compile(
    r"(?:(?:'((?:[^']|'')+)'|([A-Za-z_][A-Za-z0-9_.]*))!)?"
    r"(\$?)([A-Za-z]+)(\$?)([1-9][0-9]*)(?![A-Za-z0-9_$])"
)
_BOOL_RE = re.compile(r"(TRUE|FALSE)(?![A-Za-z0-9_.])", re.IGNORECASE)
_NUMBER_RE = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_OP_RE = re.compile(r"<=|>=|<>|[=<>+\-*/^&]")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_ERRLIT_RE = re.compile(r"#[A-Za-z0-9_/]+[!?]?")

_BINARY_OPS = frozenset(["+", "-", "*", "/", "^", "&", "=", "<", ">", "<=", ">=", "<>"])


def _scan_balanced(source: str, start: int, open_ch: str, close_ch: str) -> int:
    depth = 0
    i = start
    while i < len(source):
        c = source[i]
        if c == open_ch:
            depth += 1
        elif c == close_ch:
            depth -= 1
            if depth == 0:
                return i + 1
        elif c == '"':
            m = _STRING_RE.match(source, i)
            if m is None:
                raise FormulaParseError("unterminated string literal", i)
            i = m.end() - 1
        i += 1
    raise FormulaParseError(f"unmatched {open_ch!r}", start)


def _tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 1  # skip the leading "="
    n = len(source)
    while i < n:
        m = _WS_RE.match(source, i)
        if m:
            i = m.end()
            continue
        c = source[i]
        if c == '"':
            m = _STRING_RE.match(source, i)
            if m is None:
                raise FormulaParseError("unterminated string literal", i)
            tokens.append(Token(STRING, m.group(0), i))
            i = m.end()
            continue
        m = _FUNC_RE.match(source, i)
        if m:
            tokens.append(Token(FUNC, m.group(1), i))
            tokens.append(Token(LPAREN, "(", m.end() - 1))
            i = m.end()
            continue
        m = _REF_RE.match(source, i)
        if m:
            qsheet, sheet, col_abs, col, row_abs, row = m.groups()
            name = qsheet.replace("''", "'") if qsheet is not None else sheet
            tokens.append(
                Token(
                    REF,
                    m.group(0),
                    i,
                    Ref(
                        sheet=name,
                        column=letters_to_column(col),
                        row=int(row),
                        column_absolute=col_abs == "$",
                        row_absolute=row_abs == "$",
                    ),
                )
            )
            i = m.end()
            continue
        m = _BOOL_RE.match(source, i)
        if m:
            tokens.append(Token(BOOL, m.group(0), i))
            i = m.end()
            continue
        m = _NUMBER_RE.match(source, i)
        if m:
            tokens.append(Token(NUMBER, m.group(0), i))
            i = m.end()
            continue
        m = _OP_RE.match(source, i)
        if m:
            tokens.append(Token(OP, m.group(0), i))
            i = m.end()
            continue
        if c == "(":
            tokens.append(Token(LPAREN, c, i))
            i += 1
            continue
        if c == ")":
            tokens.append(Token(RPAREN, c, i))
            i += 1
            continue
        if c == ",":
            tokens.append(Token(COMMA, c, i))
            i += 1
            continue
        if c == ":":
            tokens.append(Token(COLON, c, i))
            i += 1
            continue
        if c == "%":
            tokens.append(Token(PERCENT, c, i))
            i += 1
            continue
        if c in "{[":
            end = _scan_balanced(source, i, c, "}" if c == "{" else "]")
            tokens.append(Token(OPAQUE, source[i:end], i))
            i = end
            continue
        if c == "#":
            m = _ERRLIT_RE.match(source, i)
            if m:
                tokens.append(Token(OPAQUE, m.group(0), i))
                i = m.end()
                continue
        m = _IDENT_RE.match(source, i)
        if m:  # named range or unknown word: passes through verbatim
            tokens.append(Token(OPAQUE, m.group(0), i))
            i = m.end()
            continue
        tokens.append(Token(OPAQUE, c, i))
        i += 1
    return tokens


class _Validator:
    """Recursive-descent pass over the token stream; positions for errors."""

    def __init__(self, tokens: list[Token], source: str) -> None:
        self._tokens = tokens
        self._source = source
        self._i = 0

    def validate(self) -> None:
        self._expression()
        tok = self._peek()
        if tok is not None:
            raise FormulaParseError(f"unexpected {tok.text!r}", tok.pos)

    def _peek(self) -> Token | None:
        return self._tokens[self._i] if self._i < len(self._tokens) else None

    def _advance(self) -> Token:
        tok = self._tokens[self._i]
        self._i += 1
        return tok

    def _end_pos(self) -> int:
        return len(self._source)

    def _expression(self) -> None:
        self._operand_chain()
        while True:
            tok = self._peek()
            if tok is None or tok.kind != OP or tok.text not in _BINARY_OPS:
                return
            self._advance()
            self._operand_chain()

    def _operand_chain(self) -> None:
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == OP and tok.text in ("+", "-"):
                self._advance()
            else:
                break
        self._operand()
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == PERCENT:
                self._advance()
            else:
                break

    def _operand(self) -> None:
        tok = self._peek()
        if tok is None:
            raise FormulaParseError("expected a value", self._end_pos())
        if tok.kind in (NUMBER, STRING, BOOL, OPAQUE):
            self._advance()
            return
        if tok.kind == REF:
            self._advance()
            nxt = self._peek()
            if nxt is not None and nxt.kind == COLON:
                self._advance()
                end = self._peek()
                if end is None or end.kind != REF:
                    pos = end.pos if end is not None else self._end_pos()
                    raise FormulaParseError("expected a range endpoint", pos)
                self._advance()
            return
        if tok.kind == FUNC:
            self._advance()
            self._expect(LPAREN, "(")
            nxt = self._peek()
            if nxt is not None and nxt.kind == RPAREN:
                self._advance()
                return
            self._expression()
            while True:
                nxt = self._peek()
                if nxt is not None and nxt.kind == COMMA:
                    self._advance()
                    self._expression()
                else:
                    break
            self._expect(RPAREN, ")")
            return
        if tok.kind == LPAREN:
            self._advance()
            self._expression()
            self._expect(RPAREN, ")")
            return
        raise FormulaParseError(f"unexpected {tok.text!r}", tok.pos)

    def _expect(self, kind: str, text: str) -> None:
        tok = self._peek()
        if tok is None:
            raise FormulaParseError(f"expected {text!r}", self._end_pos())
        if tok.kind != kind:
            raise FormulaParseError(
                f"expected {text!r} but found {tok.text!r}", tok.pos
            )
        self._advance()


def parse_formula(source: str) -> ParsedFormula:
    """Lex and validate a formula. ``source`` must begin with "="."""
    if not source.startswith("="):
        raise FormulaParseError('formula must begin with "="', 0)
    tokens = _tokenize(source)
    if not tokens:
        raise FormulaParseError("empty formula", len(source))
    _Validator(tokens, source).validate()
    return ParsedFormula(source=source, tokens=tuple(tokens))


@dataclass(frozen=True)
class RelRef:
    """A reference expressed relative to its host cell.

    ``column``/``row`` hold offsets for relative components and absolute
    1-based positions for $-anchored ones.
    """

    sheet: str | None
    column: int
    row: int
    column_absolute: bool
    row_absolute: bool

    def __str__(self) -> str:
        # R1C1-style: R[dr]C[dc] for offsets, RnCm for absolutes; a zero
        # offset prints as a bare R or C.
        def part(letter: str, value: int, absolute: bool) -> str:
            if absolute:
                return f"{letter}{value}"
            return letter if value == 0 else f"{letter}[{value:+d}]"

        body = part("R", self.row, self.row_absolute) + part(
            "C", self.column, self.column_absolute
        )
        return body if self.sheet is None else f"{self.sheet}!{body}"


@dataclass(frozen=True)
class RelativeFormula:
    """Host-independent canonical form of a formula.

    Equality on the token tuple is exactly copy equivalence: cells whose
    formulas are copies of one another yield equal values.
    """

    tokens: tuple[RelRef | str, ...]

    @cached_property
    def canonical(self) -> str:
        return " ".join(str(t) for t in self.tokens)

    def __str__(self) -> str:
        return self.canonical


def to_relative(parsed: ParsedFormula, host: CellAddress) -> RelativeFormula:
    """Rewrite references as offsets from ``host``; normalize name case."""
    out: list[RelRef | str] = []
    for tok in parsed.tokens:
        if tok.kind == REF and tok.ref is not None:
            r = tok.ref
            out.append(
                RelRef(
                    sheet=r.sheet,
                    column=r.column if r.column_absolute else r.column - host.column,
                    row=r.row if r.row_absolute else r.row - host.row,
                    column_absolute=r.column_absolute,
                    row_absolute=r.row_absolute,
                )
            )
        elif tok.kind in (FUNC, BOOL):
            out.append(tok.text.upper())
        else:
            out.append(tok.text)
    return RelativeFormula(tokens=tuple(out))


def render(relative: RelativeFormula, host: CellAddress) -> str:
    """Print the formula a copy of this form would hold at ``host``.

    Raises ValueError when a relative offset walks off the top or left
    edge of the sheet.
    """
    parts: list[str] = ["="]
    for tok in relative.tokens:
        if isinstance(tok, RelRef):
            column = tok.column if tok.column_absolute else host.column + tok.column
            row = tok.row if tok.row_absolute else host.row + tok.row
            if column < 1 or row < 1:
                raise ValueError(
                    f"reference {tok} escapes the sheet when anchored at {host}"
                )
            text = ""
            if tok.sheet is not None:
                name = tok.sheet
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", name):
                    name = "'" + name.replace("'", "''") + "'"
                text += f"{name}!"
            if tok.column_absolute:
                text += "$"
            text += column_letters(column)
            if tok.row_absolute:
                text += "$"
            text += str(row)
            parts.append(text)
        else:
            parts.append(tok)
    return "".join(parts)
