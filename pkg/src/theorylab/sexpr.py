"""S-expression reader with source positions.

All DSL surfaces (formulas, theories, structures, Kripke data,
interpretations) share this layer.  An expression is either a symbol
(:class:`Sym`, carrying line/column) or a list of expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import ParseError

__all__ = ["Sym", "SExpr", "read", "read_all", "write"]


@dataclass(frozen=True)
class Sym:
    text: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return self.text


SExpr = Union[Sym, list]

_DELIMS = "()"


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c.isspace():
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in _DELIMS:
            yield (c, line, col)
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in _DELIMS \
                    and text[i] != ";":
                i += 1
                col += 1
            yield (text[start:i], line, start_col)
    yield (None, line, col)


def read_all(text: str) -> list[SExpr]:
    """Read every toplevel expression in `text`."""
    tokens = list(_tokenize(text))
    pos = 0
    out: list[SExpr] = []
    while tokens[pos][0] is not None:
        expr, pos = _read_at(tokens, pos)
        out.append(expr)
    return out


def read(text: str) -> SExpr:
    """Read exactly one toplevel expression."""
    exprs = read_all(text)
    if len(exprs) != 1:
        tk = 1 if not exprs else 1
        raise ParseError(f"expected one expression, found {len(exprs)}", tk, 1)
    return exprs[0]


def _read_at(tokens, pos):
    tok, line, col = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            tok2, line2, col2 = tokens[pos]
            if tok2 is None:
                raise ParseError("unclosed '('", line, col)
            if tok2 == ")":
                return items, pos + 1
            item, pos = _read_at(tokens, pos)
            items.append(item)
    if tok == ")":
        raise ParseError("unmatched ')'", line, col)
    if tok is None:
        raise ParseError("unexpected end of input", line, col)
    return Sym(tok, line, col), pos + 1


def write(expr: SExpr) -> str:
    if isinstance(expr, Sym):
        return expr.text
    return "(" + " ".join(write(e) for e in expr) + ")"
