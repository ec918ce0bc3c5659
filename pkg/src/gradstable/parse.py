"""Polynomial input grammar.

    poly   := ['+'|'-'] term (('+'|'-') term)*
    term   := [coeff ['*']] factor ('*' factor)*  |  coeff
    factor := var ['^' int]
    coeff  := int | int '/' int

Whitespace is ignored.  ``**`` is accepted as a synonym for ``^`` and the
unicode minus sign for ``-``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .poly import CriticalPointError, PolyMapGerm, Polynomial, PolynomialError, check_critical_origin


class ParseError(PolynomialError):
    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
            if text is not None:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    text = text.replace("−", "-")
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", pos + stripped, text)
        kind = m.lastgroup
        value = m.group(kind)
        out.append((kind, "^" if value == "**" else value, m.start(kind)))
        pos = m.end()
    return out


def parse_polynomial(text: str, variables: Sequence[str], *, require_critical: bool = True) -> Polynomial:
    """Parse ``text`` into an exact polynomial in ``variables``.

    With ``require_critical`` (the default) the result must vanish to second
    order at the origin; otherwise a :class:`CriticalPointError` is raised.
    """
    variables = list(variables)
    if len(set(variables)) != len(variables):
        raise ParseError("variable names must be distinct")
    if not variables:
        raise ParseError("no variables given")
    index = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty polynomial", 0, text)
    pos = 0
    terms: dict[tuple[int, ...], Fraction] = {}

    def peek():
        return toks[pos] if pos < len(toks) else None

    def where() -> int:
        t = peek()
        return t[2] if t else len(text)

    def expect_int() -> int:
        nonlocal pos
        t = peek()
        if t is None or t[0] != "num":
            raise ParseError("expected an integer", where(), text)
        pos += 1
        return int(t[1])

    def factor(exp: list[int]) -> None:
        nonlocal pos
        t = peek()
        if t is None or t[0] != "name":
            raise ParseError("expected a variable", where(), text)
        if t[1] not in index:
            raise ParseError(f"unknown variable {t[1]!r}", t[2], text)
        pos += 1
        e = 1
        t2 = peek()
        if t2 and t2[0] == "op" and t2[1] == "^":
            pos += 1
            e = expect_int()
        exp[index[t[1]]] += e

    def is_op(t, chars: str) -> bool:
        return t is not None and t[0] == "op" and t[1] in chars

    sign = 1
    if is_op(peek(), "+-"):
        sign = -1 if peek()[1] == "-" else 1
        pos += 1
    while True:
        coeff = Fraction(sign)
        exp = [0] * n
        t = peek()
        if t is None:
            raise ParseError("expected a term", where(), text)
        need_factor = True
        if t[0] == "num":
            num = expect_int()
            den = 1
            if is_op(peek(), "/"):
                pos += 1
                den = expect_int()
                if den == 0:
                    raise ParseError("zero denominator", toks[pos - 1][2], text)
            coeff *= Fraction(num, den)
            if is_op(peek(), "*"):
                pos += 1
            elif not (peek() and peek()[0] == "name"):
                need_factor = False
        if need_factor:
            factor(exp)
            while is_op(peek(), "*"):
                pos += 1
                factor(exp)
        key = tuple(exp)
        terms[key] = terms.get(key, Fraction(0)) + coeff
        t = peek()
        if t is None:
            break
        if is_op(t, "+-"):
            sign = -1 if t[1] == "-" else 1
            pos += 1
            continue
        raise ParseError(f"unexpected token {t[1]!r}", t[2], text)
    p = Polynomial(n, terms)
    if require_critical:
        check_critical_origin(p)
    return p


def parse_map(text: str, variables: Sequence[str]) -> PolyMapGerm:
    """Parse ``"comp1; comp2; ..."`` into a map germ (components vanish at 0)."""
    parts = [s for s in re.split(r"[;\n]", text) if s.strip()]
    if len(parts) != len(variables):
        raise ParseError(f"map has {len(parts)} components, expected {len(variables)}")
    comps = []
    for part in parts:
        comp = parse_polynomial(part, variables, require_critical=False)
        if comp.coefficient((0,) * len(variables)):
            raise ParseError(f"map component {part.strip()!r} has a non-zero constant term")
        comps.append(comp)
    return PolyMapGerm(comps)


def read_polynomial_source(source: str) -> str:
    """``source`` is either polynomial text or a path to a file holding it."""
    p = Path(source)
    try:
        if p.is_file():
            return p.read_text().strip()
    except OSError:
        pass
    return source


__all__ = ["ParseError", "CriticalPointError", "parse_polynomial", "parse_map", "read_polynomial_source"]
