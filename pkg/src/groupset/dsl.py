"""Textual group-expression language.

Grammar (atoms case-insensitive, whitespace between tokens ignored)::

    expr     := wreath ('x' wreath)*        direct product, left-assoc
    wreath   := power ('wr' S<n>)*          wreath with symmetric top, left-assoc
    power    := primary ('^' exponent)*     binds tightest
    exponent := <int> | '(' exponent ')'
    primary  := 'C'<n> | 'S'<n> | 'A'<n> | '(' expr ')'

Examples: ``C3^4``, ``C2 wr S3``, ``C2 x S4``, ``S3^2``, ``(C2 x C3)^2``.

Parse failures raise :class:`GroupExprError` carrying the byte offset of
the offending token; they never abort the process.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .groups import (
    Alternating,
    Cyclic,
    DirectProduct,
    GroupSpec,
    OrderCapError,
    Power,
    Symmetric,
    Wreath,
)


class GroupExprError(ValueError):
    """Syntax or atom error in a group expression, with byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.message = message
        self.offset = offset


@dataclass(frozen=True)
class _Token:
    kind: str  # 'atom' | 'int' | 'op' | 'lparen' | 'rparen' | 'end'
    text: str
    offset: int


_ATOM_RE = re.compile(r"[CSAcsa][0-9]+")
_INT_RE = re.compile(r"[0-9]+")
_WR_RE = re.compile(r"[Ww][Rr]")


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()^":
            kind = {"(": "lparen", ")": "rparen", "^": "op"}[ch]
            tokens.append(_Token(kind, ch, i))
            i += 1
            continue
        m = _ATOM_RE.match(text, i)
        if m:
            tokens.append(_Token("atom", m.group(), i))
            i = m.end()
            continue
        m = _WR_RE.match(text, i)
        if m:
            tokens.append(_Token("op", "wr", i))
            i = m.end()
            continue
        if ch in "xX":
            tokens.append(_Token("op", "x", i))
            i += 1
            continue
        m = _INT_RE.match(text, i)
        if m:
            tokens.append(_Token("int", m.group(), i))
            i = m.end()
            continue
        if ch.isalpha():
            raise GroupExprError(f"unknown token {ch!r}", i)
        raise GroupExprError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> GroupExprError:
        return GroupExprError(message, self.peek().offset)

    def parse_expr(self) -> GroupSpec:
        parts = [self.parse_wreath()]
        while self.peek().kind == "op" and self.peek().text == "x":
            self.advance()
            parts.append(self.parse_wreath())
        if len(parts) == 1:
            return parts[0]
        return DirectProduct(tuple(parts))

    def parse_wreath(self) -> GroupSpec:
        spec = self.parse_power()
        while self.peek().kind == "op" and self.peek().text == "wr":
            self.advance()
            tok = self.peek()
            if tok.kind != "atom" or tok.text[0].lower() != "s":
                raise self.fail("wreath top must be a symmetric atom S<n>")
            self.advance()
            spec = Wreath(spec, int(tok.text[1:]))
        return spec

    def parse_power(self) -> GroupSpec:
        spec = self.parse_primary()
        while self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            spec = Power(spec, self.parse_exponent())
        return spec

    def parse_exponent(self) -> int:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return int(tok.text)
        if tok.kind == "lparen":
            self.advance()
            value = self.parse_exponent()
            if self.peek().kind != "rparen":
                raise self.fail("expected ')'")
            self.advance()
            return value
        raise self.fail("expected an integer exponent")

    def parse_primary(self) -> GroupSpec:
        tok = self.peek()
        if tok.kind == "atom":
            self.advance()
            letter = tok.text[0].lower()
            n = int(tok.text[1:])
            try:
                if letter == "c":
                    return Cyclic(n)
                if letter == "s":
                    return Symmetric(n)
                return Alternating(n)
            except OrderCapError:
                raise
            except Exception as exc:
                raise GroupExprError(f"unsupported atom {tok.text!r}: {exc}", tok.offset) from exc
        if tok.kind == "lparen":
            self.advance()
            spec = self.parse_expr()
            if self.peek().kind != "rparen":
                raise self.fail("expected ')'")
            self.advance()
            return spec
        raise self.fail("expected a group atom or '('")


def parse_group_expr(text: str) -> GroupSpec:
    """Parse text into a GroupSpec; raises GroupExprError with offset on failure.

    Order-cap violations propagate as :class:`groupset.groups.OrderCapError`.
    """
    parser = _Parser(_tokenize(text))
    spec = parser.parse_expr()
    if parser.peek().kind != "end":
        raise parser.fail(f"unexpected trailing input {parser.peek().text!r}")
    return spec


def print_group_expr(spec: GroupSpec) -> str:
    """Canonical text for a spec; ``parse_group_expr(print_group_expr(s)) == s``."""
    if isinstance(spec, Cyclic):
        return f"C{spec.n}"
    if isinstance(spec, Symmetric):
        return f"S{spec.n}"
    if isinstance(spec, Alternating):
        return f"A{spec.n}"
    if isinstance(spec, Power):
        base = print_group_expr(spec.base)
        if not isinstance(spec.base, (Cyclic, Symmetric, Alternating)):
            base = f"({base})"
        return f"{base}^{spec.k}"
    if isinstance(spec, Wreath):
        base = print_group_expr(spec.base)
        if isinstance(spec.base, DirectProduct):
            base = f"({base})"
        return f"{base} wr S{spec.n}"
    if isinstance(spec, DirectProduct):
        parts = []
        for part in spec.parts:
            text = print_group_expr(part)
            if isinstance(part, DirectProduct):
                text = f"({text})"
            parts.append(text)
        return " x ".join(parts)
    raise TypeError(f"not a group spec: {spec!r}")
