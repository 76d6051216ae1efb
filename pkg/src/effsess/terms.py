"""Imperative effect-calculus terms: AST, parser, and basic term operations.

The source language is tiny: variables, single-binder ``let``, unary
operation application, and constants.  ``get`` is a constant and ``put``
a unary operation; both are monomorphic at the store type declared in the
enclosing program header.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ValueType(Enum):
    UNIT = "unit"
    NAT = "nat"

    def __str__(self) -> str:
        return self.value


def parse_value_type(text: str) -> ValueType:
    for vt in ValueType:
        if vt.value == text:
            return vt
    raise ValueError(f"unknown value type {text!r}")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Let:
    name: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class OpApp:
    op: str
    arg: "Term"


@dataclass(frozen=True)
class Const:
    const: str


Term = Var | Let | OpApp | Const

# Surface grammar name sets.  Signatures live in `infer`; the parser only
# needs to know which identifiers take an argument.
OP_NAMES = ("suc", "put")
CONST_NAMES = ("zero", "unit", "get")


@dataclass(frozen=True)
class Program:
    """A source file: one declared store plus a root term.

    ``init`` is an ``int`` for a nat store and ``None`` for a unit store.
    """

    store_type: ValueType
    init: int | None
    root: Term


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Let):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, OpApp):
        return free_vars(t.arg)
    return frozenset()


def all_names(t: Term) -> frozenset[str]:
    """Every variable name occurring in ``t``, free or bound."""
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Let):
        return frozenset({t.name}) | all_names(t.bound) | all_names(t.body)
    if isinstance(t, OpApp):
        return all_names(t.arg)
    return frozenset()


def _fresh(base: str, avoid: frozenset[str]) -> str:
    if base not in avoid:
        return base
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


def substitute(t: Term, name: str, replacement: Term) -> Term:
    """Capture-avoiding substitution ``t[replacement/name]``."""
    if isinstance(t, Var):
        return replacement if t.name == name else t
    if isinstance(t, Const):
        return t
    if isinstance(t, OpApp):
        return OpApp(t.op, substitute(t.arg, name, replacement))
    if isinstance(t, Let):
        bound = substitute(t.bound, name, replacement)
        if t.name == name:
            return Let(t.name, bound, t.body)
        if t.name in free_vars(replacement) and name in free_vars(t.body):
            renamed = _fresh(t.name, free_vars(replacement) | all_names(t.body))
            body = substitute(t.body, t.name, Var(renamed))
            return Let(renamed, bound, substitute(body, name, replacement))
        return Let(t.name, bound, substitute(t.body, name, replacement))
    raise TypeError(f"not a term: {t!r}")


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.const
    if isinstance(t, OpApp):
        arg = format_term(t.arg)
        if isinstance(t.arg, Let):
            arg = f"({arg})"
        return f"{t.op} {arg}"
    if isinstance(t, Let):
        return f"let {t.name} = {format_term(t.bound)} in {format_term(t.body)}"
    raise TypeError(f"not a term: {t!r}")


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


_KEYWORDS = ("let", "in", "store", "init")


class _Lexer:
    """Shared word/punctuation lexer with `--` line comments."""

    def __init__(self, text: str, punct: tuple[str, ...]):
        self.text = text
        self.punct = sorted(punct, key=len, reverse=True)
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[tuple[str, str, int, int]] = []
        self._scan()
        self.index = 0

    def _advance(self, n: int) -> None:
        for ch in self.text[self.pos : self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _scan(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance(1)
                continue
            if text.startswith("--", self.pos):
                end = text.find("\n", self.pos)
                self._advance((end - self.pos) if end != -1 else len(text) - self.pos)
                continue
            line, col = self.line, self.col
            if ch.isalpha() or ch == "_":
                j = self.pos
                while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                    j += 1
                word = text[self.pos : j]
                self._advance(j - self.pos)
                self.tokens.append(("word", word, line, col))
                continue
            if ch.isdigit():
                j = self.pos
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.tokens.append(("num", text[self.pos : j], line, col))
                self._advance(j - self.pos)
                continue
            for p in self.punct:
                if text.startswith(p, self.pos):
                    self.tokens.append(("punct", p, line, col))
                    self._advance(len(p))
                    break
            else:
                raise ParseError(f"unexpected character {ch!r}", line, col)

    def peek(self) -> tuple[str, str, int, int] | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def next(self) -> tuple[str, str, int, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.line, self.col)
        self.index += 1
        return tok

    def expect(self, value: str) -> tuple[str, str, int, int]:
        tok = self.next()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "word" and tok[1] == word

    def at_punct(self, p: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "punct" and tok[1] == p

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        if tok is None:
            return ParseError(message, self.line, self.col)
        return ParseError(message, tok[2], tok[3])


class _TermParser:
    def __init__(self, lex: _Lexer):
        self.lex = lex

    def term(self) -> Term:
        if self.lex.at_word("let"):
            self.lex.next()
            tok = self.lex.next()
            if tok[0] != "word" or tok[1] in _KEYWORDS or tok[1] in OP_NAMES or tok[1] in CONST_NAMES:
                raise ParseError(f"expected binder name, found {tok[1]!r}", tok[2], tok[3])
            self.lex.expect("=")
            bound = self.term()
            self.lex.expect("in")
            body = self.term()
            return Let(tok[1], bound, body)
        return self.app()

    def app(self) -> Term:
        tok = self.lex.peek()
        if tok is not None and tok[0] == "word" and tok[1] in OP_NAMES:
            self.lex.next()
            nxt = self.lex.peek()
            if nxt is None or (nxt[0] == "word" and nxt[1] in ("in",)) or (nxt[0] == "punct" and nxt[1] == ")"):
                raise ParseError(f"{tok[1]} requires an argument", tok[2], tok[3])
            return OpApp(tok[1], self.app())
        return self.atom()

    def atom(self) -> Term:
        tok = self.lex.next()
        if tok[0] == "punct" and tok[1] == "(":
            inner = self.term()
            self.lex.expect(")")
            return inner
        if tok[0] == "word":
            if tok[1] in CONST_NAMES:
                return Const(tok[1])
            if tok[1] in _KEYWORDS:
                raise ParseError(f"unexpected keyword {tok[1]!r}", tok[2], tok[3])
            return Var(tok[1])
        raise ParseError(f"unexpected token {tok[1]!r}", tok[2], tok[3])


def parse_term(text: str) -> Term:
    lex = _Lexer(text, punct=("(", ")", "="))
    parser = _TermParser(lex)
    t = parser.term()
    tok = lex.peek()
    if tok is not None:
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    return t


def parse_program(text: str) -> Program:
    """Parse a program file: a ``store TYPE init LITERAL`` header, then a term."""
    lex = _Lexer(text, punct=("(", ")", "="))
    lex.expect("store")
    tok = lex.next()
    try:
        store_type = parse_value_type(tok[1])
    except ValueError:
        raise ParseError(f"store type must be nat or unit, found {tok[1]!r}", tok[2], tok[3]) from None
    lex.expect("init")
    tok = lex.next()
    init: int | None
    if store_type is ValueType.NAT:
        if tok[0] != "num":
            raise ParseError(f"nat store needs a numeric init, found {tok[1]!r}", tok[2], tok[3])
        init = int(tok[1])
    else:
        if tok[1] != "unit":
            raise ParseError(f"unit store needs init unit, found {tok[1]!r}", tok[2], tok[3])
        init = None
    root = _TermParser(lex).term()
    trailing = lex.peek()
    if trailing is not None:
        raise ParseError(f"trailing input {trailing[1]!r}", trailing[2], trailing[3])
    return Program(store_type, init, root)
