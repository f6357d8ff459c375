"""Tokenizer and recursive-descent parser for the search-space notation.

Grammar sketch (whitespace-insensitive):

    file    :=  (line NL)*          line := [label "=" expr] ["#" comment]
    expr    :=  item ("," item)*    a multi-item expr is a term list
    item    :=  "choice" "[" item ("," item)* "]"
             |  "[" item ("," item)* "]"      2 numbers: range, 3: stepped
             |  "{" item ("," item)* "}"      fixed series
             |  WORD "(" args ")" | "(" args ")"
             |  QUOTED | WORD | NUMBER | PERCENT | DIMS | BOOL | "-"
    args    :=  [WORD "="] item ("," [WORD "="] item)*
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import BadStep, DslSyntaxError, DuplicateName, EmptyChoice, ReversedRange
from .nodes import (
    Arg,
    Bool,
    BraceList,
    ChoiceExpr,
    ConfigAssignment,
    Dims,
    ListExpr,
    NotSelected,
    Number,
    Percent,
    RangeExpr,
    SearchSpace,
    SpaceEntry,
    SpaceExpr,
    SteppedExpr,
    Str,
    Term,
    TermList,
)

_PUNCT = set("[](){},=")
_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")
_DIMS = re.compile(r"^\d+x\d+(x\d+)?$")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "punct" | "atom" | "quoted" | "eof"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "#":
            break  # comment runs to end of line/expression
        if c in _PUNCT:
            toks.append(_Tok("punct", c, i))
            i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise DslSyntaxError("unterminated string", pos=i, expected='"')
            toks.append(_Tok("quoted", text[i + 1 : j], i))
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in _PUNCT and text[j] != '"' and text[j] != "#" \
                and not text[j].isspace():
            j += 1
        toks.append(_Tok("atom", text[i:j], i))
        i = j
    toks.append(_Tok("eof", "", n))
    return toks


def _classify_atom(tok: _Tok) -> SpaceExpr:
    text = tok.text
    if text == "-":
        return NotSelected()
    if text == "True":
        return Bool(True)
    if text == "False":
        return Bool(False)
    if text.endswith("%") and len(text) > 1:
        body = text[:-1]
        if _INT.match(body):
            return Percent(int(body))
        if _FLOAT.match(body):
            return Percent(float(body))
    if _INT.match(text):
        return Number(int(text))
    if _FLOAT.match(text) and ("." in text or "e" in text or "E" in text):
        return Number(float(text))
    if _DIMS.match(text):
        return Dims(tuple(int(s) for s in text.split("x")))
    return Str(text)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.kind == "eof" or tok.text != text:
            raise DslSyntaxError(f"found {tok.text!r}", pos=tok.pos, expected=repr(text))
        return tok

    # -- grammar --

    def parse_top(self) -> SpaceExpr:
        items = [self.parse_item()]
        while self.peek().text == ",":
            self.next()
            items.append(self.parse_item())
        tok = self.peek()
        if tok.kind != "eof":
            raise DslSyntaxError(f"trailing {tok.text!r}", pos=tok.pos, expected="end of expression")
        return items[0] if len(items) == 1 else TermList(tuple(items))

    def parse_item(self) -> SpaceExpr:
        tok = self.peek()
        if tok.kind == "quoted":
            self.next()
            return Str(tok.text, quoted=True)
        if tok.text == "[":
            return self._bracket_list()
        if tok.text == "{":
            return self._brace_list()
        if tok.text == "(":
            return Term("", self._args())
        if tok.kind == "atom":
            if tok.text == "choice" and self.toks[self.i + 1].text == "[":
                return self._choice()
            self.next()
            if self.peek().text == "(":
                return Term(tok.text, self._args())
            return _classify_atom(tok)
        raise DslSyntaxError(f"unexpected {tok.text!r}", pos=tok.pos, expected="an expression")

    def _comma_items(self, closing: str) -> list[SpaceExpr]:
        items = []
        if self.peek().text != closing:
            items.append(self.parse_item())
            while self.peek().text == ",":
                self.next()
                if self.peek().text == closing:
                    break  # tolerate a trailing comma
                items.append(self.parse_item())
        self.expect(closing)
        return items

    def _choice(self) -> ChoiceExpr:
        tok = self.next()  # 'choice'
        self.expect("[")
        options = self._comma_items("]")
        if not options:
            raise EmptyChoice("choice with no options", pos=tok.pos)
        return ChoiceExpr(tuple(options))

    def _bracket_list(self) -> SpaceExpr:
        open_tok = self.expect("[")
        items = self._comma_items("]")
        if not items:
            raise DslSyntaxError("empty bracket list", pos=open_tok.pos, expected="values")
        if all(isinstance(x, Number) for x in items):
            if len(items) == 2:
                lo, hi = (x.value for x in items)
                if lo > hi:
                    raise ReversedRange(f"range [{lo}, {hi}] has lo > hi", pos=open_tok.pos)
                return RangeExpr(lo, hi)
            if len(items) == 3:
                lo, hi, step = (x.value for x in items)
                if step <= 0:
                    raise BadStep(f"step must be > 0, got {step}", pos=open_tok.pos)
                if lo > hi:
                    raise ReversedRange(f"stepped range [{lo}, {hi}, {step}] has lo > hi",
                                        pos=open_tok.pos)
                return SteppedExpr(lo, hi, step)
        return ListExpr(tuple(items))

    def _brace_list(self) -> BraceList:
        self.expect("{")
        return BraceList(tuple(self._comma_items("}")))

    def _args(self) -> tuple[Arg, ...]:
        self.expect("(")
        args: list[Arg] = []
        if self.peek().text != ")":
            args.append(self._arg())
            while self.peek().text == ",":
                self.next()
                args.append(self._arg())
        self.expect(")")
        return tuple(args)

    def _arg(self) -> Arg:
        tok = self.peek()
        if tok.kind == "atom" and self.toks[self.i + 1].text == "=":
            self.next()
            self.next()
            return Arg(tok.text, self.parse_item())
        return Arg(None, self.parse_item())


def parse_expr(text: str) -> SpaceExpr:
    """Parse one search-space expression."""
    parser = _Parser(text)
    tok = parser.peek()
    if tok.kind == "eof":
        raise DslSyntaxError("empty expression", pos=0, expected="an expression")
    return parser.parse_top()


def _parse_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DslSyntaxError(f"line {lineno}: expected 'name = expr'", pos=0, expected="=")
        label, expr_text = stripped.split("=", 1)
        if not label.strip():
            raise DslSyntaxError(f"line {lineno}: missing name", pos=0, expected="a name")
        try:
            expr = parse_expr(expr_text)
        except DslSyntaxError as exc:
            raise type(exc)(f"line {lineno}: {exc.message}", pos=exc.pos, expected=exc.expected) \
                from None
        yield SpaceEntry(label.strip(), expr)


def parse_space(text: str) -> SearchSpace:
    """Parse a line-oriented 'name = expr' document ('.sss' format)."""
    space = SearchSpace()
    for entry in _parse_lines(text):
        space.add(entry)
    return space


def parse_config(text: str) -> ConfigAssignment:
    """Parse an assignment document (same surface syntax as a space)."""
    config = ConfigAssignment()
    for entry in _parse_lines(text):
        config.add(entry)
    return config
