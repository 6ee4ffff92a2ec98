"""Recursive-descent parser for polynomial Hamiltonian expressions.

Grammar (whitespace insensitive):

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | atom
    atom   := NUMBER | VARIABLE | '(' expr ')'

Variables are x1, y1, z1, x2, y2, z2.  There is no division and there are no
function calls; after expansion the total degree must not exceed 3.  Error
positions are reported as byte offsets into the UTF-8 input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DegreeTooHigh, ExpressionSyntaxError, UnknownVariable
from .hamiltonian import MAX_DEGREE, VARIABLES, HamiltonianFunction

MAX_SOURCE_BYTES = 4096

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*()]))"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


Node = Num | Var | Neg | Add | Sub | Mul


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    pos: int   # char offset


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExpressionSyntaxError(
                f"unexpected character {text[bad]!r}", _byte_offset(text, bad),
                expected=("number", "variable", "operator"),
            )
        for kind in ("number", "ident", "op"):
            got = m.group(kind)
            if got is not None:
                tokens.append(_Token(kind, got, m.start(kind)))
                break
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, expected):
        tok = self.cur
        what = f"unexpected {tok.kind} {tok.text!r}" if tok.kind != "end" else "unexpected end of input"
        raise ExpressionSyntaxError(what, _byte_offset(self.text, tok.pos), expected=expected)

    def _eat_op(self, op: str) -> bool:
        if self.cur.kind == "op" and self.cur.text == op:
            self.i += 1
            return True
        return False

    def parse(self) -> Node:
        node = self.expr()
        if self.cur.kind != "end":
            self._fail(("+", "-", "*", "end of input"))
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self._eat_op("+"):
                node = Add(node, self.term())
            elif self._eat_op("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while self._eat_op("*"):
            node = Mul(node, self.factor())
        return node

    def factor(self) -> Node:
        if self._eat_op("-"):
            return Neg(self.factor())
        return self.atom()

    def atom(self) -> Node:
        tok = self.cur
        if tok.kind == "number":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text not in VARIABLES:
                raise UnknownVariable(tok.text, _byte_offset(self.text, tok.pos))
            self.i += 1
            return Var(tok.text)
        if self._eat_op("("):
            node = self.expr()
            if not self._eat_op(")"):
                self._fail((")",))
            return node
        self._fail(("number", "variable", "(", "-"))


def _to_text(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = _to_text(node.operand)
        if isinstance(node.operand, (Add, Sub, Mul)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Mul):
        left = _to_text(node.left)
        right = _to_text(node.right)
        if isinstance(node.left, (Add, Sub)):
            left = f"({left})"
        if isinstance(node.right, (Add, Sub)):
            right = f"({right})"
        return f"{left}*{right}"
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        left = _to_text(node.left)
        right = _to_text(node.right)
        if isinstance(node.right, (Add, Sub)):
            right = f"({right})"
        return f"{left} {op} {right}"
    raise TypeError(f"unknown node {node!r}")


_ZERO_EXP = (0, 0, 0, 0, 0, 0)


def _poly_add(a, b, sign=1.0):
    out = dict(a)
    for exp, c in b.items():
        out[exp] = out.get(exp, 0.0) + sign * c
    return {e: c for e, c in out.items() if c != 0.0}


def _poly_mul(a, b):
    out: dict[tuple, float] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) > MAX_DEGREE:
                raise DegreeTooHigh(
                    f"monomial of degree {sum(e)} exceeds the limit {MAX_DEGREE}"
                )
            out[e] = out.get(e, 0.0) + ca * cb
    return {e: c for e, c in out.items() if c != 0.0}


def _expand(node: Node) -> dict[tuple, float]:
    if isinstance(node, Num):
        return {_ZERO_EXP: node.value} if node.value != 0.0 else {}
    if isinstance(node, Var):
        exp = [0] * 6
        exp[VARIABLES.index(node.name)] = 1
        return {tuple(exp): 1.0}
    if isinstance(node, Neg):
        return {e: -c for e, c in _expand(node.operand).items()}
    if isinstance(node, Add):
        return _poly_add(_expand(node.left), _expand(node.right))
    if isinstance(node, Sub):
        return _poly_add(_expand(node.left), _expand(node.right), sign=-1.0)
    if isinstance(node, Mul):
        return _poly_mul(_expand(node.left), _expand(node.right))
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class HamiltonianExpr:
    """Parsed expression: syntax tree plus its expanded polynomial."""

    ast: Node
    terms: tuple

    def to_text(self) -> str:
        return _to_text(self.ast)

    def polynomial(self) -> HamiltonianFunction:
        return HamiltonianFunction(dict(self.terms))


def parse_hamiltonian(text: str) -> HamiltonianExpr:
    """Parse expression text; raises on syntax errors, unknown variables,
    or expanded degree above 3."""
    data = text.encode("utf-8")
    if len(data) > MAX_SOURCE_BYTES:
        raise ExpressionSyntaxError(
            f"source too large ({len(data)} bytes > {MAX_SOURCE_BYTES})", MAX_SOURCE_BYTES
        )
    ast = _Parser(text).parse()
    terms = _expand(ast)
    return HamiltonianExpr(ast=ast, terms=tuple(sorted(terms.items())))
