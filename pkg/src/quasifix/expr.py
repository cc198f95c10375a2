"""Small arithmetic expression language.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-"? power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right-associative and unary minus applies to a whole power, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^9``.  Evaluation works on Python
floats and on numpy arrays alike; every intermediate result is checked and a
:class:`DomainError` names the subexpression that went wrong.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "ExprError", "ParseError", "DomainError", "UnboundVariableError",
    "Num", "Var", "Neg", "BinOp", "Call", "Expression", "parse", "evaluate",
]

FUNCTIONS = {"min": None, "max": None, "abs": 1, "sqrt": 1, "exp": 1, "log": 1}


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        hint = f"; expected {expected}" if expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")


class DomainError(ExprError):
    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class UnboundVariableError(ExprError):
    pass


# ----------------------------------------------------------------------------
# Tree
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int]


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int]


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple[int, int]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple[int, int]


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]
    span: tuple[int, int]


Node = Union[Num, Var, Neg, BinOp, Call]


# ----------------------------------------------------------------------------
# Lexer / parser
# ----------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | ident | op | eof
    text: str
    pos: int  # character index


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    n = len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        i = m.end()
    toks.append(_Tok("eof", "", n))
    return toks


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _error(self, expected: str) -> ParseError:
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"syntax error: unexpected {found}",
                          _byte_offset(self.text, tok.pos), expected)

    def _accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def _expect(self, op: str) -> _Tok:
        tok = self.tok
        if not self._accept(op):
            raise self._error(f"'{op}'")
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            raise self._error("operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            right = self.term()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            right = self.factor()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def factor(self) -> Node:
        start = self.tok.pos
        if self._accept("-"):
            operand = self.power()
            return Neg(operand, (start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self._accept("^"):
            exponent = self.factor()
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text), (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "ident":
            self.i += 1
            if self._accept("("):
                if tok.text not in FUNCTIONS:
                    raise ParseError(f"unknown function {tok.text!r}",
                                     _byte_offset(self.text, tok.pos),
                                     "one of " + ", ".join(sorted(FUNCTIONS)))
                args = [self.expr()]
                while self._accept(","):
                    args.append(self.expr())
                close = self._expect(")")
                arity = FUNCTIONS[tok.text]
                if arity is not None and len(args) != arity:
                    raise ParseError(f"{tok.text}() takes {arity} argument, got {len(args)}",
                                     _byte_offset(self.text, tok.pos))
                return Call(tok.text, tuple(args), (tok.pos, close.pos + 1))
            return Var(tok.text, (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            inner = self.expr()
            close = self._expect(")")
            return dataclasses.replace(inner, span=(tok.pos, close.pos + 1))
        raise self._error("number, identifier or '('")


def _free_vars(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return _free_vars(node.operand)
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    out: frozenset[str] = frozenset()
    for a in node.args:
        out |= _free_vars(a)
    return out


# ----------------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------------

def _check(value, node: Node, text: str):
    if not np.all(np.isfinite(value)):
        raise DomainError("non-finite result", _span_text(text, node))
    return value


def _span_text(text: str, node: Node) -> str:
    return text[node.span[0]:node.span[1]]


def _eval(node: Node, env: Mapping[str, np.ndarray], text: str):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env, text)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, text)
        b = _eval(node.right, env, text)
        op = node.op
        if op == "+":
            return _check(a + b, node, text)
        if op == "-":
            return _check(a - b, node, text)
        if op == "*":
            return _check(a * b, node, text)
        if op == "/":
            if np.any(b == 0):
                raise DomainError("division by zero", _span_text(text, node))
            return _check(a / b, node, text)
        if np.any((a == 0) & (b < 0)):
            raise DomainError("zero raised to a negative power", _span_text(text, node))
        return _check(np.power(a, b), node, text)
    args = [_eval(a, env, text) for a in node.args]
    name = node.name
    if name == "min":
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a)
        return out
    if name == "max":
        out = args[0]
        for a in args[1:]:
            out = np.maximum(out, a)
        return out
    (x,) = args
    if name == "abs":
        return np.abs(x)
    if name == "sqrt":
        if np.any(x < 0):
            raise DomainError("square root of a negative number", _span_text(text, node))
        return np.sqrt(x)
    if name == "exp":
        return _check(np.exp(x), node, text)
    if np.any(x <= 0):
        raise DomainError("logarithm of a non-positive number", _span_text(text, node))
    return np.log(x)


@dataclass(frozen=True)
class Expression:
    """A parsed expression; immutable and safe to share between threads."""

    text: str
    root: Node
    free_vars: frozenset[str]

    def __call__(self, **bindings):
        return evaluate(self, bindings)

    def function(self, *argnames: str):
        """Return a positional callable ``f(*args)`` over `argnames`.

        Raises :class:`UnboundVariableError` right away if the expression uses
        a name outside `argnames`.
        """
        extra = self.free_vars - set(argnames)
        if extra:
            raise UnboundVariableError(
                f"'{self.text}' uses unknown variable(s) {sorted(extra)}; "
                f"allowed: {list(argnames)}")

        def f(*args):
            return evaluate(self, dict(zip(argnames, args)))

        f.expression = self
        return f

    def __str__(self) -> str:
        return self.text


def parse(text: str) -> Expression:
    if not text or not text.strip():
        raise ParseError("empty expression", 0, "number, identifier or '('")
    root = _Parser(text).parse()
    return Expression(text, root, _free_vars(root))


def evaluate(e: Expression, bindings: Mapping[str, object]):
    """Evaluate `e` with 64-bit floats.

    Scalars in, Python float out; arrays in, ``float64`` array out (bindings
    broadcast against each other).
    """
    missing = e.free_vars - set(bindings)
    if missing:
        raise UnboundVariableError(f"unbound variable(s) {sorted(missing)} in '{e.text}'")
    scalar = True
    env = {}
    for name in e.free_vars:
        v = bindings[name]
        if np.ndim(v) > 0:
            scalar = False
            env[name] = np.asarray(v, dtype=np.float64)
        else:
            env[name] = np.float64(v)
    with np.errstate(all="ignore"):
        out = _eval(e.root, env, e.text)
    if scalar:
        return float(out)
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
    return np.broadcast_to(np.asarray(out, dtype=np.float64), shape).copy()
