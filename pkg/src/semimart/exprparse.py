"""A small expression language for coefficients, test functions and hints.

Expressions are in one variable ``x``.  The grammar (EBNF) is kept in
``docs/grammar.ebnf``; the short version is::

    expr    := compare [ "?" expr ":" expr ]
    compare := sum [ ("<"|"<="|">"|">="|"=="|"!=") sum ]
    sum     := product { ("+"|"-") product }
    product := unary { ("*"|"/") unary }
    unary   := "-" unary | power
    power   := primary [ "^" power ]
    primary := number | "x" | "pi" | "e" | name "(" args ")" | "(" expr ")"

The exponent of ``^`` must be a primary (or another power), so ``x^-1`` is
rejected and has to be written ``x^(-1)``.  Evaluation is vectorised over
numpy arrays.  Branches of ``c ? a : b`` are evaluated only where they are
selected, so guards such as ``x > 0 ? sqrt(x) : 0`` never trip a domain
error in the discarded branch.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    """Raised for malformed text.  ``offset`` is a byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
        self.reason = message


class ExprDomainError(ExprError):
    def __init__(self, reason: str, node: "Node", path: str, x=None):
        where = "" if x is None else f" at x={x!r}"
        super().__init__(f"{reason} in '{to_text(node)}' (path {path}){where}")
        self.reason = reason
        self.node = node
        self.path = path
        self.x = x


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Cmp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


@dataclass(frozen=True)
class Cond:
    test: "Node"
    then: "Node"
    other: "Node"


Node = Union[Num, Var, Const, Neg, Bin, Cmp, Call, Cond]

CONSTANTS = {"pi": math.pi, "e": math.e}

# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "sign": 1,
    "min": 2, "max": 2,
    # spike set E = union of [1/n - 1/n^4, 1/n + 1/n^4), n >= 2
    "spikes": 3, "inspikes": 1,
}

COMPARISONS = ("<=", ">=", "==", "!=", "<", ">")

# --------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|!=|[-+*/^()<>?:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        off = len(text[:pos].encode("utf-8"))
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", off)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), off))
        pos = m.end()
    toks.append(_Tok("end", "", len(text.encode("utf-8"))))
    return toks


# -------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str) -> _Tok:
        t = self.peek()
        if t.kind != "op" or t.text != op:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {op!r}, found {found}", t.offset)
        return self.take()

    def at_op(self, *ops) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text in ops

    def parse(self) -> Node:
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExprSyntaxError(f"unexpected {t.text!r}", t.offset)
        return node

    def expr(self) -> Node:
        test = self.compare()
        if self.at_op("?"):
            self.take()
            then = self.expr()
            self.expect(":")
            other = self.expr()
            return Cond(test, then, other)
        return test

    def compare(self) -> Node:
        left = self.sum()
        if self.at_op(*COMPARISONS):
            op = self.take().text
            right = self.sum()
            if self.at_op(*COMPARISONS):
                raise ExprSyntaxError("comparisons cannot be chained", self.peek().offset)
            return Cmp(op, left, right)
        return left

    def sum(self) -> Node:
        left = self.product()
        while self.at_op("+", "-"):
            op = self.take().text
            left = Bin(op, left, self.product())
        return left

    def product(self) -> Node:
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.take().text
            left = Bin(op, left, self.unary())
        return left

    def unary(self) -> Node:
        if self.at_op("-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.at_op("^"):
            self.take()
            if self.at_op("-"):
                raise ExprSyntaxError(
                    "exponent must be parenthesized, e.g. x^(-1)", self.peek().offset)
            return Bin("^", base, self.power())
        return base

    def primary(self) -> Node:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return Num(float(t.text))
        if t.kind == "name":
            self.take()
            name = t.text
            if name == "x":
                return Var()
            if name in CONSTANTS:
                return Const(name)
            if name in FUNCTIONS:
                if not self.at_op("("):
                    raise ExprSyntaxError(f"function {name!r} needs arguments", self.peek().offset)
                self.take()
                args = [self.expr()]
                while self.at_op(","):
                    self.take()
                    args.append(self.expr())
                close = self.expect(")")
                if len(args) != FUNCTIONS[name]:
                    raise ExprSyntaxError(
                        f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", close.offset)
                return Call(name, tuple(args))
            raise ExprSyntaxError(f"unknown identifier {name!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self.take()
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", t.offset)


def parse(text: str) -> Node:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


# ------------------------------------------------------------- printer


def _prec(node: Node) -> int:
    if isinstance(node, Cond):
        return 1
    if isinstance(node, Cmp):
        return 2
    if isinstance(node, Bin):
        return {"+": 3, "-": 3, "*": 4, "/": 4, "^": 6}[node.op]
    if isinstance(node, Neg):
        return 5
    return 7


def _fmt_num(v: float) -> str:
    s = repr(float(v))
    if s.startswith("-") or s in ("inf", "nan"):
        raise ValueError(f"literal {v!r} is not representable in the grammar")
    return s


def to_text(node: Node) -> str:
    """Print with the fewest parentheses needed for an exact round trip."""

    def wrap(child: Node, min_prec: int) -> str:
        s = to_text(child)
        return s if _prec(child) >= min_prec else f"({s})"

    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.operand, 5)
    if isinstance(node, Bin):
        if node.op == "^":
            right = to_text(node.right)
            if not (_prec(node.right) >= 6):
                right = f"({right})"
            return f"{wrap(node.left, 7)}^{right}"
        lp, rp = (3, 4) if node.op in "+-" else (4, 5)
        return f"{wrap(node.left, lp)} {node.op} {wrap(node.right, rp)}"
    if isinstance(node, Cmp):
        return f"{wrap(node.left, 3)} {node.op} {wrap(node.right, 3)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Cond):
        return f"{wrap(node.test, 2)} ? {to_text(node.then)} : {to_text(node.other)}"
    raise TypeError(f"not an expression node: {node!r}")


# ----------------------------------------------------------- spike set


def spike_index(x):
    """Index n >= 2 with x in [a_n, b_n), or 0 when x lies outside every spike."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=np.int64)
    pos = (x > 0) & (x < 0.6) & np.isfinite(x)
    if not np.any(pos):
        return out
    with np.errstate(divide="ignore", over="ignore"):
        centre = np.rint(1.0 / np.where(pos, x, 1.0))
    for shift in (-1.0, 0.0, 1.0):
        n = centre + shift
        ok = pos & (n >= 2) & (n < 2.0 ** 52)
        n_safe = np.where(ok, n, 2.0)
        a = 1.0 / n_safe - n_safe ** -4.0
        b = 1.0 / n_safe + n_safe ** -4.0
        hit = ok & (x >= a) & (x < b)
        out = np.where(hit, n_safe.astype(np.int64), out)
    return out


def in_spikes(x):
    return spike_index(x) > 0


# ----------------------------------------------------------- evaluator


def _domain(reason, node, path, bad, x):
    sample = None
    if x is not None and np.ndim(x) > 0 and np.any(bad):
        sample = float(np.asarray(x)[np.argmax(bad)])
    elif x is not None and np.ndim(x) == 0:
        sample = float(x)
    raise ExprDomainError(reason, node, path, sample)


def _ev(node: Node, x: np.ndarray, path: str):
    if isinstance(node, Num):
        return np.full(x.shape, node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return np.full(x.shape, CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_ev(node.operand, x, path + ".operand")
    if isinstance(node, Bin):
        a = _ev(node.left, x, path + ".left")
        b = _ev(node.right, x, path + ".right")
        with np.errstate(all="ignore"):
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                bad = b == 0
                if np.any(bad):
                    _domain("division by zero", node, path, bad, x)
                return a / b
            # power
            bad = (a == 0) & (b < 0)
            if np.any(bad):
                _domain("zero raised to a negative power", node, path, bad, x)
            out = np.power(a, b)
            bad = np.isnan(out) & ~np.isnan(a) & ~np.isnan(b)
            if np.any(bad):
                _domain("negative base with non-integer exponent", node, path, bad, x)
            return out
    if isinstance(node, Cmp):
        a = _ev(node.left, x, path + ".left")
        b = _ev(node.right, x, path + ".right")
        op = node.op
        if op == "<":
            r = a < b
        elif op == "<=":
            r = a <= b
        elif op == ">":
            r = a > b
        elif op == ">=":
            r = a >= b
        elif op == "==":
            r = a == b
        else:
            r = a != b
        return r.astype(float)
    if isinstance(node, Cond):
        t = _ev(node.test, x, path + ".test") != 0
        if np.all(t):
            return _ev(node.then, x, path + ".then")
        if not np.any(t):
            return _ev(node.other, x, path + ".other")
        out = np.empty(x.shape)
        out[t] = _ev(node.then, x[t], path + ".then")
        out[~t] = _ev(node.other, x[~t], path + ".other")
        return out
    if isinstance(node, Call):
        args = [_ev(a, x, f"{path}.args[{i}]") for i, a in enumerate(node.args)]
        name = node.name
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if name == "sin":
                return np.sin(args[0])
            if name == "cos":
                return np.cos(args[0])
            if name == "exp":
                return np.exp(args[0])
            if name == "log":
                bad = ~(args[0] > 0) & ~np.isnan(args[0])
                if np.any(bad):
                    _domain("log of a non-positive number", node, path, bad, x)
                return np.log(args[0])
            if name == "sqrt":
                bad = args[0] < 0
                if np.any(bad):
                    _domain("sqrt of a negative number", node, path, bad, x)
                return np.sqrt(args[0])
            if name == "abs":
                return np.abs(args[0])
            if name == "sign":
                return np.sign(args[0])
            if name == "min":
                return np.minimum(args[0], args[1])
            if name == "max":
                return np.maximum(args[0], args[1])
            if name == "inspikes":
                return in_spikes(args[0]).astype(float)
            if name == "spikes":
                z, p_in, p_out = args
                bad = ~(z > 0)
                if np.any(bad):
                    _domain("spikes needs a positive argument", node, path, bad, x)
                inside = in_spikes(z)
                return np.where(inside, np.power(z, p_in), np.power(z, p_out))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, x):
    """Evaluate ``node`` at ``x`` (scalar or array).  Scalars give a float back."""
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    out = np.broadcast_to(_ev(node, flat, "root"), flat.shape).reshape(arr.shape)
    if arr.ndim == 0:
        return float(out)
    return np.array(out, dtype=float)


class Expr:
    """A parsed expression bundled with its source text; callable on arrays."""

    def __init__(self, text: str):
        self.text = text
        self.node = parse(text)

    def __call__(self, x):
        return evaluate(self.node, x)

    def __repr__(self):
        return f"Expr({self.text!r})"


def depends_on_x(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return depends_on_x(node.operand)
    if isinstance(node, (Bin, Cmp)):
        return depends_on_x(node.left) or depends_on_x(node.right)
    if isinstance(node, Call):
        return any(depends_on_x(a) for a in node.args)
    if isinstance(node, Cond):
        return any(depends_on_x(n) for n in (node.test, node.then, node.other))
    raise TypeError(node)
