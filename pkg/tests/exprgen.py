"""Random expression trees and an independent scalar evaluator for the parser tests."""
from __future__ import annotations

import math

from hypothesis import strategies as st

from semimart.exprparse import Bin, Call, Cmp, Cond, Const, Neg, Num, Var

UNARY = ("sin", "cos", "exp", "log", "sqrt", "abs", "sign", "inspikes")
BINARY = ("min", "max")

literals = st.one_of(
    st.integers(0, 20).map(float),
    st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False),
    st.sampled_from([0.5, 0.25, 1e-3, 2.5e10, 1e-300]),
)
leaves = st.one_of(literals.map(Num), st.just(Var()), st.sampled_from([Const("pi"), Const("e")]))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: Bin(*t)),
        st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), children, children).map(lambda t: Cmp(*t)),
        st.tuples(st.sampled_from(UNARY), children).map(lambda t: Call(t[0], (t[1],))),
        st.tuples(st.sampled_from(BINARY), children, children).map(lambda t: Call(t[0], (t[1], t[2]))),
        st.tuples(children, children, literals).map(lambda t: Call("spikes", (t[0], Neg(Num(t[2])), t[1]))),
        st.tuples(children, children, children).map(lambda t: Cond(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


class RefDomain(Exception):
    pass


def _in_spikes(v: float) -> bool:
    if not (v > 0) or math.isinf(v):
        return False
    m = int(1.0 / v) if 1.0 / v < 2 ** 60 else 2 ** 60
    for n in range(max(2, m - 2), m + 3):
        if 1.0 / n - n ** -4.0 <= v < 1.0 / n + n ** -4.0:
            return True
    return False


def _membership_certain(v: float, err: float) -> bool:
    if err == 0:
        return True
    if not (v - err > 0):
        return False
    inside = _in_spikes(v)
    m = int(1.0 / (v + err))
    top = int(1.0 / (v - err)) + 3 if 1.0 / (v - err) < 2 ** 40 else 2 ** 40
    if top - m > 16:
        return False
    # every spike edge between v - err and v + err would flip the membership
    for n in range(max(2, m - 2), top):
        for edge in (1.0 / n - n ** -4.0, 1.0 / n + n ** -4.0):
            if v - err <= edge <= v + err:
                return False
    return _in_spikes(v - err) == inside == _in_spikes(v + err)


def _pow(a: float, b: float) -> float:
    if a == 0 and b < 0:
        raise RefDomain("zero to a negative power")
    try:
        r = math.pow(a, b)
    except OverflowError:
        r = math.inf if (a > 0 or float(b).is_integer() and int(b) % 2 == 0) else -math.inf
    except ValueError:
        raise RefDomain("negative base") from None
    return r


def _trig(fn, v):
    return math.nan if math.isinf(v) or math.isnan(v) else fn(v)


def ref_eval(node, x: float) -> float:
    """Plain-Python evaluation with the documented semantics."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return {"pi": math.pi, "e": math.e}[node.name]
    if isinstance(node, Neg):
        return -ref_eval(node.operand, x)
    if isinstance(node, Bin):
        a, b = ref_eval(node.left, x), ref_eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0:
                raise RefDomain("division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(node, Cmp):
        a, b = ref_eval(node.left, x), ref_eval(node.right, x)
        return float({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b}[node.op])
    if isinstance(node, Cond):
        return ref_eval(node.then, x) if ref_eval(node.test, x) != 0 else ref_eval(node.other, x)
    if isinstance(node, Call):
        args = [ref_eval(a, x) for a in node.args]
        v = args[0]
        name = node.name
        if name == "sin":
            return _trig(math.sin, v)
        if name == "cos":
            return _trig(math.cos, v)
        if name == "exp":
            if math.isnan(v):
                return v
            try:
                return math.exp(v)
            except OverflowError:
                return math.inf
        if name == "log":
            if math.isnan(v):
                return v
            if not v > 0:
                raise RefDomain("log")
            return math.log(v)
        if name == "sqrt":
            if v < 0:
                raise RefDomain("sqrt")
            return math.sqrt(v)
        if name == "abs":
            return abs(v)
        if name == "sign":
            return v if math.isnan(v) else float((v > 0) - (v < 0))
        if name in ("min", "max"):
            if math.isnan(args[0]) or math.isnan(args[1]):
                return math.nan
            return min(args) if name == "min" else max(args)
        if name == "inspikes":
            return float(_in_spikes(v))
        if name == "spikes":
            if not v > 0:
                raise RefDomain("spikes")
            return _pow(v, args[1]) if _in_spikes(v) else _pow(v, args[2])
    raise TypeError(node)


ULP = 2.0 ** -52


def ref_eval_bounded(node, x: float):
    """(value, absolute error bound) under the model that every primitive operation
    is accurate to one ulp and errors propagate to first order.  The bound is inf
    where a comparison or a branch cut is closer than the accumulated error."""
    inf = math.inf
    if isinstance(node, (Num, Var, Const)):
        return ref_eval(node, x), 0.0
    if isinstance(node, Neg):
        v, e = ref_eval_bounded(node.operand, x)
        return -v, e
    if isinstance(node, Bin):
        (a, ea), (b, eb) = ref_eval_bounded(node.left, x), ref_eval_bounded(node.right, x)
        if node.op == "+":
            v, e = a + b, ea + eb
        elif node.op == "-":
            v, e = a - b, ea + eb
        elif node.op == "*":
            v, e = a * b, abs(a) * eb + abs(b) * ea + ea * eb
        elif node.op == "/":
            if b == 0:
                raise RefDomain("division by zero")
            if eb >= abs(b):
                return a / b, inf
            v, e = a / b, (ea + abs(a / b) * eb) / (abs(b) - eb)
        else:
            v = _pow(a, b)
            if ea > 0 and (a == 0 or ea >= abs(a)):
                return v, inf
            rel_a = ea / abs(a) if a != 0 else 0.0
            e = abs(v) * (abs(b) * rel_a + (abs(math.log(abs(a))) * eb if a != 0 else 0.0))
            e *= 1.0 + 4 * (abs(b) * rel_a + eb)
        return v, e + ULP * abs(v)
    if isinstance(node, Cmp):
        (a, ea), (b, eb) = ref_eval_bounded(node.left, x), ref_eval_bounded(node.right, x)
        v = float({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b}[node.op])
        close = not (abs(a - b) > ea + eb) if not (math.isnan(a) or math.isnan(b)) else False
        return v, inf if close and (ea + eb > 0) else 0.0
    if isinstance(node, Cond):
        t, et = ref_eval_bounded(node.test, x)
        if et > 0 and not (abs(t) > et):
            chosen = node.then if t != 0 else node.other
            return ref_eval_bounded(chosen, x)[0], inf
        return ref_eval_bounded(node.then if t != 0 else node.other, x)
    if isinstance(node, Call):
        parts = [ref_eval_bounded(a, x) for a in node.args]
        v = ref_eval(node, x)
        a, ea = parts[0]
        name = node.name
        if name in ("sin", "cos"):
            e = ea
        elif name == "exp":
            e = abs(v) * ea * (1.0 + 2 * ea)
        elif name == "log":
            e = inf if ea >= a else ea / (a - ea)
        elif name == "sqrt":
            e = inf if ea >= a and ea > 0 else (ea / (math.sqrt(a - ea) + math.sqrt(a)) if ea > 0 else 0.0)
        elif name == "abs":
            e = ea
        elif name == "sign":
            e = inf if ea > 0 and not (abs(a) > ea) else 0.0
        elif name in ("min", "max"):
            e = max(ea, parts[1][1])
        elif name == "inspikes":
            e = 0.0 if _membership_certain(a, ea) else inf
        else:  # spikes
            inside = _in_spikes(a)
            p, ep = parts[1] if inside else parts[2]
            if not _membership_certain(a, ea) or (ea > 0 and ea >= a):
                e = inf
            else:
                e = abs(v) * (abs(p) * ea / a + abs(math.log(a)) * ep)
                e *= 1.0 + 4 * (abs(p) * ea / a + ep)
        return v, e + ULP * abs(v)
    raise TypeError(node)


def random_tree(rng, depth: int):
    """Deterministic random tree from a numpy Generator (for fixed corpora)."""
    if depth <= 0 or rng.random() < 0.25:
        k = rng.integers(4)
        if k == 0:
            return Var()
        if k == 1:
            return Const(str(rng.choice(["pi", "e"])))
        if k == 2:
            return Num(float(rng.integers(0, 20)))
        return Num(float(rng.choice([0.5, 0.25, 1e-3, 3.75, 1e6])) * float(rng.random()))
    kind = rng.integers(7)
    sub = lambda: random_tree(rng, depth - 1)  # noqa: E731
    if kind == 0:
        return Neg(sub())
    if kind == 1:
        return Bin(str(rng.choice(list("+-*/^"))), sub(), sub())
    if kind == 2:
        return Cmp(str(rng.choice(["<", "<=", ">", ">=", "==", "!="])), sub(), sub())
    if kind == 3:
        return Call(str(rng.choice(UNARY)), (sub(),))
    if kind == 4:
        return Call(str(rng.choice(BINARY)), (sub(), sub()))
    if kind == 5:
        return Call("spikes", (sub(), Neg(Num(float(rng.integers(1, 4)))), sub()))
    return Cond(sub(), sub(), sub())


def compare(tree, x: float, evaluate, domain_error) -> str:
    """Check one evaluation against the reference and say how it agreed.

    Returns "domain" (both raise), "exact", "rel" (within 1e-15 relative),
    "bound" (within the propagated one-ulp bound only), "nan" or "unresolved"
    (one-ulp noise could flip a branch); raises AssertionError otherwise.
    """
    try:
        want, bound = ref_eval_bounded(tree, x)
    except RefDomain:
        try:
            evaluate(tree, x)
        except domain_error:
            return "domain"
        raise AssertionError("reference raises a domain error, evaluator does not")
    try:
        got = evaluate(tree, x)
    except domain_error:
        if bound == math.inf:
            return "unresolved"
        raise AssertionError(f"evaluator raises, reference gives {want!r}") from None
    if math.isnan(want):
        if math.isnan(got) or bound == math.inf:
            return "nan"
        raise AssertionError(f"reference nan, evaluator {got!r}")
    if got == want:
        return "exact"
    diff = abs(got - want)
    if diff <= 1e-15 * max(abs(got), abs(want)):
        return "rel"
    if bound == math.inf:
        return "unresolved"
    if diff <= 2 * bound:
        return "bound"
    raise AssertionError(f"got {got!r}, reference {want!r}, bound {bound!r}")
