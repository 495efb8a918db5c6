"""Small arithmetic expression language for coefficient fields and potentials.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;          (* right-associative *)
    atom    = NUMBER | CONST | VAR
            | FUNC "(" expr { "," expr } ")"
            | "(" expr ")" ;
    NUMBER  = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
    VAR     = "x" | "x1" | ... | "xn" ;     (* "x" only when n = 1 *)
    CONST   = "pi" | "e" ;
    FUNC    = "sin" | "cos" | "exp" | "sqrt" | "abs" | "tanh"
            | "pow" | "min" | "max" ;

"^" binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``; the exponent
is parsed at the unary level, so ``2^-3`` is legal.  Expressions are
immutable trees; evaluation is pure and deterministic.  Division by zero and
domain violations (sqrt of a negative, ``0^-1``) raise :class:`EvalError`
instead of propagating NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

FUNCTIONS = {
    "sin": (1, math.sin),
    "cos": (1, math.cos),
    "exp": (1, math.exp),
    "sqrt": (1, math.sqrt),
    "abs": (1, abs),
    "tanh": (1, math.tanh),
    "pow": (2, None),
    "min": (2, min),
    "max": (2, max),
}

CONSTANTS = {"pi": math.pi, "e": math.e}


class ParseError(ValueError):
    """Syntax error with byte offset, expected-token note and source excerpt."""

    def __init__(self, offset, expected, source):
        self.offset = offset
        self.expected = expected
        lo, hi = max(0, offset - 12), min(len(source), offset + 12)
        self.excerpt = source[lo:hi]
        caret = " " * (offset - lo) + "^"
        super().__init__(
            f"expected {expected} at offset {offset}: {self.excerpt!r}\n"
            f"  {self.excerpt}\n  {caret}"
        )


class EvalError(ArithmeticError):
    """Domain or division error, reported with the offending subexpression."""

    def __init__(self, message, node):
        self.node = node
        super().__init__(f"{message} in subexpression '{pretty(node)}'")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    index: int  # zero-based coordinate


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Num | Const | Var | Neg | BinOp | Call


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._run()

    def _run(self):
        text = self.text
        i = 0
        while i < len(text):
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^(),":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < len(text) and text[i + 1].isdigit()):
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                if j < len(text) and text[j] == ".":
                    j += 1
                    while j < len(text) and text[j].isdigit():
                        j += 1
                if j < len(text) and text[j] in "eE":
                    k = j + 1
                    if k < len(text) and text[k] in "+-":
                        k += 1
                    if k < len(text) and text[k].isdigit():
                        j = k
                        while j < len(text) and text[j].isdigit():
                            j += 1
                self.tokens.append(("num", text[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            raise ParseError(i, "a token", text)
        self.tokens.append(("end", "", len(text)))


class _Parser:
    def __init__(self, text, n):
        if not text or not text.strip():
            raise ParseError(0, "a non-empty expression", text)
        self.text = text
        self.n = n
        self.tokens = _Lexer(text).tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.take()
        if tok[0] != kind:
            raise ParseError(tok[2], repr(kind), self.text)
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(tok[2], "end of input or an operator", self.text)
        return e

    def expr(self):
        left = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek()[0] in "*/":
            op = self.take()[0]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val][0]
                if len(args) != arity:
                    raise ParseError(off, f"{arity} argument(s) to {val}", self.text)
                return Call(val, tuple(args))
            idx = self._var_index(val)
            if idx is not None:
                return Var(idx)
            raise ParseError(off, "a known identifier", self.text)
        raise ParseError(off, "an operand", self.text)

    def _var_index(self, name):
        if name == "x" and self.n == 1:
            return 0
        if len(name) >= 2 and name[0] == "x" and name[1:].isdigit():
            k = int(name[1:])
            if 1 <= k <= self.n:
                return k - 1
        return None


def parse(text, n):
    """Parse ``text`` as an expression in coordinates x1..xn.

    Raises :class:`ParseError` with a byte offset on malformed input or on
    identifiers outside the dimension.
    """
    return _Parser(text, n).parse()


def evaluate(e, x):
    """Evaluate an expression tree at the point ``x`` (sequence of floats)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        if e.index >= len(x):
            raise EvalError(f"point has dimension {len(x)}", e)
        return float(x[e.index])
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, BinOp):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise EvalError("division by zero", e)
            return a / b
        return _power(a, b, e)
    if isinstance(e, Call):
        args = [evaluate(a, x) for a in e.args]
        if e.name == "pow":
            return _power(args[0], args[1], e)
        if e.name == "sqrt" and args[0] < 0.0:
            raise EvalError("sqrt of a negative number", e)
        try:
            return float(FUNCTIONS[e.name][1](*args))
        except (ValueError, OverflowError) as exc:
            raise EvalError(str(exc), e) from exc
    raise TypeError(f"not an expression node: {e!r}")


def _power(a, b, node):
    if a == 0.0 and b < 0.0:
        raise EvalError("zero raised to a negative power", node)
    try:
        r = a**b
    except (ZeroDivisionError, OverflowError) as exc:
        raise EvalError(str(exc), node) from exc
    if isinstance(r, complex):
        raise EvalError("negative base with non-integer exponent", node)
    return float(r)


_LEVEL_ADD, _LEVEL_MUL, _LEVEL_UNARY, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def pretty(e):
    """Render an expression; ``parse(pretty(e), n)`` returns an equal tree."""
    return _render(e, 0)


def _render(e, context):
    if isinstance(e, Num):
        text = repr(e.value)
        level = _LEVEL_ATOM if e.value >= 0 else _LEVEL_UNARY
    elif isinstance(e, Const):
        text, level = e.name, _LEVEL_ATOM
    elif isinstance(e, Var):
        text, level = f"x{e.index + 1}", _LEVEL_ATOM
    elif isinstance(e, Neg):
        text, level = "-" + _render(e.arg, _LEVEL_UNARY), _LEVEL_UNARY
    elif isinstance(e, Call):
        text = e.name + "(" + ", ".join(_render(a, 0) for a in e.args) + ")"
        level = _LEVEL_ATOM
    elif isinstance(e, BinOp):
        if e.op in "+-":
            text = _render(e.left, _LEVEL_ADD) + e.op + _render(e.right, _LEVEL_MUL)
            level = _LEVEL_ADD
        elif e.op in "*/":
            text = _render(e.left, _LEVEL_MUL) + e.op + _render(e.right, _LEVEL_UNARY)
            level = _LEVEL_MUL
        else:  # ^ right-associative: base must be an atom, exponent may be unary
            text = _render(e.left, _LEVEL_ATOM) + "^" + _render(e.right, _LEVEL_UNARY)
            level = _LEVEL_POW
    else:
        raise TypeError(f"not an expression node: {e!r}")
    if level < context:
        return "(" + text + ")"
    return text
