"""Second-order polynomials as data, their evaluation, and the closed-form
bounds derived from them.

A second-order polynomial is an AST over {0, 1, n, +, *, l(.)} evaluated
against a unary size function ``l`` and an input length ``n``.  ``Apply(P)``
denotes ``(l, n) -> l(P(l, n))``.  All arithmetic is arbitrary precision:
iterated application overflows fixed-width integers even at desk scale.

Unary size functions are represented as total callables ``int -> int``.
Two concrete carriers are used throughout the package:
:class:`UnaryPolynomial` and the exact size functions of finite-table
oracles (see :func:`typetwo.otm.table_size_function`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

__all__ = [
    "Sop",
    "Zero",
    "One",
    "N",
    "Plus",
    "Times",
    "Apply",
    "UnaryPolynomial",
    "eval_sop",
    "const_sop",
    "poly_to_sop",
    "step_count_from_bound",
    "mpt_time_bound",
    "composition_bound",
    "parse_sop",
    "parse_unary_polynomial",
    "sop_to_str",
]

SizeFunction = Callable[[int], int]


@dataclass(frozen=True)
class Sop:
    """Base class; construct via Zero/One/N/Plus/Times/Apply."""


@dataclass(frozen=True)
class Zero(Sop):
    pass


@dataclass(frozen=True)
class One(Sop):
    pass


@dataclass(frozen=True)
class N(Sop):
    pass


@dataclass(frozen=True)
class Plus(Sop):
    left: Sop
    right: Sop


@dataclass(frozen=True)
class Times(Sop):
    left: Sop
    right: Sop


@dataclass(frozen=True)
class Apply(Sop):
    arg: Sop


def eval_sop(p: Sop, l: SizeFunction, n: int) -> int:
    """Structural evaluation of ``p`` at size function ``l`` and length ``n``.

    Monotone in both arguments provided ``l`` is nondecreasing.
    """
    match p:
        case Zero():
            return 0
        case One():
            return 1
        case N():
            return n
        case Plus(left, right):
            return eval_sop(left, l, n) + eval_sop(right, l, n)
        case Times(left, right):
            return eval_sop(left, l, n) * eval_sop(right, l, n)
        case Apply(arg):
            return l(eval_sop(arg, l, n))
    raise TypeError(f"not a second-order polynomial node: {p!r}")


@dataclass(frozen=True)
class UnaryPolynomial:
    """Polynomial with natural coefficients, ascending by degree.

    Nonnegative coefficients make the polynomial nondecreasing on the
    naturals, which is what every step-count argument needs.
    """

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        cs = tuple(self.coeffs)
        if any(c < 0 or not isinstance(c, int) for c in cs):
            raise ValueError("coefficients must be nonnegative integers")
        while cs and cs[-1] == 0:
            cs = cs[:-1]
        object.__setattr__(self, "coeffs", cs)

    def __call__(self, n: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * n + c
        return acc

    def __add__(self, other: "UnaryPolynomial") -> "UnaryPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return UnaryPolynomial(
            tuple(x + (b[i] if i < len(b) else 0) for i, x in enumerate(a))
        )

    def __mul__(self, other: "UnaryPolynomial") -> "UnaryPolynomial":
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return UnaryPolynomial(())
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return UnaryPolynomial(tuple(out))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else 0

    @classmethod
    def constant(cls, c: int) -> "UnaryPolynomial":
        return cls((c,))

    @classmethod
    def identity(cls) -> "UnaryPolynomial":
        return cls((0, 1))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            if k == 0:
                terms.append(str(c))
            elif k == 1:
                terms.append("n" if c == 1 else f"{c}*n")
            else:
                terms.append(f"n^{k}" if c == 1 else f"{c}*n^{k}")
        return "+".join(terms)


def const_sop(c: int) -> Sop:
    """The constant ``c`` as a balanced sum of One nodes."""
    if c < 0:
        raise ValueError("constants must be nonnegative")
    if c == 0:
        return Zero()
    if c == 1:
        return One()
    half = const_sop(c // 2)
    doubled: Sop = Plus(half, half)
    return Plus(doubled, One()) if c % 2 else doubled


def poly_to_sop(p: UnaryPolynomial, arg: Sop) -> Sop:
    """``p`` applied to the second-order polynomial ``arg``."""
    acc: Sop | None = None
    power: Sop = One()
    for k, c in enumerate(p.coeffs):
        if c:
            term = power if c == 1 else Times(const_sop(c), power)
            if k == 0:
                term = const_sop(c)
            acc = term if acc is None else Plus(acc, term)
        power = arg if k == 0 else Times(power, arg)
    return acc if acc is not None else Zero()


def step_count_from_bound(p: Sop) -> UnaryPolynomial:
    """Plain step-count obtained by substituting the constant-n size function.

    Substituting ``l_n`` (the constant function with value ``n``) collapses
    every application node to the length variable, leaving an ordinary
    polynomial; any machine whose runtime is bounded by ``p`` admits it as
    a plain step-count.
    """
    match p:
        case Zero():
            return UnaryPolynomial(())
        case One():
            return UnaryPolynomial((1,))
        case N():
            return UnaryPolynomial.identity()
        case Plus(left, right):
            return step_count_from_bound(left) + step_count_from_bound(right)
        case Times(left, right):
            return step_count_from_bound(left) * step_count_from_bound(right)
        case Apply(_):
            return UnaryPolynomial.identity()
    raise TypeError(f"not a second-order polynomial node: {p!r}")


def mpt_time_bound(p: UnaryPolynomial, r: int) -> Sop:
    """The second-order bound ``(p . l)^r (p(n)) + p(n)``.

    Covers any machine with plain step-count ``p`` and at most ``r``
    lookahead revisions; ``r = 0`` yields ``p(n) + p(n)``.
    """
    if r < 0:
        raise ValueError("revision count must be nonnegative")
    base = poly_to_sop(p, N())
    body = base
    for _ in range(r):
        body = poly_to_sop(p, Apply(body))
    return Plus(body, base)


def composition_bound(
    p: Sop, q: Sop, c: int, l: SizeFunction, n: int
) -> int:
    """Runtime bound for inlined composition of two bounded machines.

    Evaluates ``C * (P(l, Q(P(l, .), n)) * Q(P(l, .), n) + 1)`` where the
    inner machine's bound ``Q`` is evaluated against the size function
    ``m -> P(l, m)`` induced by the outer bound.
    """
    if c < 1:
        raise ValueError("constant factor must be at least 1")
    inner_size = lambda m: eval_sop(p, l, m)
    qv = eval_sop(q, inner_size, n)
    return c * (eval_sop(p, l, qv) * qv + 1)


def sop_to_str(p: Sop) -> str:
    """Surface syntax for a second-order polynomial AST."""
    match p:
        case Zero():
            return "0"
        case One():
            return "1"
        case N():
            return "n"
        case Plus(left, right):
            return f"{sop_to_str(left)}+{sop_to_str(right)}"
        case Times(left, right):
            return f"{_factor_str(left)}*{_factor_str(right)}"
        case Apply(arg):
            return f"l({sop_to_str(arg)})"
    raise TypeError(f"not a second-order polynomial node: {p!r}")


def _factor_str(p: Sop) -> str:
    s = sop_to_str(p)
    return f"({s})" if isinstance(p, Plus) else s


class SopParseError(ValueError):
    pass


class _Parser:
    """Recursive descent over: expr := term (+ term)*, term := factor (* factor)*,
    factor := atom (^ NAT)?, atom := NAT | n | l(expr) | (expr)."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> SopParseError:
        return SopParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch: str) -> None:
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Sop:
        node = self.expr()
        if self.peek():
            raise self.error("trailing input")
        return node

    def expr(self) -> Sop:
        node = self.term()
        while self.peek() == "+":
            self.eat("+")
            node = Plus(node, self.term())
        return node

    def term(self) -> Sop:
        node = self.factor()
        while self.peek() == "*":
            self.eat("*")
            node = Times(node, self.factor())
        return node

    def factor(self) -> Sop:
        node = self.atom()
        if self.peek() == "^":
            self.eat("^")
            exp = self.nat()
            if exp == 0:
                return One()
            out = node
            for _ in range(exp - 1):
                out = Times(out, node)
            return out
        return node

    def nat(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a number")
        return int(self.text[start : self.pos])

    def atom(self) -> Sop:
        ch = self.peek()
        if ch == "(":
            self.eat("(")
            node = self.expr()
            self.eat(")")
            return node
        if ch == "l":
            self.pos += 1
            self.eat("(")
            node = self.expr()
            self.eat(")")
            return Apply(node)
        if ch == "n":
            self.pos += 1
            return N()
        if ch.isdigit():
            return const_sop(self.nat())
        raise self.error("expected an atom")


def parse_sop(text: str) -> Sop:
    """Parse the surface syntax `n`, `0`, `1`, `+`, `*`, `^`, `l(...)`."""
    return _Parser(text).parse()


def parse_unary_polynomial(text: str) -> UnaryPolynomial:
    """Parse a polynomial in ``n`` (no ``l``) into coefficient form."""
    node = parse_sop(text)

    def to_poly(p: Sop) -> UnaryPolynomial:
        match p:
            case Zero():
                return UnaryPolynomial(())
            case One():
                return UnaryPolynomial((1,))
            case N():
                return UnaryPolynomial.identity()
            case Plus(left, right):
                return to_poly(left) + to_poly(right)
            case Times(left, right):
                return to_poly(left) * to_poly(right)
            case Apply(_):
                raise SopParseError("l(...) is not allowed in a plain polynomial")
        raise TypeError(p)

    return to_poly(node)
