"""Simply-typed lambda calculus over operator constants.

Types are built from the ground type 0 by right-associated arrows; every
type has a normal form t1 -> ... -> tk -> 0 and a level (0 for ground,
1 + max level of the arguments otherwise).  Semantic values are bit
strings at ground type and curried host callables at arrow types, so
equality of functionals is only ever observed pointwise.

Constants are definitional: they carry their semantic value directly and
have no reduction rules; only beta and eta contract.  The registered
constants bind to the pure operator references in
:mod:`typetwo.operators`, and :func:`bridge_term` assembles the closed
terms that translate between the recursion functionals, the recursion
operator, and the maximization operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Callable, Iterable, Mapping

from . import operators as ops
from .strings import pair_encode, truncate, tuple_project

__all__ = [
    "SimpleType",
    "Ground",
    "Arrow",
    "GROUND",
    "arrow",
    "type_level",
    "Term",
    "Var",
    "Const",
    "Abs",
    "App",
    "TypeCheckError",
    "UnboundVariableError",
    "type_of",
    "free_vars",
    "eval_term",
    "beta_eta_normalize",
    "CONSTANTS",
    "constant",
    "bridge_term",
    "BRIDGE_NAMES",
    "section",
    "parse_term",
]


class TypeCheckError(TypeError):
    pass


class UnboundVariableError(LookupError):
    pass


# --------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class SimpleType:
    pass


@dataclass(frozen=True)
class Ground(SimpleType):
    def __str__(self) -> str:
        return "0"


@dataclass(frozen=True)
class Arrow(SimpleType):
    src: SimpleType
    dst: SimpleType

    def __str__(self) -> str:
        left = f"({self.src})" if isinstance(self.src, Arrow) else str(self.src)
        return f"{left}->{self.dst}"


GROUND = Ground()


def arrow(*types: SimpleType) -> SimpleType:
    """Right-associated arrow: arrow(a, b, c) is a -> (b -> c)."""
    if not types:
        raise ValueError("arrow needs at least one type")
    out = types[-1]
    for t in reversed(types[:-1]):
        out = Arrow(t, out)
    return out


def _argument_types(t: SimpleType) -> list[SimpleType]:
    args = []
    while isinstance(t, Arrow):
        args.append(t.src)
        t = t.dst
    return args


def type_level(t: SimpleType) -> int:
    """0 for the ground type, else 1 + max level of the argument types."""
    args = _argument_types(t)
    if not args:
        return 0
    return 1 + max(type_level(a) for a in args)


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: str
    type: SimpleType


@dataclass(frozen=True)
class Const(Term):
    name: str
    type: SimpleType
    value: object = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if type_level(self.type) > 2:
            raise TypeCheckError(f"constant {self.name} exceeds level 2")


@dataclass(frozen=True)
class Abs(Term):
    var: Var
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


def type_of(term: Term) -> SimpleType:
    match term:
        case Var(_, t) | Const(_, t):
            return t
        case Abs(v, body):
            return Arrow(v.type, type_of(body))
        case App(fn, arg):
            ft = type_of(fn)
            at = type_of(arg)
            if not isinstance(ft, Arrow):
                raise TypeCheckError(f"applying a non-function of type {ft}")
            if ft.src != at:
                raise TypeCheckError(f"argument type {at} does not match {ft.src}")
            return ft.dst
    raise TypeCheckError(f"not a term: {term!r}")


def free_vars(term: Term) -> frozenset[Var]:
    match term:
        case Var():
            return frozenset([term])
        case Const():
            return frozenset()
        case Abs(v, body):
            return free_vars(body) - {v}
        case App(fn, arg):
            return free_vars(fn) | free_vars(arg)
    raise TypeCheckError(f"not a term: {term!r}")


# --------------------------------------------------------------------------
# Valuation


def eval_term(term: Term, env: Mapping[Var, object] | None = None):
    """The valuation: ground terms yield bit strings, arrow terms yield
    curried callables.  Every free variable must be bound in ``env`` with a
    value of matching type (values are trusted; types are checked on the
    term itself)."""
    type_of(term)
    return _eval(term, dict(env) if env else {})


def _eval(term: Term, env: dict):
    match term:
        case Var():
            try:
                return env[term]
            except KeyError:
                raise UnboundVariableError(term.name) from None
        case Const(name, _, value):
            if value is None:
                raise TypeCheckError(f"constant {name} has no registered value")
            return value
        case Abs(v, body):
            frozen = dict(env)

            def closure(x, _v=v, _body=body, _env=frozen):
                inner = dict(_env)
                inner[_v] = x
                return _eval(_body, inner)

            return closure
        case App(fn, arg):
            return _eval(fn, env)(_eval(arg, env))
    raise TypeCheckError(f"not a term: {term!r}")


# --------------------------------------------------------------------------
# beta/eta normalization

_fresh_ids = count()


def _substitute(body: Term, var: Var, replacement: Term) -> Term:
    fv = free_vars(replacement)

    def go(t: Term) -> Term:
        match t:
            case Var():
                return replacement if t == var else t
            case Const():
                return t
            case App(fn, arg):
                return App(go(fn), go(arg))
            case Abs(v, b):
                if v == var:
                    return t
                if v in fv:
                    fresh = Var(f"{v.name}_{next(_fresh_ids)}", v.type)
                    b = _substitute(b, v, fresh)
                    v = fresh
                return Abs(v, go(b))
        raise TypeCheckError(f"not a term: {t!r}")

    return go(body)


def _step(t: Term) -> Term | None:
    """One leftmost-outermost beta or eta contraction, or None at normal form."""
    if isinstance(t, App) and isinstance(t.fn, Abs):
        return _substitute(t.fn.body, t.fn.var, t.arg)
    if isinstance(t, Abs):
        b = t.body
        if isinstance(b, App) and b.arg == t.var and t.var not in free_vars(b.fn):
            return b.fn
        nb = _step(t.body)
        return Abs(t.var, nb) if nb is not None else None
    if isinstance(t, App):
        nf = _step(t.fn)
        if nf is not None:
            return App(nf, t.arg)
        na = _step(t.arg)
        if na is not None:
            return App(t.fn, na)
    return None


def beta_eta_normalize(term: Term) -> Term:
    """Contract beta and eta redexes to normal form.

    The calculus is simply typed, hence strongly normalizing; the value
    under every assignment is preserved.
    """
    type_of(term)
    while (nxt := _step(term)) is not None:
        term = nxt
    return term


# --------------------------------------------------------------------------
# Registered constants

T0 = GROUND
T1 = arrow(T0, T0)
T2BIN = arrow(T0, T0, T0)


def _curried_rec(phi):
    return lambda a: lambda b: lambda c: ops.rec_ref(lambda s, t: phi(s)(t), a, b, c)


def _curried_rec_prime(phi):
    return lambda a: lambda psi: lambda c: ops.rec_prime_ref(
        lambda s, t: phi(s)(t), a, psi, c
    )


def _curried_drive(psi):
    return lambda a: lambda b: lambda c: ops.t_driver2_ref(
        lambda s, t: psi(s)(t), a, b, c
    )


CONSTANTS: dict[str, Const] = {
    c.name: c
    for c in [
        Const("rec", arrow(T2BIN, T0, T0, T0, T0), _curried_rec),
        Const("rec_prime", arrow(T2BIN, T0, T1, T0, T0), _curried_rec_prime),
        Const("drive", arrow(T2BIN, T0, T0, T0, T0), _curried_drive),
        Const("rec_op", arrow(T1, T0, T0), lambda psi: lambda x: ops.r_op_ref(psi, x)),
        Const("trunc_to", T2BIN, lambda x: lambda y: truncate(x, len(y))),
        Const(
            "shorter", T2BIN, lambda s: lambda t: s if len(s) <= len(t) else t
        ),
        Const(
            "longer_answer",
            arrow(T1, T0, T0, T0),
            lambda psi: lambda s: lambda t: s if len(psi(s)) > len(psi(t)) else t,
        ),
        Const("empty", T0, ""),
        Const("pair", T2BIN, lambda x: lambda y: pair_encode(x, y)),
        Const("proj1", T1, lambda x: tuple_project(1, 2, x)),
        Const("proj2", T1, lambda x: tuple_project(2, 2, x)),
        Const("proj13", T1, lambda x: tuple_project(1, 3, x)),
        Const("proj23", T1, lambda x: tuple_project(2, 3, x)),
        Const("proj33", T1, lambda x: tuple_project(3, 3, x)),
        Const("len_unary", T1, lambda x: "1" * len(x)),
        Const(
            "const_append_one",
            arrow(T1, T0, T0),
            lambda _phi: lambda x: x + "1",
        ),
        Const(
            "tuple_with_probe",
            arrow(T1, T0, T0),
            lambda phi: lambda a: pair_encode(phi(""), a),
        ),
    ]
}


def constant(name: str) -> Const:
    try:
        return CONSTANTS[name]
    except KeyError:
        raise TypeCheckError(f"unregistered constant {name!r}") from None


# --------------------------------------------------------------------------
# Bridge terms


def _lam(*binders_and_body) -> Term:
    *binders, body = binders_and_body
    for v in reversed(binders):
        body = Abs(v, body)
    return body


def _app(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def _build_rec_via_recprime() -> Term:
    phi = Var("phi", T2BIN)
    a, b, c, s, t = (Var(n, T0) for n in "abcst")
    step = _lam(s, t, _app(constant("trunc_to"), _app(phi, s, t), b))
    bound = Abs(s, b)
    return _lam(phi, a, b, c, _app(constant("rec_prime"), step, a, bound, c))


def _build_recprime_via_rec() -> Term:
    phi = Var("phi", T2BIN)
    psi = Var("psi", T1)
    a, c, s, t = (Var(n, T0) for n in "acst")
    step = _lam(
        s, t, _app(constant("shorter"), _app(phi, s, t), App(psi, s))
    )
    argmax_step = _lam(s, t, _app(constant("longer_answer"), psi, s, t))
    argmax = _app(constant("rec"), argmax_step, constant("empty"), c, c)
    return _lam(phi, a, psi, c, _app(constant("rec"), step, a, App(psi, argmax), c))


def _build_operator_R() -> Term:
    psi = Var("psi", T1)
    a, b, c = Var("a", T0), Var("b", T0), Var("c", T0)
    step = _lam(b, c, App(psi, _app(constant("pair"), b, c)))
    return _lam(
        psi,
        a,
        _app(
            constant("rec"),
            step,
            App(constant("proj13"), a),
            App(constant("proj23"), a),
            App(constant("proj33"), a),
        ),
    )


def _build_const_K() -> Term:
    a, b = Var("a", T0), Var("b", T0)
    return _lam(a, _app(constant("const_append_one"), Abs(b, b), a))


def _build_tupler_T() -> Term:
    phi = Var("phi", T1)
    a = Var("a", T0)
    return _lam(phi, a, _app(constant("tuple_with_probe"), phi, a))


def _build_rec_symbol_replacement() -> Term:
    phi = Var("phi", T2BIN)
    a, b, c, d = Var("a", T0), Var("b", T0), Var("c", T0), Var("d", T0)
    untupled = _lam(
        d, _app(phi, App(constant("proj1"), d), App(constant("proj2"), d))
    )
    packed = _app(constant("pair"), a, _app(constant("pair"), b, c))
    return _lam(phi, a, b, c, _app(constant("rec_op"), untupled, packed))


def _build_argmax_via_T() -> Term:
    phi = Var("phi", T1)
    a, d, t = Var("a", T0), Var("d", T0), Var("t", T0)
    pick = _lam(d, t, _app(constant("longer_answer"), phi, d, t))
    best_prefix = _app(constant("drive"), pick, constant("empty"), a, a)
    return _lam(phi, a, App(constant("len_unary"), App(phi, best_prefix)))


def _build_filr_via_rec() -> Term:
    phi = Var("phi", T1)
    a, s, t = Var("a", T0), Var("s", T0), Var("t", T0)
    step = _lam(s, t, App(phi, App(phi, t)))
    return _lam(
        phi,
        a,
        _app(constant("rec"), step, constant("empty"), App(phi, constant("empty")), a),
    )


_BRIDGES: dict[str, Callable[[], Term]] = {
    "rec_via_recprime": _build_rec_via_recprime,
    "recprime_via_rec": _build_recprime_via_rec,
    "operator_R": _build_operator_R,
    "const_K": _build_const_K,
    "tupler_T": _build_tupler_T,
    "rec_symbol_replacement": _build_rec_symbol_replacement,
    "argmax_via_T": _build_argmax_via_T,
    "filr_via_rec": _build_filr_via_rec,
}

BRIDGE_NAMES = tuple(_BRIDGES)


def bridge_term(name: str) -> Term:
    """A closed, well-typed term for one of the named constructions, with
    its constants bound to the library operator implementations."""
    try:
        term = _BRIDGES[name]()
    except KeyError:
        raise ValueError(f"unknown bridge term {name!r}") from None
    type_of(term)
    return term


def section(terms: Iterable[Term], order: int) -> list:
    """Evaluations of the closed terms whose type level is at most ``order``
    (1: functions, 2: functionals)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    out = []
    for t in terms:
        if free_vars(t):
            raise TypeCheckError("section terms must be closed")
        if type_level(type_of(t)) <= order:
            out.append(eval_term(t))
    return out


# --------------------------------------------------------------------------
# Surface syntax: \x:0. x, application by juxtaposition, #name constants


class TermParseError(ValueError):
    pass


class _TermParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> TermParseError:
        return TermParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch: str) -> None:
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        if start == self.pos:
            raise self.error("expected an identifier")
        return self.text[start : self.pos]

    def parse(self) -> Term:
        t = self.term({})
        if self.peek():
            raise self.error("trailing input")
        return t

    def term(self, scope: dict[str, Var]) -> Term:
        if self.peek() == "\\":
            self.eat("\\")
            name = self.ident()
            self.eat(":")
            ty = self.type_expr()
            self.eat(".")
            v = Var(name, ty)
            body = self.term({**scope, name: v})
            return Abs(v, body)
        out = self.atom(scope)
        while self.peek() and self.peek() not in ").":
            out = App(out, self.atom(scope))
        return out

    def atom(self, scope: dict[str, Var]) -> Term:
        ch = self.peek()
        if ch == "(":
            self.eat("(")
            t = self.term(scope)
            self.eat(")")
            return t
        if ch == "#":
            self.eat("#")
            name = self.ident()
            try:
                return constant(name)
            except TypeCheckError:
                raise self.error(f"unknown constant {name!r}") from None
        if ch == "\\":
            return self.term(scope)
        name = self.ident()
        if name not in scope:
            raise self.error(f"unbound variable {name!r}")
        return scope[name]

    def type_expr(self) -> SimpleType:
        left = self.type_atom()
        self.ws()
        if self.text[self.pos : self.pos + 2] == "->":
            self.pos += 2
            return Arrow(left, self.type_expr())
        return left

    def type_atom(self) -> SimpleType:
        ch = self.peek()
        if ch == "0":
            self.pos += 1
            return GROUND
        if ch == "(":
            self.eat("(")
            t = self.type_expr()
            self.eat(")")
            return t
        raise self.error("expected a type")


def parse_term(text: str) -> Term:
    """Parse the CLI surface syntax into a (type-checked) term."""
    term = _TermParser(text).parse()
    type_of(term)
    return term
