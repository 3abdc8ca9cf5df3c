"""Library of operators: pure reference implementations paired with IR
machine realizations.

Every multi-argument functional is realized as a single-oracle machine via
the tupling conventions of :mod:`typetwo.strings`; a binary rule ``phi``
reaches the oracle port as the unary oracle ``psi(<x, y>) = phi(x, y)``.
The pure references are the oracle side of each dual-route check: machines
are tested extensionally against them, never the other way around.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .otm import Machine, ProgramBuilder
from .strings import truncate, tuple_encode, tuple_project, pair_encode

__all__ = [
    "OperatorRef",
    "LIBRARY",
    "machine_by_name",
    "rec_ref",
    "rec_prime_ref",
    "s_ref",
    "t_driver_ref",
    "iteration_ref",
    "prefix_max_ref",
    "filr_ref",
    "selfcomp_ref",
    "zeromax_ref",
    "build_R_machine",
    "build_ST_machines",
    "build_iteration_machine",
    "build_prefix_max_machine",
    "build_filr_machine",
    "build_selfcomp_machine",
    "build_zeromax_machine",
]

UnaryRule = Callable[[str], str]
BinaryRule = Callable[[str, str], str]


# --------------------------------------------------------------------------
# Pure references


def rec_ref(phi: BinaryRule, a: str, b: str, c: str) -> str:
    """Limited recursion over the prefixes of ``c``.

    Base value ``a``; each step applies ``phi`` to the current prefix and
    the previous value and truncates the result to len(b).  Iterative so
    long ``c`` cannot hit the call-depth limit.
    """
    t = a
    bound = len(b)
    for i in range(1, len(c) + 1):
        t = phi(c[:i], t)[:bound]
    return t


def rec_prime_ref(phi: BinaryRule, a: str, psi: UnaryRule, c: str) -> str:
    """Limited recursion with a pointwise bound function ``psi``.

    Each step keeps ``phi(prefix, prev)`` if it fits within
    len(psi(prefix)), otherwise the step value is ``psi(prefix)`` itself.
    """
    t = a
    for i in range(1, len(c) + 1):
        prefix = c[:i]
        candidate = phi(prefix, t)
        cap = psi(prefix)
        t = candidate if len(candidate) <= len(cap) else cap
    return t


def s_ref(psi: UnaryRule, x: str) -> str:
    """Single recursion step: on input <t, b, d> returns phi(d, t) cut to
    len(b), with phi reached through the pair-encoded oracle ``psi``."""
    t = tuple_project(1, 3, x)
    b = tuple_project(2, 3, x)
    d = tuple_project(3, 3, x)
    return truncate(psi(pair_encode(d, t)), len(b))


def t_driver_ref(psi: UnaryRule, x: str) -> str:
    """Recursion driver: on input <a, b, c> iterates the oracle over the
    prefixes of ``c`` and aborts with the empty string the first time an
    answer exceeds len(b)."""
    a = tuple_project(1, 3, x)
    b = tuple_project(2, 3, x)
    c = tuple_project(3, 3, x)
    t = a
    for i in range(1, len(c) + 1):
        s = psi(pair_encode(c[:i], t))
        if len(s) > len(b):
            return ""
        t = s
    return t


def t_driver2_ref(psi2: BinaryRule, a: str, b: str, c: str) -> str:
    """Binary-rule form of :func:`t_driver_ref` (for lambda constants)."""
    t = a
    for i in range(1, len(c) + 1):
        s = psi2(c[:i], t)
        if len(s) > len(b):
            return ""
        t = s
    return t


def r_op_ref(psi: UnaryRule, x: str) -> str:
    """Limited recursion packaged as an operator on a 3-tuple input."""
    a0 = tuple_project(1, 3, x)
    b = tuple_project(2, 3, x)
    c = tuple_project(3, 3, x)
    return rec_ref(lambda s, t: psi(pair_encode(s, t)), a0, b, c)


def iteration_ref(phi: UnaryRule, a: str) -> str:
    """len(a)-fold iteration of the oracle starting from "0"."""
    t = "0"
    for _ in range(len(a)):
        t = phi(t)
    return t


def prefix_max_ref(phi: UnaryRule, a: str) -> str:
    """1^k where k is the longest answer over all prefixes of ``a``."""
    return "1" * max(len(phi(a[:i])) for i in range(len(a) + 1))


def filr_ref(phi: UnaryRule, a: str) -> str:
    """len(a) rounds of the doubled query phi(phi(.)), each truncated to
    len(phi(eps))."""
    bound = len(phi(""))
    t = ""
    for _ in range(len(a)):
        t = phi(phi(t))[:bound]
    return t


def selfcomp_ref(phi: UnaryRule, a: str) -> str:
    return phi(phi(a))


def zeromax_ref(phi: UnaryRule, a: str) -> str:
    """0^k where k is the longest answer over the queries 0^n, n <= len(a)."""
    return "0" * max(len(phi("0" * n)) for n in range(len(a) + 1))


# --------------------------------------------------------------------------
# Machine realizations


def build_R_machine() -> Machine:
    """Limited recursion with a priming query.

    Input <a0, b, c> (start value, truncation bound, recursion string).
    The first action queries 1^max(len(<c,a0>), len(<c,b>)); the answer is
    ignored, but the tupling length law makes every later query <c_prefix,
    t> at most that long, so the run has exactly one lookahead revision.
    """
    b = ProgramBuilder("R")
    rt, rw, rb, rc = b.reg("t"), b.reg("w"), b.reg("b"), b.reg("c")
    rq1, rq2, rl1, rl2 = b.reg("q1"), b.reg("q2"), b.reg("l1"), b.reg("l2")
    rq, rans, ru = b.reg("q"), b.reg("ans"), b.reg("u")
    pick2, prime, loop, body, done = (
        b.label("pick2"),
        b.label("prime"),
        b.label("loop"),
        b.label("body"),
        b.label("done"),
    )
    b.emit("PROJ1", 0, rt)
    b.emit("PROJ2", 0, rw)
    b.emit("PROJ1", rw, rb)
    b.emit("PROJ2", rw, rc)
    b.emit("PAIR", rc, rt, rq1)
    b.emit("PAIR", rc, rb, rq2)
    b.emit("LENU", rq1, rl1)
    b.emit("LENU", rq2, rl2)
    b.emit("JLE", rl1, rl2, pick2)
    b.emit("COPY", rl1, rq)
    b.emit("JMP", prime)
    b.mark(pick2)
    b.emit("COPY", rl2, rq)
    b.mark(prime)
    b.emit("QUERY", rq, rans)
    b.emit("CONST", ru, "")
    b.mark(loop)
    b.emit("APPENDBIT", "1", ru)
    b.emit("JLE", ru, rc, body)
    b.emit("JMP", done)
    b.mark(body)
    b.emit("COPY", rc, rw)
    b.emit("TRUNC", rw, ru)
    b.emit("PAIR", rw, rt, rq)
    b.emit("QUERY", rq, rans)
    b.emit("COPY", rans, rt)
    b.emit("TRUNC", rt, rb)
    b.emit("JMP", loop)
    b.mark(done)
    b.emit("HALT", rt)
    return b.build()


def build_ST_machines() -> tuple[Machine, Machine]:
    """The two strongly bounded factors of limited recursion.

    S: input <t, b, d>, one query <d, t>, output truncated to len(b).
    T: input <a, b, c>, drives the recursion over prefixes of ``c`` and
    halts with the empty string as soon as an answer exceeds len(b), so it
    has at most one length revision.  Wiring T's oracle to
    ``x -> S(<pi2 x, b, pi1 x>)`` reproduces limited recursion.
    """
    s = ProgramBuilder("S")
    st, sw, sb, sd, sq, sans = (
        s.reg("t"),
        s.reg("w"),
        s.reg("b"),
        s.reg("d"),
        s.reg("q"),
        s.reg("ans"),
    )
    s.emit("PROJ1", 0, st)
    s.emit("PROJ2", 0, sw)
    s.emit("PROJ1", sw, sb)
    s.emit("PROJ2", sw, sd)
    s.emit("PAIR", sd, st, sq)
    s.emit("QUERY", sq, sans)
    s.emit("TRUNC", sans, sb)
    s.emit("HALT", sans)
    s_machine = s.build()

    t = ProgramBuilder("T")
    tt, tw, tb, tc, tu, tq, ts = (
        t.reg("t"),
        t.reg("w"),
        t.reg("b"),
        t.reg("c"),
        t.reg("u"),
        t.reg("q"),
        t.reg("s"),
    )
    loop, body, ok, done = t.label("loop"), t.label("body"), t.label("ok"), t.label("done")
    t.emit("PROJ1", 0, tt)
    t.emit("PROJ2", 0, tw)
    t.emit("PROJ1", tw, tb)
    t.emit("PROJ2", tw, tc)
    t.emit("CONST", tu, "")
    t.mark(loop)
    t.emit("APPENDBIT", "1", tu)
    t.emit("JLE", tu, tc, body)
    t.emit("JMP", done)
    t.mark(body)
    t.emit("COPY", tc, tw)
    t.emit("TRUNC", tw, tu)
    t.emit("PAIR", tw, tt, tq)
    t.emit("QUERY", tq, ts)
    t.emit("JLE", ts, tb, ok)
    t.emit("CONST", tt, "")
    t.emit("HALT", tt)
    t.mark(ok)
    t.emit("COPY", ts, tt)
    t.emit("JMP", loop)
    t.mark(done)
    t.emit("HALT", tt)
    return s_machine, t.build()


def build_iteration_machine() -> Machine:
    """t := "0"; len(a) times t := oracle(t)."""
    b = ProgramBuilder("iteration")
    rt, ru = b.reg("t"), b.reg("u")
    loop, done = b.label("loop"), b.label("done")
    b.emit("CONST", rt, "0")
    b.emit("COPY", 0, ru)
    b.mark(loop)
    b.emit("JZ", ru, done)
    b.emit("QUERY", rt, rt)
    b.emit("DROPLAST", ru)
    b.emit("JMP", loop)
    b.mark(done)
    b.emit("HALT", rt)
    return b.build()


def build_prefix_max_machine() -> Machine:
    """Queries every prefix of the input in decreasing length order (the
    full input first, so exactly one lookahead revision) and outputs 1^max
    over the answer lengths."""
    b = ProgramBuilder("prefix_max")
    rw, rm, rans, rl = b.reg("w"), b.reg("m"), b.reg("ans"), b.reg("l")
    loop, skip, done = b.label("loop"), b.label("skip"), b.label("done")
    b.emit("COPY", 0, rw)
    b.emit("CONST", rm, "")
    b.mark(loop)
    b.emit("QUERY", rw, rans)
    b.emit("LENU", rans, rl)
    b.emit("JLE", rl, rm, skip)
    b.emit("COPY", rl, rm)
    b.mark(skip)
    b.emit("JZ", rw, done)
    b.emit("DROPLAST", rw)
    b.emit("JMP", loop)
    b.mark(done)
    b.emit("HALT", rm)
    return b.build()


def build_filr_machine() -> Machine:
    """len(a) rounds of the doubled query, truncating each round's value to
    the length of the very first answer oracle(eps)."""
    b = ProgramBuilder("filr")
    rq, rb, rt, ru = b.reg("q"), b.reg("bound"), b.reg("t"), b.reg("u")
    loop, done = b.label("loop"), b.label("done")
    b.emit("CONST", rq, "")
    b.emit("QUERY", rq, rb)
    b.emit("CONST", rt, "")
    b.emit("COPY", 0, ru)
    b.mark(loop)
    b.emit("JZ", ru, done)
    b.emit("QUERY", rt, rt)
    b.emit("QUERY", rt, rt)
    b.emit("TRUNC", rt, rb)
    b.emit("DROPLAST", ru)
    b.emit("JMP", loop)
    b.mark(done)
    b.emit("HALT", rt)
    return b.build()


def build_selfcomp_machine() -> Machine:
    """oracle(oracle(a)): two chained queries."""
    b = ProgramBuilder("selfcomp")
    r1, r2 = b.reg("mid"), b.reg("out")
    b.emit("QUERY", 0, r1)
    b.emit("QUERY", r1, r2)
    b.emit("HALT", r2)
    return b.build()


def build_zeromax_machine() -> Machine:
    """Queries 0^n for n from len(a) down to 0 (the longest query first,
    so one lookahead revision) and outputs 0^max over answer lengths."""
    b = ProgramBuilder("zeromax")
    rw, ru, rm, rans, rl, ro = (
        b.reg("w"),
        b.reg("u"),
        b.reg("m"),
        b.reg("ans"),
        b.reg("l"),
        b.reg("out"),
    )
    build, qloop, skip, conv, convloop, done = (
        b.label("build"),
        b.label("qloop"),
        b.label("skip"),
        b.label("conv"),
        b.label("convloop"),
        b.label("done"),
    )
    b.emit("COPY", 0, ru)
    b.emit("CONST", rw, "")
    b.mark(build)
    b.emit("JZ", ru, qloop)
    b.emit("APPENDBIT", "0", rw)
    b.emit("DROPLAST", ru)
    b.emit("JMP", build)
    b.mark(qloop)
    b.emit("QUERY", rw, rans)
    b.emit("LENU", rans, rl)
    b.emit("JLE", rl, rm, skip)
    b.emit("COPY", rl, rm)
    b.mark(skip)
    b.emit("JZ", rw, conv)
    b.emit("DROPLAST", rw)
    b.emit("JMP", qloop)
    b.mark(conv)
    b.emit("CONST", ro, "")
    b.mark(convloop)
    b.emit("JZ", rm, done)
    b.emit("APPENDBIT", "0", ro)
    b.emit("DROPLAST", rm)
    b.emit("JMP", convloop)
    b.mark(done)
    b.emit("HALT", ro)
    return b.build()


# --------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class OperatorRef:
    """Operator entry: pure total map, machine realization, and the claimed
    complexity shape used by the analysis suites."""

    name: str
    ref: Callable[[UnaryRule, str], str]
    build: Callable[[], Machine] = field(compare=False)
    step_count_shape: str = "quadratic"
    lookahead_bound: int | None = None
    length_bound: int | None = None


LIBRARY: dict[str, OperatorRef] = {
    op.name: op
    for op in [
        OperatorRef("R", r_op_ref, build_R_machine, "quadratic", lookahead_bound=1),
        OperatorRef("S", s_ref, lambda: build_ST_machines()[0], "linear"),
        OperatorRef(
            "T", t_driver_ref, lambda: build_ST_machines()[1], "quadratic", length_bound=1
        ),
        OperatorRef("iteration", iteration_ref, build_iteration_machine, "linear"),
        OperatorRef(
            "prefix_max", prefix_max_ref, build_prefix_max_machine, "quadratic",
            lookahead_bound=1,
        ),
        OperatorRef("filr", filr_ref, build_filr_machine, "quadratic"),
        OperatorRef("selfcomp", selfcomp_ref, build_selfcomp_machine, "constant",
                    lookahead_bound=2),
        OperatorRef("zeromax", zeromax_ref, build_zeromax_machine, "quadratic",
                    lookahead_bound=1),
    ]
}


def machine_by_name(name: str) -> Machine:
    try:
        return LIBRARY[name].build()
    except KeyError:
        raise ValueError(f"unknown library machine {name!r}") from None


def r_input(a0: str, b: str, c: str) -> str:
    """The 3-tuple input convention of the limited-recursion machines."""
    return tuple_encode([a0, b, c])
