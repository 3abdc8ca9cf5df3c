"""Machine-to-machine constructions and adversarial oracle builders.

All transforms are pure program rewrites: the returned machines run on the
ordinary interpreter, so every claim about them is checked with the same
trace instrumentation as hand-written machines.  Simulated instructions
charge their native costs; wrapper bookkeeping is ordinary IR code, so it
charges the length of every string it materializes plus one step per
control decision.

The factorization splits a machine M with plain step-count p and at most r
lookahead revisions into a thrower and a handler:

  * The thrower takes <a, enc(c # c')> (second component in the {0,1,#}
    digraph encoding).  It poses the priming query c, remembers the largest
    answer it has seen (priming included), replays M on input ``a``, and
    aborts the replay the first time an answer exceeds both its own input
    length and that watermark.  Aborting on query d yields the exception
    enc(d # 1^(len(c')-len(d))) -- fixed length len(c')+1 once decoded --
    when d fits, and enc(d # # 1^w) with w the watermark when it does not.
    Malformed second components yield the empty string.

  * The handler starts from m := p(len(a)) and queries <a, enc(# 1^m)>.
    Answers without # are decoded and returned.  A single-# answer carries
    the revision query d; the handler re-queries <a, enc(d # 1^m)> so the
    next replay primes d and sails past that revision.  A double-# answer
    carries the watermark w; the handler sets m := p(w) + w + 1 (strictly
    above everything seen, so replays always progress even under a flat
    step-count) and restarts with d discarded.  Hitting the (2r+1)-st of
    its own length revisions makes the handler give up with the empty
    string.

The protocol is validated extensionally: handler composed with thrower
equals the subject machine on randomized corpora, including oracles whose
answers are large enough to force both exception forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

from .otm import (
    Builtin,
    Composite,
    EnumerationCapError,
    Machine,
    ProgramBuilder,
    _SIGS,
    inline_program,
    run,
)
from .sopoly import UnaryPolynomial

__all__ = [
    "VIOLATION_SENTINEL",
    "BudgetedSimulation",
    "FactorPair",
    "spt_to_mpt",
    "factorize",
    "factor_oracle",
    "inline_compose",
    "budgeted_compose",
    "build_tagged_outer",
    "build_priming_inner",
    "iteration_adversary",
    "filr_adversary",
    "FilrAdversary",
    "selfcomp_adversary",
]

# In-band marker a wrapper halts with when its declared step-count was
# violated; there is no out-of-band channel in the IR, so corpora must
# avoid this as a legitimate output.
VIOLATION_SENTINEL = "10" * 8


@dataclass(frozen=True)
class BudgetedSimulation:
    """A subject machine together with its declared plain step-count and
    revision bound, the triple the simulation transforms consume."""

    subject: Machine
    step_count: UnaryPolynomial
    revision_bound: int

    def to_mpt(self) -> Machine:
        return spt_to_mpt(self.subject, self.step_count, self.revision_bound)

    def factorize(self) -> "FactorPair":
        return factorize(self.subject, self.step_count, self.revision_bound)


class FactorPair(NamedTuple):
    thrower: Machine
    handler: Machine


# --------------------------------------------------------------------------
# Shared emit helpers


def _emit_fill(b: ProgramBuilder, unit: str, target: int, dst: int) -> None:
    """dst := ``unit`` repeated and truncated to len(target).

    Doubling plus one truncation keeps the instruction count logarithmic;
    len(target) must be a multiple of len(unit) for aligned results.
    """
    loop, done = b.label("fill"), b.label("fill_done")
    b.emit("CONST", dst, unit)
    b.mark(loop)
    b.emit("JLE", target, dst, done)
    b.emit("APPEND", dst, dst)
    b.emit("JMP", loop)
    b.mark(done)
    b.emit("TRUNC", dst, target)


def _emit_poly(
    b: ProgramBuilder,
    p: UnaryPolynomial,
    src: int,
    dst: int,
    t_pw: int,
    t_new: int,
    t_cnt: int,
) -> None:
    """dst := 1^(p(len(src))) via unary Horner-free accumulation."""
    b.emit("CONST", dst, "")
    b.emit("CONST", t_pw, "1")
    for k, c in enumerate(p.coeffs):
        for _ in range(c):
            b.emit("APPEND", t_pw, dst)
        if k + 1 < len(p.coeffs):
            loop, done = b.label("pmul"), b.label("pmul_done")
            b.emit("CONST", t_new, "")
            b.emit("COPY", src, t_cnt)
            b.mark(loop)
            b.emit("JZ", t_cnt, done)
            b.emit("APPEND", t_pw, t_new)
            b.emit("DROPLAST", t_cnt)
            b.emit("JMP", loop)
            b.mark(done)
            b.emit("COPY", t_new, t_pw)


def _emit_encode(b: ProgramBuilder, src: int, dst: int, t_pfx: int) -> None:
    """dst := digraph encoding of src (0 -> 00, 1 -> 01), left to right."""
    loop, zero, done = b.label("enc"), b.label("enc0"), b.label("enc_done")
    b.emit("CONST", dst, "")
    b.emit("CONST", t_pfx, "")
    b.mark(loop)
    b.emit("JLE", src, t_pfx, done)
    b.emit("APPENDBIT", "0", t_pfx)
    b.emit("JPREFIX", t_pfx, src, zero)
    b.emit("DROPLAST", t_pfx)
    b.emit("APPENDBIT", "1", t_pfx)
    b.emit("APPENDBIT", "0", dst)
    b.emit("APPENDBIT", "1", dst)
    b.emit("JMP", loop)
    b.mark(zero)
    b.emit("APPENDBIT", "0", dst)
    b.emit("APPENDBIT", "0", dst)
    b.emit("JMP", loop)
    b.mark(done)


def _emit_digraph_scan(
    b: ProgramBuilder,
    src: int,
    t_pfx: int,
    out: int,
    rem2: int,
    *,
    sep_label: str,
    end_label: str,
    bad_label: str,
) -> None:
    """Decode digraphs of ``src`` into ``out`` until the first "11".

    ``rem2`` must hold 1^len(src) at entry; every consumed digraph
    (separator included) drops two of its units, so at ``sep_label`` it
    holds 1^(len(src) - 2*(len(out)+1)).  Reaching the end cleanly jumps to
    ``end_label``; "10" digraphs or odd leftovers jump to ``bad_label``.
    """
    loop, first0, first1, d01, take = (
        b.label("scan"),
        b.label("scan_f0"),
        b.label("scan_f1"),
        b.label("scan_01"),
        b.label("scan_take"),
    )
    b.emit("CONST", out, "")
    b.emit("CONST", t_pfx, "")
    b.mark(loop)
    b.emit("JLE", src, t_pfx, end_label)
    b.emit("APPENDBIT", "0", t_pfx)
    b.emit("JPREFIX", t_pfx, src, first0)
    b.emit("DROPLAST", t_pfx)
    b.emit("APPENDBIT", "1", t_pfx)
    b.emit("JPREFIX", t_pfx, src, first1)
    b.emit("JMP", bad_label)
    b.mark(first0)
    b.emit("APPENDBIT", "0", t_pfx)
    b.emit("JPREFIX", t_pfx, src, take)
    b.emit("DROPLAST", t_pfx)
    b.emit("APPENDBIT", "1", t_pfx)
    b.emit("JPREFIX", t_pfx, src, d01)
    b.emit("JMP", bad_label)
    b.mark(take)
    b.emit("APPENDBIT", "0", out)
    b.emit("DROPLAST", rem2)
    b.emit("DROPLAST", rem2)
    b.emit("JMP", loop)
    b.mark(d01)
    b.emit("APPENDBIT", "1", out)
    b.emit("DROPLAST", rem2)
    b.emit("DROPLAST", rem2)
    b.emit("JMP", loop)
    b.mark(first1)
    b.emit("APPENDBIT", "0", t_pfx)
    b.emit("JPREFIX", t_pfx, src, bad_label)
    b.emit("DROPLAST", t_pfx)
    b.emit("APPENDBIT", "1", t_pfx)
    b.emit("JPREFIX", t_pfx, src, sep_label)
    b.emit("JMP", bad_label)
    # at sep_label the caller still owes the two rem2 drops for the separator


def _emit_halve(b: ProgramBuilder, src: int, dst: int) -> None:
    """dst := 1^(len(src)/2); consumes src, whose length must be even."""
    loop, done = b.label("half"), b.label("half_done")
    b.emit("CONST", dst, "")
    b.mark(loop)
    b.emit("JZ", src, done)
    b.emit("DROPLAST", src)
    b.emit("DROPLAST", src)
    b.emit("APPENDBIT", "1", dst)
    b.emit("JMP", loop)
    b.mark(done)


def _emit_charge(
    b: ProgramBuilder,
    op: str,
    args: tuple,
    budget: int,
    t1: int,
    t2: int,
    violation: str,
) -> None:
    """Decrement ``budget`` by the exact interpreter cost of (op, args)."""
    unit_cost = {"APPENDBIT", "DROPLAST", "JMP", "JZ", "FIRSTBIT", "HALT", "QUERY"}
    if op in unit_cost:
        b.emit("JZ", budget, violation)
        b.emit("DROPLAST", budget)
        return
    if op == "CONST":
        b.emit("CONST", t1, "1" * (len(args[1]) + 1))
    elif op in ("COPY", "APPEND", "LENU", "PROJ1", "PROJ2"):
        b.emit("LENU", args[0], t1)
        b.emit("APPENDBIT", "1", t1)
    elif op == "TRUNC":
        use_first = b.label("cmin")
        b.emit("LENU", args[0], t1)
        b.emit("LENU", args[1], t2)
        b.emit("JLE", t1, t2, use_first)
        b.emit("COPY", t2, t1)
        b.mark(use_first)
        b.emit("APPENDBIT", "1", t1)
    elif op == "PAIR":
        b.emit("LENU", args[0], t1)
        b.emit("LENU", args[1], t2)
        b.emit("APPEND", t2, t1)
        b.emit("APPENDBIT", "1", t1)
    elif op in ("JLE", "JEQ", "JPREFIX"):
        use_second, go = b.label("cmaxb"), b.label("cmax_go")
        b.emit("LENU", args[0], t1)
        b.emit("LENU", args[1], t2)
        b.emit("JLE", t1, t2, use_second)
        b.emit("JMP", go)
        b.mark(use_second)
        b.emit("COPY", t2, t1)
        b.mark(go)
        b.emit("APPENDBIT", "1", t1)
    else:  # pragma: no cover - signature table is closed
        raise ValueError(op)
    loop, done = b.label("charge"), b.label("charge_done")
    b.mark(loop)
    b.emit("JZ", t1, done)
    b.emit("JZ", budget, violation)
    b.emit("DROPLAST", budget)
    b.emit("DROPLAST", t1)
    b.emit("JMP", loop)
    b.mark(done)


# --------------------------------------------------------------------------
# Phase simulation: finite length revision to finite lookahead revision


def spt_to_mpt(machine: Machine, p: UnaryPolynomial, r: int) -> Machine:
    """Wrap a finite-length-revision machine into a finite-lookahead one.

    The wrapper primes with one large query, then replays the subject
    within a step budget derived from ``p``; a length revision starts a new
    phase (fresh priming, fresh budget), so lookahead revisions are bounded
    by the number of phases, at most r+1.  If the subject neither halts nor
    length-revises within a phase budget, the wrapper halts with
    :data:`VIOLATION_SENTINEL`, evidence that ``p`` was not a step-count.

    The step budget uses p(n)+n+1 and the priming size triples it: in this
    cost model a machine can materialize strings about twice as long as the
    budget it spends (PAIR) on top of answers it re-queries for free, so
    the priming must dominate that, not just p.
    """
    if r < 0:
        raise ValueError("revision bound must be nonnegative")
    pp = p + UnaryPolynomial((1, 1))
    prime_poly = UnaryPolynomial.constant(3) * pp
    b = ProgramBuilder(f"{machine.name}_mpt", reserve=machine.register_count)
    s_il, s_bud, s_prime, s_wm = b.reg("il"), b.reg("bud"), b.reg("prime"), b.reg("wm")
    s_t1, s_t2 = b.reg("t1"), b.reg("t2")
    s_pw, s_new, s_cnt, s_junk = b.reg("pw"), b.reg("new"), b.reg("cnt"), b.reg("junk")
    violation = b.label("violation")

    b.emit("LENU", 0, s_il)
    b.emit("CONST", s_wm, "")
    _emit_poly(b, prime_poly, 0, s_prime, s_pw, s_new, s_cnt)
    _emit_poly(b, pp, 0, s_bud, s_pw, s_new, s_cnt)
    b.emit("QUERY", s_prime, s_junk)
    b.emit("JMP", "m__0")

    for idx, (op, args) in enumerate(machine.instructions):
        b.mark(f"m__{idx}")
        _emit_charge(b, op, args, s_bud, s_t1, s_t2, violation)
        if op == "QUERY":
            q, a = args
            no_rev, keep, cont = b.label("norev"), b.label("keep"), b.label("cont")
            b.emit("QUERY", q, a)
            b.emit("LENU", a, s_t1)
            b.emit("JLE", s_t1, s_il, no_rev)
            b.emit("JLE", s_t1, s_wm, no_rev)
            # length revision: new phase with the answer length as base
            b.emit("COPY", s_t1, s_wm)
            _emit_poly(b, prime_poly, s_t1, s_prime, s_pw, s_new, s_cnt)
            _emit_poly(b, pp, s_t1, s_bud, s_pw, s_new, s_cnt)
            b.emit("QUERY", s_prime, s_junk)
            b.emit("JMP", cont)
            b.mark(no_rev)
            b.emit("JLE", s_t1, s_wm, keep)
            b.emit("COPY", s_t1, s_wm)
            b.mark(keep)
            b.mark(cont)
            continue
        new_args = [
            f"m__{val}" if kind == "lbl" else val
            for kind, val in zip(_SIGS[op], args)
        ]
        b.emit(op, *new_args)

    b.mark(violation)
    b.emit("CONST", s_t1, VIOLATION_SENTINEL)
    b.emit("HALT", s_t1)
    return b.build()


# --------------------------------------------------------------------------
# Factorization into thrower and handler


def _build_thrower(machine: Machine) -> Machine:
    b = ProgramBuilder(f"{machine.name}_thrower", reserve=machine.register_count)
    w_a, w_b, w_pfx, w_c = b.reg("a"), b.reg("benc"), b.reg("pfx"), b.reg("c")
    w_rem2, w_il, w_wm, w_d = b.reg("rem2"), b.reg("il"), b.reg("wm"), b.reg("d")
    w_t1, w_out, w_enc, w_pad = b.reg("t1"), b.reg("out"), b.reg("enc"), b.reg("pad")
    malformed, scan_done, abort, enc_ret = (
        b.label("malformed"),
        b.label("scan_done"),
        b.label("abort"),
        b.label("enc_ret"),
    )

    b.emit("LENU", 0, w_il)
    b.emit("PROJ1", 0, w_a)
    b.emit("PROJ2", 0, w_b)
    b.emit("LENU", w_b, w_rem2)
    _emit_digraph_scan(
        b, w_b, w_pfx, w_c, w_rem2,
        sep_label=scan_done, end_label=malformed, bad_label=malformed,
    )
    b.mark(scan_done)
    b.emit("DROPLAST", w_rem2)
    b.emit("DROPLAST", w_rem2)  # now 1^(2*len(c'))
    b.emit("QUERY", w_c, w_t1)  # priming; only the answer size matters
    b.emit("LENU", w_t1, w_wm)
    b.emit("COPY", w_a, 0)
    b.emit("JMP", "m__0")

    def on_query(bq: ProgramBuilder, q: int, a: int) -> None:
        no_ab, keep = bq.label("noab"), bq.label("keep")
        bq.emit("COPY", q, w_d)
        bq.emit("QUERY", q, a)
        bq.emit("LENU", a, w_t1)
        bq.emit("JLE", w_t1, w_il, no_ab)
        bq.emit("JLE", w_t1, w_wm, no_ab)
        bq.emit("JMP", abort)
        bq.mark(no_ab)
        bq.emit("JLE", w_t1, w_wm, keep)
        bq.emit("COPY", w_t1, w_wm)
        bq.mark(keep)

    def on_halt(bh: ProgramBuilder, reg: int) -> None:
        bh.emit("COPY", reg, w_out)
        bh.emit("JMP", enc_ret)

    inline_program(b, machine, prefix="m__", on_query=on_query, on_halt=on_halt)

    b.mark(enc_ret)
    _emit_encode(b, w_out, w_enc, w_pfx)
    b.emit("HALT", w_enc)

    b.mark(abort)
    # watermark := the triggering answer, reported in the overflow form
    b.emit("COPY", w_t1, w_wm)
    b.emit("LENU", w_d, w_t1)
    b.emit("APPEND", w_t1, w_t1)  # 1^(2*len(d))
    overflow = b.label("overflow")
    b.emit("JLE", w_rem2, w_t1, overflow)
    # revision exception: enc(d) 11 (01)^(len(c')-len(d)), decoded length len(c')+1
    _emit_encode(b, w_d, w_enc, w_pfx)
    b.emit("APPENDBIT", "1", w_enc)
    b.emit("APPENDBIT", "1", w_enc)
    sub, pad_build = b.label("sub"), b.label("pad_build")
    b.mark(sub)
    b.emit("JZ", w_t1, pad_build)
    b.emit("DROPLAST", w_rem2)
    b.emit("DROPLAST", w_t1)
    b.emit("JMP", sub)
    b.mark(pad_build)
    _emit_fill(b, "01", w_rem2, w_pad)
    b.emit("APPEND", w_pad, w_enc)
    b.emit("HALT", w_enc)

    b.mark(overflow)
    # capacity exceeded: enc(d) 11 11 (01)^watermark
    _emit_encode(b, w_d, w_enc, w_pfx)
    for _ in range(4):
        b.emit("APPENDBIT", "1", w_enc)
    b.emit("COPY", w_wm, w_t1)
    b.emit("APPEND", w_wm, w_t1)  # 1^(2*wm)
    _emit_fill(b, "01", w_t1, w_pad)
    b.emit("APPEND", w_pad, w_enc)
    b.emit("HALT", w_enc)

    b.mark(malformed)
    b.emit("CONST", w_enc, "")
    b.emit("HALT", w_enc)
    return b.build()


def _build_handler(p: UnaryPolynomial, r: int, name: str) -> Machine:
    b = ProgramBuilder(f"{name}_handler")
    n_il, n_m, n_d, n_cap = b.reg("il"), b.reg("m"), b.reg("d"), b.reg("cap")
    n_awm, n_be, n_q, n_ans = b.reg("awm"), b.reg("benc"), b.reg("q"), b.reg("ans")
    n_t1, n_rem2, n_pfx, n_dd = b.reg("t1"), b.reg("rem2"), b.reg("pfx"), b.reg("dd")
    n_pad, n_k = b.reg("pad"), b.reg("k")
    n_pw, n_new, n_cnt = b.reg("pw"), b.reg("new"), b.reg("cnt")
    loop, no_rev, retval, sep, single, double, give_up = (
        b.label("loop"),
        b.label("no_rev"),
        b.label("retval"),
        b.label("sep"),
        b.label("single"),
        b.label("double"),
        b.label("give_up"),
    )

    b.emit("LENU", 0, n_il)
    _emit_poly(b, p, 0, n_m, n_pw, n_new, n_cnt)
    b.emit("CONST", n_cap, "1" * (2 * r + 1))
    b.emit("CONST", n_d, "")
    b.emit("COPY", n_il, n_awm)

    b.mark(loop)
    _emit_encode(b, n_d, n_be, n_pfx)
    b.emit("APPENDBIT", "1", n_be)
    b.emit("APPENDBIT", "1", n_be)
    b.emit("COPY", n_m, n_t1)
    b.emit("APPEND", n_m, n_t1)  # 1^(2m)
    _emit_fill(b, "01", n_t1, n_pad)
    b.emit("APPEND", n_pad, n_be)
    b.emit("PAIR", 0, n_be, n_q)
    b.emit("QUERY", n_q, n_ans)
    # own length-revision accounting; the cap is only enforced when the run
    # has to continue, so a final return value is always handed through
    b.emit("LENU", n_ans, n_t1)
    b.emit("JLE", n_t1, n_awm, no_rev)
    b.emit("COPY", n_t1, n_awm)
    b.emit("DROPLAST", n_cap)
    b.mark(no_rev)
    b.emit("LENU", n_ans, n_rem2)
    _emit_digraph_scan(
        b, n_ans, n_pfx, n_dd, n_rem2,
        sep_label=sep, end_label=retval, bad_label=give_up,
    )
    b.mark(retval)
    b.emit("HALT", n_dd)

    b.mark(sep)
    b.emit("DROPLAST", n_rem2)
    b.emit("DROPLAST", n_rem2)
    # one more digraph decides the exception form; "11" means capacity overflow
    chk2 = b.label("chk2")
    b.emit("JLE", n_ans, n_pfx, single)  # nothing after '#': treat as revision form
    b.emit("APPENDBIT", "0", n_pfx)
    b.emit("JPREFIX", n_pfx, n_ans, single)
    b.emit("DROPLAST", n_pfx)
    b.emit("APPENDBIT", "1", n_pfx)
    b.emit("JPREFIX", n_pfx, n_ans, chk2)
    b.emit("JMP", give_up)
    b.mark(chk2)
    b.emit("APPENDBIT", "0", n_pfx)
    b.emit("JPREFIX", n_pfx, n_ans, give_up)  # "10" never occurs in the image
    b.emit("DROPLAST", n_pfx)
    b.emit("APPENDBIT", "1", n_pfx)
    b.emit("JPREFIX", n_pfx, n_ans, double)
    b.emit("JMP", give_up)

    b.mark(single)
    b.emit("JZ", n_cap, give_up)  # the (2r+1)-st revision ends the run
    b.emit("COPY", n_dd, n_d)
    b.emit("JMP", loop)

    b.mark(double)
    b.emit("JZ", n_cap, give_up)
    b.emit("DROPLAST", n_rem2)
    b.emit("DROPLAST", n_rem2)  # consume the second separator
    _emit_halve(b, n_rem2, n_k)
    b.emit("JLE", n_k, n_il, give_up)  # watermark must exceed the input length
    # capacity update m := p(k) + k + 1: the step-count may legitimately be
    # flat (constant-time subjects), and only m > k makes the next replay's
    # input dominate every answer seen so far, guaranteeing progress
    _emit_poly(b, p, n_k, n_m, n_pw, n_new, n_cnt)
    b.emit("APPEND", n_k, n_m)
    b.emit("APPENDBIT", "1", n_m)
    b.emit("CONST", n_d, "")
    b.emit("JMP", loop)

    b.mark(give_up)
    b.emit("CONST", n_t1, "")
    b.emit("HALT", n_t1)
    return b.build()


def factorize(machine: Machine, p: UnaryPolynomial, r: int) -> FactorPair:
    """Split a finite-lookahead machine into two finite-length-revision ones.

    ``p`` must be a plain step-count and ``r`` a lookahead-revision bound of
    the subject (caller-asserted; a too-small ``p`` surfaces as the handler
    giving up).  The thrower depends only on the subject, the handler only
    on (p, r).  Composing them (handler's oracle answering with thrower
    runs, see :func:`factor_oracle`) reproduces the subject extensionally;
    the thrower shows at most 2 length revisions per run and the handler at
    most 2r+1.
    """
    if r < 0:
        raise ValueError("revision bound must be nonnegative")
    return FactorPair(_build_thrower(machine), _build_handler(p, r, machine.name))


def factor_oracle(thrower: Machine, phi: Callable[[str], str], fuel: int) -> Composite:
    """The handler-side oracle: each query is a fresh thrower run on phi."""
    return Composite(
        f"{thrower.name} on oracle",
        lambda x: run(thrower, phi, x, fuel)[0],
    )


# --------------------------------------------------------------------------
# Composition


def inline_compose(outer: Machine, inner: Machine) -> Machine:
    """Expand every oracle query of ``outer`` into a fresh run of ``inner``
    against the real oracle; computes the composition of the operators."""
    if outer.register_count + inner.register_count > 4096:
        raise ValueError("register capacity exceeded by composition")
    b = ProgramBuilder(f"{outer.name}.{inner.name}", reserve=outer.register_count)
    inner_regs = [b.reg(f"inner{i}") for i in range(inner.register_count)]

    for idx, (op, args) in enumerate(outer.instructions):
        b.mark(f"o__{idx}")
        if op == "QUERY":
            q, a = args
            for reg in inner_regs[1:]:
                b.emit("CONST", reg, "")
            b.emit("COPY", q, inner_regs[0])
            site_end = b.label("site_end")

            def on_halt(bh: ProgramBuilder, reg: int, _a=a, _end=site_end) -> None:
                bh.emit("COPY", reg, _a)
                bh.emit("JMP", _end)

            inline_program(
                b,
                inner,
                prefix=f"i{idx}__",
                reg_of=lambda rr: inner_regs[rr],
                on_halt=on_halt,
            )
            b.mark(site_end)
            continue
        new_args = [
            f"o__{val}" if kind == "lbl" else val
            for kind, val in zip(_SIGS[op], args)
        ]
        b.emit(op, *new_args)
    return b.build()


def build_tagged_outer(machine: Machine, p: UnaryPolynomial) -> Machine:
    """Outer half of the budgeted composition: every query is tagged with
    the current budget 1^(p(base)); the budget base rises to the largest
    answer seen whenever a query outgrows it."""
    pp = p + UnaryPolynomial((1, 1))
    b = ProgramBuilder(f"{machine.name}_tagged", reserve=machine.register_count)
    t_il, t_cur, t_wm = b.reg("il"), b.reg("cur"), b.reg("wm")
    t_q, t_t1 = b.reg("q"), b.reg("t1")
    t_pw, t_new, t_cnt = b.reg("pw"), b.reg("new"), b.reg("cnt")

    b.emit("LENU", 0, t_il)
    b.emit("COPY", t_il, t_wm)
    _emit_poly(b, pp, 0, t_cur, t_pw, t_new, t_cnt)
    b.emit("JMP", "m__0")

    def on_query(bq: ProgramBuilder, q: int, a: int) -> None:
        ok, skip = bq.label("fits"), bq.label("skip")
        bq.emit("JLE", q, t_cur, ok)
        _emit_poly(bq, pp, t_wm, t_cur, t_pw, t_new, t_cnt)
        bq.emit("JLE", q, t_cur, ok)
        bq.emit("CONST", t_t1, VIOLATION_SENTINEL)
        bq.emit("HALT", t_t1)
        bq.mark(ok)
        bq.emit("PAIR", q, t_cur, t_q)
        bq.emit("QUERY", t_q, a)
        bq.emit("LENU", a, t_t1)
        bq.emit("JLE", t_t1, t_wm, skip)
        bq.emit("COPY", t_t1, t_wm)
        bq.mark(skip)

    inline_program(b, machine, prefix="m__", on_query=on_query)
    return b.build()


def build_priming_inner(machine: Machine, q: UnaryPolynomial) -> Machine:
    """Inner half of the budgeted composition: unwraps <input, budget>
    tags (non-pairs abort with the empty string), primes one query of size
    3*(q(budget)+budget+1), then runs the subject."""
    qq = UnaryPolynomial.constant(3) * (q + UnaryPolynomial((1, 1)))
    b = ProgramBuilder(f"{machine.name}_primed", reserve=machine.register_count)
    i_b, i_m, i_t, i_prime = b.reg("b"), b.reg("m"), b.reg("t"), b.reg("prime")
    i_pw, i_new, i_cnt = b.reg("pw"), b.reg("new"), b.reg("cnt")
    ok = b.label("wellformed")

    b.emit("PROJ1", 0, i_b)
    b.emit("PROJ2", 0, i_m)
    b.emit("PAIR", i_b, i_m, i_t)
    b.emit("JEQ", i_t, 0, ok)
    b.emit("CONST", i_t, "")
    b.emit("HALT", i_t)
    b.mark(ok)
    _emit_poly(b, qq, i_m, i_prime, i_pw, i_new, i_cnt)
    b.emit("QUERY", i_prime, i_t)
    b.emit("COPY", i_b, 0)
    b.emit("JMP", "m__0")
    inline_program(b, machine, prefix="m__")
    return b.build()


def budgeted_compose(
    outer: Machine, p: UnaryPolynomial, inner: Machine, q: UnaryPolynomial
) -> Machine:
    """Composition that preserves finite lookahead revision.

    Requires the outer machine to run with one lookahead revision and ``p``,
    ``q`` to be plain step-counts of outer and inner.  Queries are tagged
    with the outer budget; the inlined inner primes per tag value, so its
    own queries never revise until the tag itself grows, which happens at
    most a bounded number of times.
    """
    return inline_compose(build_tagged_outer(outer, p), build_priming_inner(inner, q))


# --------------------------------------------------------------------------
# Adversarial oracle builders

_ADVERSARY_ANSWER_CAP = 10**7


def iteration_adversary(t: Callable[[int], int], n: int) -> Builtin:
    """Chain oracle that feeds the iteration machine ever-longer values:
    "0" maps to 0^(t(n)+1) and each chain element 0^(t^k(n)+1) maps to
    0^(t^(k+1)(n)+1); everything else maps to the empty string.

    ``t`` must be strictly increasing (checked on a small window) so chain
    lengths grow and every chained query forces a lookahead revision.
    """
    for x in range(max(n, 4) + 4):
        if t(x + 1) <= t(x):
            raise ValueError("the step-count must be strictly increasing")

    def rule(q: str) -> str:
        if q == "0":
            return "0" * (t(n) + 1)
        if q and q.count("0") == len(q):
            j = len(q)
            x = t(n)
            while x + 1 < j:
                nx = t(x)
                if nx <= x:
                    return ""
                x = nx
            if x + 1 == j:
                out = t(x) + 1
                if out > _ADVERSARY_ANSWER_CAP:
                    raise EnumerationCapError("adversary answer exceeds the size cap")
                return "0" * out
        return ""

    return Builtin(f"iteration_adversary(n={n})", rule)


@dataclass(frozen=True)
class FilrAdversary:
    """Oracle family forcing revisions on the doubled-query machine, with
    the marker strings and the capacity parameter used to build it."""

    oracles: tuple[Builtin, ...]
    strings: tuple[str, ...]
    m: int


def filr_adversary(
    machine: Machine,
    p: UnaryPolynomial,
    k: int,
    *,
    fuel: int = 10**7,
    m_cap: int = 400,
) -> FilrAdversary:
    """Adversary family for the doubled-query machine.

    Picks the smallest m with m > p(k) and (p+1)^k(m) < 2^m - k - 2, then
    builds oracles psi_0..psi_k: psi_i maps eps to a_1, marker a_j to the
    ladder string 1^((p+1)^j(m)), and each ladder string back to the next
    marker.  Marker a_j is the lexicographically smallest length-m string
    containing a zero that avoids the queries, markers, and output of the
    run of ``machine`` against psi_(j-1) on input 1^k, so a machine that
    skips a ladder query cannot tell psi_j from an oracle with a different
    value; running against psi_i forces at least i lookahead revisions.
    """
    if k < 1:
        raise ValueError("k must be at least 1")

    def p1_iter(x: int, times: int) -> int:
        for _ in range(times):
            x = p(x) + 1
        return x

    m = p(k) + 1
    while not p1_iter(m, k) < 2**m - k - 2:
        m += 1
        if m > m_cap:
            raise EnumerationCapError(
                f"no feasible capacity parameter below the cap {m_cap}"
            )

    ladder = [p1_iter(m, j) for j in range(1, k + 1)]
    ladder_index = {length: j for j, length in enumerate(ladder)}

    def make_oracle(markers: tuple[str, ...], i: int) -> Builtin:
        marker_index = {s: j for j, s in enumerate(markers)}

        def rule(q: str) -> str:
            if q == "":
                return markers[0] if markers else ""
            j = marker_index.get(q)
            if j is not None:
                length = ladder[j]
                if length > _ADVERSARY_ANSWER_CAP:
                    raise EnumerationCapError("adversary answer exceeds the size cap")
                return "1" * length
            if q.count("1") == len(q):
                j = ladder_index.get(len(q))
                if j is not None and j + 1 < len(markers):
                    return markers[j + 1]
            return ""

        return Builtin(f"filr_adversary_{i}(m={m})", rule)

    markers: list[str] = []
    oracles = [make_oracle((), 0)]
    a = "1" * k
    for j in range(1, k + 1):
        out, trace = run(machine, oracles[j - 1], a, fuel)
        forbidden = {q for q, _ in trace.qa} | set(markers) | {"1" * m, out}
        marker = None
        for v in range(2**m):
            cand = format(v, f"0{m}b")
            if "0" in cand and cand not in forbidden:
                marker = cand
                break
        if marker is None:  # pragma: no cover - 2^m dwarfs the exclusions
            raise EnumerationCapError("marker search exhausted")
        markers.append(marker)
        oracles.append(make_oracle(tuple(markers), j))
    return FilrAdversary(tuple(oracles), tuple(markers), m)


def selfcomp_adversary(k: int) -> Builtin:
    """Answers 0^n with 0^(2k-n) for n <= k, everything else with eps, so
    chained self-composition queries climb back up in length."""
    if k < 0:
        raise ValueError("k must be nonnegative")

    def rule(q: str) -> str:
        if len(q) <= k and q.count("0") == len(q):
            return "0" * (2 * k - len(q))
        return ""

    return Builtin(f"selfcomp_adversary({k})", rule)
