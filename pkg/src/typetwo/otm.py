"""Cost-annotated oracle-machine IR, its instrumented interpreter, revision
metrics, step-count checkers, and the brute-force analyses for finite-table
oracles.

Machines are straight-line programs with labels over registers holding bit
strings; one oracle port is available through QUERY.  The interpreter is
deterministic, charges every instruction according to the cost table below,
and requires a fuel bound so that it can never diverge silently.

Cost model (steps charged per instruction):

    CONST r lit        len(lit) + 1        r := lit
    COPY s d           len(s) + 1          d := s
    APPEND s d         len(s) + 1          d := d . s
    APPENDBIT b r      1                   r := r . b
    DROPLAST r         1                   r := r without its last symbol
    TRUNC r u          min(len(r),len(u))+1   r := prefix of r of length len(u)
    LENU s d           len(s) + 1          d := 1^len(s)
    PAIR x y d         len(x)+len(y)+1     d := <x, y>  (tupling encoding)
    PROJ1 s d          len(s) + 1          d := first pair component (or eps)
    PROJ2 s d          len(s) + 1          d := second pair component (or eps)
    QUERY q a          1                   a := oracle(q); answers arrive free
    JMP L              1
    JZ r L             1                   jump if r is empty
    JLE r s L          max(lens) + 1       jump if len(r) <= len(s)
    JEQ r s L          max(lens) + 1       jump if r == s
    JPREFIX r s L      max(lens) + 1       jump if r is a prefix of s
    FIRSTBIT r L0 L1   1                   branch on first bit; eps falls through
    HALT r             1                   output := r

A query costs exactly one step regardless of query and answer length; any
further processing of the answer is charged by the instructions that touch
it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import count, product
from typing import Callable, Mapping

from .strings import check_bits, pair_decode, pair_encode

__all__ = [
    "Oracle",
    "FiniteTable",
    "Builtin",
    "Composite",
    "BUILTIN_ORACLES",
    "builtin_oracle",
    "oracle_from_json",
    "oracle_to_json",
    "Machine",
    "ProgramBuilder",
    "inline_program",
    "parse_machine_text",
    "pretty_print",
    "MachineParseError",
    "MachineValidationError",
    "FuelExhaustedError",
    "EnumerationCapError",
    "Trace",
    "RunMetrics",
    "run",
    "metrics",
    "check_step_count_plain",
    "check_step_count_ks",
    "oracle_size",
    "table_size_function",
    "brute_force_step_count",
    "table_from_trace",
    "trace_to_json",
    "DEFAULT_ENUMERATION_CAP",
    "DEFAULT_FUEL",
]

DEFAULT_ENUMERATION_CAP = 20
DEFAULT_FUEL = 10**7


class MachineParseError(ValueError):
    """Malformed machine text; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MachineValidationError(ValueError):
    """Structurally invalid program (bad register, label, or operand)."""


class EnumerationCapError(ValueError):
    """A brute-force enumeration was refused because it would be infeasible."""


class FuelExhaustedError(RuntimeError):
    """The run did not halt within its fuel budget.

    Carries the partial trace accumulated so far; its step count never
    exceeds the budget.
    """

    def __init__(self, fuel: int, trace: "Trace"):
        self.fuel = fuel
        self.trace = trace
        super().__init__(f"fuel budget of {fuel} exhausted after {trace.steps} steps")


# --------------------------------------------------------------------------
# Oracles


class Oracle:
    """Total map from bit strings to bit strings."""

    def __call__(self, query: str) -> str:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteTable(Oracle):
    """Finite table with a default answer for unlisted queries.

    The only oracle variant whose size function is exactly computable.
    """

    entries: Mapping[str, str]
    default: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        for k, v in self.entries.items():
            check_bits(k)
            check_bits(v)
        check_bits(self.default)

    def __call__(self, query: str) -> str:
        return self.entries.get(query, self.default)


@dataclass(frozen=True, eq=False)
class Builtin(Oracle):
    """Named total rule."""

    name: str
    rule: Callable[[str], str]

    def __call__(self, query: str) -> str:
        return self.rule(query)


@dataclass(frozen=True, eq=False)
class Composite(Oracle):
    """Oracle assembled by a transformation (e.g. one factor driving another)."""

    description: str
    fn: Callable[[str], str]

    def __call__(self, query: str) -> str:
        return self.fn(query)


def _doubling(s: str) -> str:
    return s + s


def _constant_empty(_: str) -> str:
    return ""


BUILTIN_ORACLES: dict[str, Callable[[str], str]] = {
    "doubling": _doubling,
    "empty": _constant_empty,
}


def builtin_oracle(name: str) -> Builtin:
    try:
        return Builtin(name, BUILTIN_ORACLES[name])
    except KeyError:
        raise ValueError(f"unknown builtin oracle {name!r}") from None


def oracle_from_json(obj: Mapping) -> Oracle:
    """Load {"default": ..., "entries": {...}} or {"builtin": name}."""
    if "builtin" in obj:
        return builtin_oracle(obj["builtin"])
    return FiniteTable(entries=dict(obj.get("entries", {})), default=obj.get("default", ""))


def oracle_to_json(oracle: Oracle) -> dict:
    if isinstance(oracle, FiniteTable):
        return {"default": oracle.default, "entries": dict(oracle.entries)}
    if isinstance(oracle, Builtin) and oracle.name in BUILTIN_ORACLES:
        return {"builtin": oracle.name}
    raise TypeError(f"oracle {oracle!r} has no JSON form")


# --------------------------------------------------------------------------
# Instruction set

_SIGS: dict[str, tuple[str, ...]] = {
    "CONST": ("reg", "lit"),
    "COPY": ("reg", "reg"),
    "APPEND": ("reg", "reg"),
    "APPENDBIT": ("bit", "reg"),
    "DROPLAST": ("reg",),
    "TRUNC": ("reg", "reg"),
    "LENU": ("reg", "reg"),
    "PAIR": ("reg", "reg", "reg"),
    "PROJ1": ("reg", "reg"),
    "PROJ2": ("reg", "reg"),
    "QUERY": ("reg", "reg"),
    "JMP": ("lbl",),
    "JZ": ("reg", "lbl"),
    "JLE": ("reg", "reg", "lbl"),
    "JEQ": ("reg", "reg", "lbl"),
    "JPREFIX": ("reg", "reg", "lbl"),
    "FIRSTBIT": ("reg", "lbl", "lbl"),
    "HALT": ("reg",),
}

_OPC = {name: i for i, name in enumerate(_SIGS)}
(
    _OP_CONST,
    _OP_COPY,
    _OP_APPEND,
    _OP_APPENDBIT,
    _OP_DROPLAST,
    _OP_TRUNC,
    _OP_LENU,
    _OP_PAIR,
    _OP_PROJ1,
    _OP_PROJ2,
    _OP_QUERY,
    _OP_JMP,
    _OP_JZ,
    _OP_JLE,
    _OP_JEQ,
    _OP_JPREFIX,
    _OP_FIRSTBIT,
    _OP_HALT,
) = (_OPC[n] for n in _SIGS)

Instruction = tuple[str, tuple]


@dataclass(frozen=True)
class Machine:
    """A closed, validated program over the IR.

    ``instructions`` holds (opcode, operands) pairs with jump targets
    already resolved to instruction indices.  Input arrives in r0; the
    output register is named by the HALT that fires.  Immutable after
    construction; any number of runs may proceed in parallel.
    """

    instructions: tuple[Instruction, ...]
    register_count: int
    name: str = field(default="machine", compare=False)
    _code: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.instructions)
        if n == 0:
            raise MachineValidationError("empty program")
        compiled = []
        for idx, (op, args) in enumerate(self.instructions):
            sig = _SIGS.get(op)
            if sig is None:
                raise MachineValidationError(f"unknown opcode {op!r} at index {idx}")
            if len(args) != len(sig):
                raise MachineValidationError(
                    f"{op} at index {idx} takes {len(sig)} operands, got {len(args)}"
                )
            slots: list = [None, None, None]
            for pos, (kind, val) in enumerate(zip(sig, args)):
                if kind == "reg":
                    if not isinstance(val, int) or not 0 <= val < self.register_count:
                        raise MachineValidationError(
                            f"register {val!r} out of range at index {idx}"
                        )
                elif kind == "lbl":
                    if not isinstance(val, int) or not 0 <= val < n:
                        raise MachineValidationError(
                            f"jump target {val!r} out of range at index {idx}"
                        )
                elif kind == "lit":
                    if not isinstance(val, str):
                        raise MachineValidationError(f"bad literal at index {idx}")
                    check_bits(val)
                elif kind == "bit":
                    if val not in ("0", "1"):
                        raise MachineValidationError(f"bad bit operand at index {idx}")
                slots[pos] = val
            compiled.append((_OPC[op], slots[0], slots[1], slots[2]))
        object.__setattr__(self, "_code", tuple(compiled))


class ProgramBuilder:
    """Incremental machine authorship: named registers, fresh labels.

    ``reserve`` keeps the first registers untouched so a subject machine's
    register file can be embedded unchanged by a transformation.
    """

    def __init__(self, name: str = "machine", *, reserve: int = 1):
        if reserve < 1:
            raise ValueError("reserve must keep at least r0")
        self.name = name
        self._next_reg = reserve
        self._named: dict[str, int] = {}
        self._instrs: list[tuple[str, tuple]] = []
        self._marks: dict[str, int] = {}
        self._fresh = count()

    def reg(self, name: str | None = None) -> int:
        if name is None:
            r = self._next_reg
            self._next_reg += 1
            return r
        if name not in self._named:
            self._named[name] = self._next_reg
            self._next_reg += 1
        return self._named[name]

    def label(self, hint: str = "L") -> str:
        return f"{hint}_{next(self._fresh)}"

    def mark(self, label: str) -> None:
        if label in self._marks:
            raise MachineValidationError(f"label {label!r} marked twice")
        self._marks[label] = len(self._instrs)

    def emit(self, op: str, *args) -> None:
        if op not in _SIGS:
            raise MachineValidationError(f"unknown opcode {op!r}")
        self._instrs.append((op, tuple(args)))

    def here(self) -> int:
        return len(self._instrs)

    def build(self) -> Machine:
        resolved = []
        for idx, (op, args) in enumerate(self._instrs):
            sig = _SIGS[op]
            new = []
            for kind, val in zip(sig, args):
                if kind == "lbl":
                    if isinstance(val, str):
                        if val not in self._marks:
                            raise MachineValidationError(f"undefined label {val!r}")
                        val = self._marks[val]
                    if val >= len(self._instrs):
                        raise MachineValidationError(
                            f"label resolves past the end (index {idx})"
                        )
                new.append(val)
            resolved.append((op, tuple(new)))
        return Machine(tuple(resolved), self._next_reg, name=self.name)


def inline_program(
    builder: ProgramBuilder,
    machine: Machine,
    *,
    prefix: str,
    reg_of: Callable[[int], int] | None = None,
    on_query: Callable[[ProgramBuilder, int, int], None] | None = None,
    on_halt: Callable[[ProgramBuilder, int], None] | None = None,
) -> None:
    """Emit ``machine``'s program into ``builder`` with remapped labels.

    ``on_query``/``on_halt`` replace the corresponding instructions and are
    responsible for emitting the oracle interaction or terminal control.
    """
    reg_of = reg_of or (lambda r: r)
    for idx, (op, args) in enumerate(machine.instructions):
        builder.mark(f"{prefix}{idx}")
        if op == "QUERY" and on_query is not None:
            on_query(builder, reg_of(args[0]), reg_of(args[1]))
            continue
        if op == "HALT" and on_halt is not None:
            on_halt(builder, reg_of(args[0]))
            continue
        new_args = []
        for kind, val in zip(_SIGS[op], args):
            if kind == "reg":
                new_args.append(reg_of(val))
            elif kind == "lbl":
                new_args.append(f"{prefix}{val}")
            else:
                new_args.append(val)
        builder.emit(op, *new_args)


# --------------------------------------------------------------------------
# Machine text format


def parse_machine_text(source: str, name: str = "machine") -> Machine:
    """Parse the one-instruction-per-line format with ``;`` comments and
    ``label:`` lines; round-trips through :func:`pretty_print`."""
    labels: dict[str, int] = {}
    pending: list[tuple[str, int]] = []
    raw: list[tuple[str, list[str], int]] = []
    for lineno, line in enumerate(source.splitlines(), 1):
        code = line.split(";", 1)[0].strip()
        if not code:
            continue
        if code.endswith(":"):
            lbl = code[:-1].strip()
            if not lbl or " " in lbl:
                raise MachineParseError(f"bad label {code!r}", lineno)
            if lbl in labels or any(l == lbl for l, _ in pending):
                raise MachineParseError(f"duplicate label {lbl!r}", lineno)
            pending.append((lbl, lineno))
            continue
        toks = code.split()
        raw.append((toks[0], toks[1:], lineno))
        for lbl, _ in pending:
            labels[lbl] = len(raw) - 1
        pending.clear()
    if pending:
        raise MachineParseError(
            f"label {pending[0][0]!r} points past the end", pending[0][1]
        )
    if not raw:
        raise MachineParseError("empty program", 1)

    instrs: list[Instruction] = []
    max_reg = 0
    for op, operands, lineno in raw:
        sig = _SIGS.get(op)
        if sig is None:
            raise MachineParseError(f"unknown opcode {op!r}", lineno)
        if op == "CONST" and len(operands) == 1:
            operands = operands + [""]  # empty literal: register keeps eps
        if len(operands) != len(sig):
            raise MachineParseError(
                f"{op} takes {len(sig)} operands, got {len(operands)}", lineno
            )
        args = []
        for kind, tok in zip(sig, operands):
            if kind == "reg":
                if not (len(tok) > 1 and tok[0] == "r" and tok[1:].isdigit()):
                    raise MachineParseError(f"bad register {tok!r}", lineno)
                r = int(tok[1:])
                max_reg = max(max_reg, r)
                args.append(r)
            elif kind == "lbl":
                if tok not in labels:
                    raise MachineParseError(f"undefined label {tok!r}", lineno)
                args.append(labels[tok])
            elif kind == "lit":
                if tok.count("0") + tok.count("1") != len(tok):
                    raise MachineParseError(f"bad literal {tok!r}", lineno)
                args.append(tok)
            else:  # bit
                if tok not in ("0", "1"):
                    raise MachineParseError(f"bad bit {tok!r}", lineno)
                args.append(tok)
        instrs.append((op, tuple(args)))
    return Machine(tuple(instrs), max_reg + 1, name=name)


def pretty_print(machine: Machine) -> str:
    """Canonical text for a machine; reparses to an identical program."""
    targets = set()
    for op, args in machine.instructions:
        for kind, val in zip(_SIGS[op], args):
            if kind == "lbl":
                targets.add(val)
    lines = [f"; {machine.name}"]
    for idx, (op, args) in enumerate(machine.instructions):
        if idx in targets:
            lines.append(f"L{idx}:")
        rendered = []
        for kind, val in zip(_SIGS[op], args):
            if kind == "reg":
                rendered.append(f"r{val}")
            elif kind == "lbl":
                rendered.append(f"L{val}")
            elif kind == "lit":
                if val:
                    rendered.append(val)
            else:
                rendered.append(val)
        lines.append(" ".join([op] + rendered))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Interpreter


@dataclass(frozen=True)
class Trace:
    """Complete record of one run.

    ``events`` holds (step index, query size, answer size) per query, with
    strictly increasing step indices; ``qa`` keeps the actual query/answer
    strings so a run can be replayed against a table built from it (the
    oracle-locality device).  Serialized traces carry sizes only.
    """

    output: str
    steps: int
    input_length: int
    events: tuple[tuple[int, int, int], ...]
    qa: tuple[tuple[str, str], ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class RunMetrics:
    """Revision accounting for a trace.

    ``m`` is the maximum of the input length and every answer length;
    ``m_series`` lists (step, new maximum) breakpoints of the running
    maximum, starting at (0, input length).
    """

    steps: int
    m: int
    m_series: tuple[tuple[int, int], ...]
    lookahead_revisions: int
    length_revisions: int


def run(machine: Machine, oracle: Callable[[str], str], a: str, fuel: int):
    """Execute ``machine`` on oracle and input; returns (output, trace).

    Raises :class:`FuelExhaustedError` with the partial trace if the run
    does not halt within ``fuel`` steps.
    """
    if fuel < 1:
        raise ValueError("fuel must be at least 1")
    check_bits(a)
    code = machine._code
    limit = len(code)
    regs = [""] * machine.register_count
    regs[0] = a
    n_in = len(a)
    steps = 0
    events: list[tuple[int, int, int]] = []
    qa: list[tuple[str, str]] = []
    pc = 0

    def partial() -> Trace:
        return Trace("", steps, n_in, tuple(events), tuple(qa))

    while True:
        if pc >= limit:
            raise MachineValidationError(f"{machine.name}: execution fell off the end")
        op, x, y, z = code[pc]
        pc += 1
        if op == _OP_JZ:
            cost = 1
            if not regs[x]:
                pc = y
        elif op == _OP_DROPLAST:
            cost = 1
            regs[x] = regs[x][:-1]
        elif op == _OP_APPENDBIT:
            cost = 1
            regs[y] += x
        elif op == _OP_JMP:
            cost = 1
            pc = x
        elif op == _OP_JLE:
            s, t = regs[x], regs[y]
            ls, lt = len(s), len(t)
            cost = (ls if ls >= lt else lt) + 1
            if ls <= lt:
                pc = z
        elif op == _OP_COPY:
            s = regs[x]
            cost = len(s) + 1
            regs[y] = s
        elif op == _OP_APPEND:
            s = regs[x]
            cost = len(s) + 1
            regs[y] = regs[y] + s
        elif op == _OP_QUERY:
            q = regs[x]
            ans = oracle(q)
            if ans.count("0") + ans.count("1") != len(ans):
                raise ValueError(f"oracle returned a non-bit string on {q!r}")
            steps += 1
            if steps > fuel:
                steps -= 1
                raise FuelExhaustedError(fuel, partial())
            regs[y] = ans
            events.append((steps, len(q), len(ans)))
            qa.append((q, ans))
            continue
        elif op == _OP_TRUNC:
            s, t = regs[x], regs[y]
            ls, lt = len(s), len(t)
            cost = (ls if ls <= lt else lt) + 1
            regs[x] = s[:lt]
        elif op == _OP_LENU:
            s = regs[x]
            cost = len(s) + 1
            regs[y] = "1" * len(s)
        elif op == _OP_JPREFIX:
            s, t = regs[x], regs[y]
            ls, lt = len(s), len(t)
            cost = (ls if ls >= lt else lt) + 1
            if t.startswith(s):
                pc = z
        elif op == _OP_PAIR:
            s, t = regs[x], regs[y]
            cost = len(s) + len(t) + 1
            regs[z] = pair_encode(s, t)
        elif op == _OP_PROJ1:
            s = regs[x]
            cost = len(s) + 1
            dec = pair_decode(s)
            regs[y] = dec[0] if dec else ""
        elif op == _OP_PROJ2:
            s = regs[x]
            cost = len(s) + 1
            dec = pair_decode(s)
            regs[y] = dec[1] if dec else ""
        elif op == _OP_CONST:
            cost = len(y) + 1
            regs[x] = y
        elif op == _OP_JEQ:
            s, t = regs[x], regs[y]
            ls, lt = len(s), len(t)
            cost = (ls if ls >= lt else lt) + 1
            if s == t:
                pc = z
        elif op == _OP_FIRSTBIT:
            cost = 1
            s = regs[x]
            if s:
                pc = y if s[0] == "0" else z
        elif op == _OP_HALT:
            steps += 1
            if steps > fuel:
                steps -= 1
                raise FuelExhaustedError(fuel, partial())
            out = regs[x]
            return out, Trace(out, steps, n_in, tuple(events), tuple(qa))
        else:  # pragma: no cover - opcodes are validated at construction
            raise MachineValidationError(f"bad opcode {op}")
        steps += cost
        if steps > fuel:
            steps -= cost
            raise FuelExhaustedError(fuel, partial())


def metrics(trace: Trace) -> RunMetrics:
    """Revision counters.

    A lookahead revision is a query strictly longer than every earlier
    query (the first query always counts); a length revision is an answer
    strictly longer than the input and every earlier answer.
    """
    max_q = -1
    lookahead = 0
    max_ans = -1
    length_rev = 0
    n_in = trace.input_length
    series = [(0, n_in)]
    cur = n_in
    for step, qsize, asize in trace.events:
        if qsize > max_q:
            lookahead += 1
            max_q = qsize
        if asize > n_in and asize > max_ans:
            length_rev += 1
        if asize > max_ans:
            max_ans = asize
        if asize > cur:
            series.append((step, asize))
            cur = asize
    return RunMetrics(
        steps=trace.steps,
        m=cur,
        m_series=tuple(series),
        lookahead_revisions=lookahead,
        length_revisions=length_rev,
    )


def check_step_count_plain(trace: Trace, p: Callable[[int], int]) -> bool:
    """steps <= p(m) with m the max of input length and answer lengths."""
    return trace.steps <= p(metrics(trace).m)


def check_step_count_ks(trace: Trace, p: Callable[[int], int]) -> bool:
    """Prefix-wise check: k <= p(m_k) for every 1 <= k <= steps.

    ``m_k`` is the running maximum after k steps, so the check can reject
    budget overruns before a run finishes.  Only the last step of each
    constant segment of the running maximum needs testing.
    """
    m = metrics(trace)
    series = m.m_series
    for i, (start, value) in enumerate(series):
        k_last = series[i + 1][0] - 1 if i + 1 < len(series) else trace.steps
        if k_last > p(value):
            return False
    return True


# --------------------------------------------------------------------------
# Exact and brute-force analyses for finite tables


def oracle_size(
    phi: FiniteTable, n: int, *, enumeration_cap: int = DEFAULT_ENUMERATION_CAP
) -> int:
    """Exact size function: max over all |a| <= n of |phi(a)|.

    Deliberately enumerates all 2^(n+1)-1 strings; no feasible general
    algorithm exists, so large ``n`` is refused by the cap.
    """
    if not isinstance(phi, FiniteTable):
        raise TypeError("exact size functions exist only for finite tables")
    if n < 0:
        raise ValueError("size-function argument must be nonnegative")
    if n > enumeration_cap:
        raise EnumerationCapError(
            f"refusing to enumerate 2^{n + 1} strings; cap is {enumeration_cap}"
        )
    best = 0
    for length in range(n + 1):
        for tup in product("01", repeat=length):
            v = len(phi("".join(tup)))
            if v > best:
                best = v
    return best


def table_size_function(phi: FiniteTable) -> Callable[[int], int]:
    """The same size function as :func:`oracle_size`, without enumeration.

    This is the fast carrier used when second-order bounds must be
    evaluated at arguments far beyond the enumeration cap; it exploits the
    table structure (the default answer is reachable at the first length
    whose strings the entries do not exhaust) and agrees with
    :func:`oracle_size` wherever both are defined.
    """
    if not isinstance(phi, FiniteTable):
        raise TypeError("exact size functions exist only for finite tables")
    per_len_count: dict[int, int] = {}
    for k in phi.entries:
        per_len_count[len(k)] = per_len_count.get(len(k), 0) + 1
    default_at = 0
    while per_len_count.get(default_at, 0) >= 2**default_at:
        default_at += 1
    key_lens = sorted({len(k) for k in phi.entries})
    prefix_max: list[tuple[int, int]] = []
    best = 0
    for length in key_lens:
        vmax = max(len(v) for k, v in phi.entries.items() if len(k) == length)
        best = max(best, vmax)
        prefix_max.append((length, best))
    default_len = len(phi.default)

    def size(n: int) -> int:
        if n < 0:
            raise ValueError("size-function argument must be nonnegative")
        out = default_len if n >= default_at else 0
        for length, vmax in prefix_max:
            if length > n:
                break
            if vmax > out:
                out = vmax
        return out

    return size


class _UnknownQuery(Exception):
    def __init__(self, query: str):
        self.query = query


class _ProbeOracle:
    """Answers from a partial table; unknown queries abort the run so the
    explorer can branch over every admissible answer."""

    __slots__ = ("table",)

    def __init__(self, table: dict[str, str]):
        self.table = table

    def __call__(self, q: str) -> str:
        try:
            return self.table[q]
        except KeyError:
            raise _UnknownQuery(q) from None


def brute_force_step_count(
    machine: Machine, n: int, fuel: int, *, branch_cap: int = 4
) -> int:
    """Max steps over all inputs |a| <= n and all oracles whose answers all
    have length <= n (the compact family with constant size bound n).

    Explores a lazily built table that branches over every answer of length
    <= n at each new query, so the result exactly dominates every concrete
    run in that family.  Branching is 2^(n+1)-1 per query; ``n`` above the
    cap is refused.  Fuel exhaustion on any branch propagates (the machine
    may not be total).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > branch_cap:
        raise EnumerationCapError(
            f"refusing branching factor 2^{n + 1} - 1; cap is {branch_cap}"
        )
    answers = ["".join(t) for L in range(n + 1) for t in product("01", repeat=L)]
    best = 0
    for a in answers:  # inputs range over the same family of short strings
        pending: list[dict[str, str]] = [{}]
        while pending:
            table = pending.pop()
            try:
                _, trace = run(machine, _ProbeOracle(table), a, fuel)
            except _UnknownQuery as e:
                pending.extend({**table, e.query: ans} for ans in answers)
            else:
                if trace.steps > best:
                    best = trace.steps
    return best


def table_from_trace(trace: Trace, default: str = "") -> FiniteTable:
    """Finite table agreeing with every query of the run (locality device)."""
    entries: dict[str, str] = {}
    for q, ans in trace.qa:
        if entries.setdefault(q, ans) != ans:
            raise ValueError("trace answers are inconsistent; not a function")
    return FiniteTable(entries=entries, default=default)


def trace_to_json(trace: Trace) -> dict:
    m = metrics(trace)
    return {
        "steps": trace.steps,
        "input_length": trace.input_length,
        "output": trace.output,
        "events": [
            {"step": s, "query_size": q, "answer_size": a} for s, q, a in trace.events
        ],
        "lookahead_revisions": m.lookahead_revisions,
        "length_revisions": m.length_revisions,
    }


def dump_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(trace_to_json(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")
