"""Command-line surface: run machines with bound checks, factorize, build
adversary oracles, and evaluate lambda terms.

Exit codes: 0 success, 1 usage or parse error, 2 budget violation (fuel
exhausted), 3 internal invariant breach.  Reports are JSON on stdout;
machine and term sources stay human-readable text.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from .lam import (
    BRIDGE_NAMES,
    GROUND,
    Arrow,
    TermParseError,
    bridge_term,
    eval_term,
    parse_term,
    type_of,
    type_level,
)
from .operators import LIBRARY, machine_by_name
from .otm import (
    DEFAULT_FUEL,
    BUILTIN_ORACLES,
    FiniteTable,
    FuelExhaustedError,
    Machine,
    MachineParseError,
    builtin_oracle,
    check_step_count_ks,
    check_step_count_plain,
    dump_trace,
    metrics,
    oracle_from_json,
    oracle_to_json,
    parse_machine_text,
    pretty_print,
    run,
    table_from_trace,
    table_size_function,
)
from .sopoly import SopParseError, eval_sop, parse_sop, parse_unary_polynomial
from .strings import check_bits, tuple_encode
from .transforms import (
    budgeted_compose,
    factor_oracle,
    factorize,
    filr_adversary,
    inline_compose,
    iteration_adversary,
    selfcomp_adversary,
)

__all__ = ["main"]


class UsageError(ValueError):
    pass


def _resolve_machine(spec: str) -> tuple[str, Machine]:
    if spec in LIBRARY:
        return spec, machine_by_name(spec)
    path = Path(spec)
    if path.is_file():
        return path.name, parse_machine_text(path.read_text(), name=path.stem)
    raise UsageError(
        f"unknown machine {spec!r}: not a library name ({', '.join(LIBRARY)}) or file"
    )


def _resolve_oracle(spec: str):
    path = Path(spec)
    if path.is_file():
        with open(path) as fh:
            return {"file": str(path)}, oracle_from_json(json.load(fh))
    if spec in BUILTIN_ORACLES:
        return {"builtin": spec}, builtin_oracle(spec)
    raise UsageError(
        f"unknown oracle {spec!r}: not a file or builtin ({', '.join(BUILTIN_ORACLES)})"
    )


def _print_report(report: dict) -> None:
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_run(args) -> int:
    name, machine = _resolve_machine(args.machine)
    descriptor, oracle = _resolve_oracle(args.oracle)
    if args.input is None:
        raise UsageError("--input is required")
    check_bits(args.input)
    try:
        output, trace = run(machine, oracle, args.input, args.fuel)
    except FuelExhaustedError as e:
        m = e.trace
        _print_report(
            {
                "machine": name,
                "oracle": descriptor,
                "input": args.input,
                "error": "fuel exhausted",
                "fuel": args.fuel,
                "metrics": _metrics_json(m),
            }
        )
        return 2
    report = {
        "machine": name,
        "oracle": descriptor,
        "input": args.input,
        "output": output,
        "metrics": _metrics_json(trace),
    }
    verdicts = {}
    if args.step_count:
        p = parse_unary_polynomial(args.step_count)
        verdicts["plain"] = check_step_count_plain(trace, p)
        verdicts["ks"] = check_step_count_ks(trace, p)
    if args.sop:
        if not isinstance(oracle, FiniteTable):
            raise UsageError("--sop needs a finite-table oracle (exact size function)")
        bound = parse_sop(args.sop)
        limit = eval_sop(bound, table_size_function(oracle), len(args.input))
        verdicts["second_order"] = trace.steps <= limit
    if verdicts:
        report["verdicts"] = verdicts
    if args.trace:
        dump_trace(trace, args.trace)
        report["trace_file"] = args.trace
    _print_report(report)
    return 0


def _metrics_json(trace) -> dict:
    m = metrics(trace)
    return {
        "steps": m.steps,
        "m": m.m,
        "lookahead_revisions": m.lookahead_revisions,
        "length_revisions": m.length_revisions,
    }


def _cmd_factorize(args) -> int:
    name, machine = _resolve_machine(args.machine)
    p = parse_unary_polynomial(args.p)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pair = factorize(machine, p, args.r)
    (out_dir / "Mtilde.otm").write_text(pretty_print(pair.thrower))
    (out_dir / "N.otm").write_text(pretty_print(pair.handler))
    manifest = {
        "machine": name,
        "p": str(p),
        "r": args.r,
        "tupling": "dbl-11",
        "hash_encoding": "00/01/11",
        "seed": args.seed,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # composition smoke check against the subject on a few random tables
    rng = random.Random(args.seed)
    cases = 0
    for _ in range(args.check_cases):
        table = FiniteTable(
            {
                _rand_bits(rng, 8): _rand_bits(rng, 8)
                for _ in range(rng.randint(0, 6))
            },
            _rand_bits(rng, 3),
        )
        if name in ("R", "S", "T"):
            x = tuple_encode([_rand_bits(rng, 6) for _ in range(3)])
        else:
            x = _rand_bits(rng, 8)
        want, _ = run(machine, table, x, args.fuel)
        got, _ = run(pair.handler, factor_oracle(pair.thrower, table, args.fuel), x, args.fuel)
        if got != want:
            _print_report({"manifest": manifest, "composition_check": "failed", "input": x})
            return 3
        cases += 1
    _print_report(
        {
            "manifest": manifest,
            "files": ["Mtilde.otm", "N.otm", "manifest.json"],
            "composition_check": "passed",
            "cases": cases,
        }
    )
    return 0


def _rand_bits(rng: random.Random, max_len: int) -> str:
    return "".join(rng.choice("01") for _ in range(rng.randint(0, max_len)))


def _write_oracle(path: Path, oracle: FiniteTable) -> None:
    with open(path, "w") as fh:
        json.dump(oracle_to_json(oracle), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_adversary(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "iteration":
        if args.n is None:
            raise UsageError("iteration adversary needs --n")
        machine = machine_by_name("iteration")
        t = parse_unary_polynomial(args.p) if args.p else parse_unary_polynomial("4*n+5")
        runs = []
        for n in range(1, args.n + 1):
            oracle = iteration_adversary(t, n)
            _, trace = run(machine, oracle, "0" * n, args.fuel)
            table = table_from_trace(trace)
            _write_oracle(out_dir / f"oracle_iteration_{n}.json", table)
            runs.append({"n": n, "lookahead_revisions": metrics(trace).lookahead_revisions})
        report = {"kind": "iteration", "t": str(t), "runs": runs,
                  "forced": all(r["lookahead_revisions"] >= r["n"] for r in runs)}
    elif args.kind == "filr":
        if args.k is None:
            raise UsageError("filr adversary needs --k")
        machine = machine_by_name("filr")
        p = parse_unary_polynomial(args.p) if args.p else parse_unary_polynomial("n^2+2*n+1")
        family = filr_adversary(machine, p, args.k, fuel=args.fuel)
        runs = []
        for i, oracle in enumerate(family.oracles):
            _, trace = run(machine, oracle, "1" * args.k, args.fuel)
            _write_oracle(out_dir / f"oracle_filr_{i}.json", table_from_trace(trace))
            runs.append({"i": i, "lookahead_revisions": metrics(trace).lookahead_revisions})
        report = {
            "kind": "filr",
            "p": str(p),
            "m": family.m,
            "markers": list(family.strings),
            "runs": runs,
            "forced": all(r["lookahead_revisions"] >= r["i"] for r in runs),
        }
    elif args.kind == "selfcomp":
        if args.k is None:
            raise UsageError("selfcomp adversary needs --k")
        oracle = selfcomp_adversary(args.k)
        table = FiniteTable(
            {"0" * n: oracle("0" * n) for n in range(args.k + 1)}, ""
        )
        _write_oracle(out_dir / f"oracle_selfcomp_{args.k}.json", table)
        zeromax = machine_by_name("zeromax")
        selfcomp = machine_by_name("selfcomp")
        p = parse_unary_polynomial("n^2+2*n+2")
        q = parse_unary_polynomial("n+3")
        a = "0" * args.k
        _, inl = run(inline_compose(zeromax, selfcomp), table, a, args.fuel)
        _, bud = run(budgeted_compose(zeromax, p, selfcomp, q), table, a, args.fuel)
        report = {
            "kind": "selfcomp",
            "k": args.k,
            "inline_lookahead_revisions": metrics(inl).lookahead_revisions,
            "budgeted_lookahead_revisions": metrics(bud).lookahead_revisions,
        }
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown adversary kind {args.kind!r}")
    _print_report(report)
    return 0


def _cmd_lambda(args) -> int:
    if args.term in BRIDGE_NAMES:
        term = bridge_term(args.term)
        term_name = args.term
    else:
        path = Path(args.term)
        if not path.is_file():
            raise UsageError(
                f"unknown term {args.term!r}: not a bridge name "
                f"({', '.join(BRIDGE_NAMES)}) or file"
            )
        term = parse_term(path.read_text())
        term_name = path.name
    value = eval_term(term)
    ty = type_of(term)
    inputs = list(args.input or [])
    descriptor = None
    oracle = None
    if args.oracle:
        descriptor, oracle = _resolve_oracle(args.oracle)
    while isinstance(ty, Arrow):
        src = ty.src
        if src == GROUND:
            if not inputs:
                raise UsageError("term needs another --input for an argument of type 0")
            arg = inputs.pop(0)
            check_bits(arg)
            value = value(arg)
        elif type_level(src) == 1:
            if oracle is None:
                raise UsageError("term needs --oracle for a function argument")
            value = value(_adapt_oracle(oracle, src))
        else:
            raise UsageError(f"cannot supply an argument of type {src} from the CLI")
        ty = ty.dst
    if inputs:
        raise UsageError("too many --input values for this term")
    report = {"term": term_name, "value": value}
    if descriptor:
        report["oracle"] = descriptor
    _print_report(report)
    return 0


def _adapt_oracle(oracle, src):
    """Unary oracles feed n-ary function arguments through the tupling."""
    arity = 0
    t = src
    while isinstance(t, Arrow):
        arity += 1
        t = t.dst

    def curry(collected):
        if len(collected) == arity:
            if arity == 1:
                return oracle(collected[0])
            return oracle(tuple_encode(collected))
        return lambda x: curry(collected + [x])

    return curry([])


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="typetwo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a machine and report metrics")
    p_run.add_argument("--machine", required=True, help="library name or .otm file")
    p_run.add_argument("--oracle", required=True, help="JSON file or builtin name")
    p_run.add_argument("--input", help="input bit string (may be empty)")
    p_run.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p_run.add_argument("--step-count", help="plain polynomial, e.g. 'n^2+n'")
    p_run.add_argument("--sop", help="second-order polynomial, e.g. 'l(n)*l(n)+n'")
    p_run.add_argument("--trace", help="write the trace JSON here")
    p_run.set_defaults(func=_cmd_run)

    p_fac = sub.add_parser("factorize", help="split a machine into thrower + handler")
    p_fac.add_argument("--machine", required=True)
    p_fac.add_argument("--p", required=True, help="plain step-count polynomial")
    p_fac.add_argument("--r", required=True, type=int, help="lookahead revision bound")
    p_fac.add_argument("--out-dir", required=True)
    p_fac.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p_fac.add_argument("--seed", type=int, default=0)
    p_fac.add_argument("--check-cases", type=int, default=25)
    p_fac.set_defaults(func=_cmd_factorize)

    p_adv = sub.add_parser("adversary", help="build forcing oracles and report")
    p_adv.add_argument("kind", choices=["iteration", "filr", "selfcomp"])
    p_adv.add_argument("--n", type=int)
    p_adv.add_argument("--k", type=int)
    p_adv.add_argument("--p", help="step-count polynomial override")
    p_adv.add_argument("--out-dir", required=True)
    p_adv.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p_adv.add_argument("--seed", type=int, default=0)
    p_adv.set_defaults(func=_cmd_adversary)

    p_lam = sub.add_parser("lambda", help="evaluate a lambda term")
    p_lam.add_argument("--term", required=True, help="bridge name or term file")
    p_lam.add_argument("--oracle", help="JSON file or builtin name")
    p_lam.add_argument("--input", action="append", help="ground argument (repeatable)")
    p_lam.set_defaults(func=_cmd_lambda)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (MachineParseError, SopParseError, TermParseError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 1
    except FuelExhaustedError as e:
        print(f"budget violation: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - invariant breaches
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
