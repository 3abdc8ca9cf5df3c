"""Workbench for second-order complexity experiments.

Bit strings are plain Python ``str`` values over "0"/"1".  The package
provides an instrumented interpreter for a cost-annotated oracle-machine
IR (`typetwo.otm`), second-order polynomials and derived bounds
(`typetwo.sopoly`), a library of operator machines with pure references
(`typetwo.operators`), machine-to-machine transformations and adversarial
oracle builders (`typetwo.transforms`), and a simply-typed lambda calculus
over operator constants (`typetwo.lam`).
"""

__version__ = "0.1.0"

from .strings import (
    truncate,
    is_prefix,
    tuple_encode,
    tuple_project,
    encode_hash_alphabet,
    decode_hash_alphabet,
)
from .sopoly import (
    Zero,
    One,
    N,
    Plus,
    Times,
    Apply,
    UnaryPolynomial,
    eval_sop,
    step_count_from_bound,
    mpt_time_bound,
    composition_bound,
)
from .otm import (
    FiniteTable,
    Builtin,
    Composite,
    Machine,
    Trace,
    RunMetrics,
    run,
    metrics,
    check_step_count_plain,
    check_step_count_ks,
    oracle_size,
    brute_force_step_count,
    parse_machine_text,
    pretty_print,
)

__all__ = [
    "truncate",
    "is_prefix",
    "tuple_encode",
    "tuple_project",
    "encode_hash_alphabet",
    "decode_hash_alphabet",
    "Zero",
    "One",
    "N",
    "Plus",
    "Times",
    "Apply",
    "UnaryPolynomial",
    "eval_sop",
    "step_count_from_bound",
    "mpt_time_bound",
    "composition_bound",
    "FiniteTable",
    "Builtin",
    "Composite",
    "Machine",
    "Trace",
    "RunMetrics",
    "run",
    "metrics",
    "check_step_count_plain",
    "check_step_count_ks",
    "oracle_size",
    "brute_force_step_count",
    "parse_machine_text",
    "pretty_print",
]
