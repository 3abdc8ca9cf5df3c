"""Shared corpus builders and step-count fitting for the suites."""

from __future__ import annotations

import math
import random

import pytest

from typetwo.otm import FiniteTable, Trace, metrics
from typetwo.sopoly import UnaryPolynomial
from typetwo.strings import tuple_encode

FUEL = 10**7


def rand_bits(rng: random.Random, max_len: int) -> str:
    return "".join(rng.choice("01") for _ in range(rng.randint(0, max_len)))


def rand_table(
    rng: random.Random,
    n_entries: int = 6,
    key_len: int = 8,
    val_len: int = 8,
    default_len: int = 3,
) -> FiniteTable:
    return FiniteTable(
        {rand_bits(rng, key_len): rand_bits(rng, val_len) for _ in range(n_entries)},
        rand_bits(rng, default_len),
    )


def rand_tuple3(rng: random.Random, max_component: int) -> str:
    return tuple_encode([rand_bits(rng, max_component) for _ in range(3)])


def binom_poly(c: int, degree: int) -> UnaryPolynomial:
    """The polynomial c*(n+1)^degree in coefficient form."""
    coeffs = [c * math.comb(degree, k) for k in range(degree + 1)]
    return UnaryPolynomial(tuple(coeffs))


def fit_step_count(traces: list[Trace], degree: int) -> UnaryPolynomial:
    """Smallest c >= 1 with steps <= c*(n+1)^degree across the traces."""
    c = 1
    for t in traces:
        m = metrics(t).m
        c = max(c, -(-t.steps // (m + 1) ** degree))
    return binom_poly(c, degree)


def naive_revision_counts(events, input_length: int) -> tuple[int, int]:
    """Quadratic reference for the revision counters."""
    lookahead = 0
    length = 0
    for i, (_, qsize, _) in enumerate(events):
        if all(qsize > events[j][1] for j in range(i)):
            lookahead += 1
    for i, (_, _, asize) in enumerate(events):
        if asize > input_length and all(asize > events[j][2] for j in range(i)):
            length += 1
    return lookahead, length


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240811)
