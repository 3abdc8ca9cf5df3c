import random

import pytest

from conftest import FUEL, rand_bits, rand_table
from typetwo.lam import (
    GROUND,
    Abs,
    App,
    Const,
    TermParseError,
    TypeCheckError,
    UnboundVariableError,
    Var,
    arrow,
    beta_eta_normalize,
    bridge_term,
    constant,
    eval_term,
    free_vars,
    parse_term,
    section,
    type_level,
    type_of,
)
from typetwo.operators import (
    build_filr_machine,
    build_R_machine,
    prefix_max_ref,
    rec_prime_ref,
    rec_ref,
)
from typetwo.otm import run
from typetwo.strings import pair_encode, tuple_encode


def curried(phi2):
    return lambda s: lambda t: phi2(s, t)


# --------------------------------------------------------------------------
# types and terms


def test_type_level_examples():
    assert type_level(GROUND) == 0
    assert type_level(arrow(GROUND, GROUND)) == 1
    assert type_level(arrow(arrow(GROUND, GROUND), GROUND)) == 2
    assert type_level(arrow(GROUND, GROUND, GROUND)) == 1


def test_constants_are_at_most_level_two():
    with pytest.raises(TypeCheckError):
        Const("bad", arrow(arrow(arrow(GROUND, GROUND), GROUND), GROUND))


def test_type_of_application_checks():
    ident = parse_term(r"\x:0. x")
    assert type_of(ident) == arrow(GROUND, GROUND)
    with pytest.raises(TypeCheckError):
        type_of(App(ident, bridge_term("operator_R")))
    with pytest.raises(TypeCheckError):
        type_of(App(constant("empty"), constant("empty")))


def test_eval_basic():
    ident = parse_term(r"\x:0. x")
    assert eval_term(ident)("101") == "101"
    assert eval_term(bridge_term("const_K"))("0") == "01"
    with pytest.raises(UnboundVariableError):
        eval_term(Var("x", GROUND), {})
    with pytest.raises(TypeCheckError):
        eval_term(Const("mystery", GROUND))


# --------------------------------------------------------------------------
# normalization


def test_beta_example():
    t = parse_term(r"(\x:0. x) #empty")
    assert beta_eta_normalize(t) == constant("empty")


def test_eta_example():
    f = Var("f", arrow(GROUND, GROUND))
    x = Var("x", GROUND)
    assert beta_eta_normalize(Abs(f, Abs(x, App(f, x)))) == Abs(f, f)


def test_capture_avoiding_substitution():
    # (\x:0. \y:0. pair x y) y  must not capture the free y
    y_free = Var("y", GROUND)
    x = Var("x", GROUND)
    y = Var("y", GROUND)
    inner = Abs(x, Abs(y, App(App(constant("pair"), x), y)))
    t = App(inner, y_free)
    nt = beta_eta_normalize(t)
    assert free_vars(nt) == {y_free}
    got = eval_term(nt, {y_free: "11"})("0")
    assert got == pair_encode("11", "0")


def _random_term(rng: random.Random, size: int):
    """Random closed ground-type term over a few constants and redexes."""
    if size <= 1:
        return Const(f"lit", GROUND, rand_bits(rng, 4)) if rng.random() < 0.7 else constant("empty")
    shape = rng.random()
    if shape < 0.45:
        # beta redex at ground type
        v = Var(f"v{rng.randrange(4)}", GROUND)
        body = _random_term_with_var(rng, size - 2, v)
        return App(Abs(v, body), _random_term(rng, size // 2))
    if shape < 0.8:
        op = rng.choice(["pair", "shorter", "trunc_to"])
        return App(
            App(constant(op), _random_term(rng, size // 2)),
            _random_term(rng, size // 2),
        )
    return App(
        rng.choice([constant("proj1"), constant("proj2"), constant("len_unary")]),
        _random_term(rng, size - 1),
    )


def _random_term_with_var(rng, size, v):
    t = _random_term(rng, size)
    # splice the variable into a random leaf position via pairing
    if rng.random() < 0.7:
        return App(App(constant("shorter"), v), t)
    return t


def test_normalization_preserves_eval_on_random_terms(rng):
    checked = 0
    for _ in range(220):
        t = _random_term(rng, rng.randint(1, 12))
        ty = type_of(t)
        nt = beta_eta_normalize(t)
        assert type_of(nt) == ty  # subject reduction
        if ty == GROUND and not free_vars(t):
            assert eval_term(nt) == eval_term(t)
            checked += 1
    assert checked >= 150


# --------------------------------------------------------------------------
# bridge terms


def test_rec_via_recprime_matches_rec(rng):
    term = eval_term(bridge_term("rec_via_recprime"))
    for _ in range(200):
        phi = rand_table(rng)
        phi2 = lambda s, t: phi(pair_encode(s, t))
        a, b, c = (rand_bits(rng, 10) for _ in range(3))
        assert term(curried(phi2))(a)(b)(c) == rec_ref(phi2, a, b, c)


def test_recprime_via_rec_matches_recprime(rng):
    term = eval_term(bridge_term("recprime_via_rec"))
    for _ in range(200):
        phi = rand_table(rng)
        psi = rand_table(rng)
        phi2 = lambda s, t: phi(pair_encode(s, t))
        a, c = rand_bits(rng, 10), rand_bits(rng, 10)
        assert term(curried(phi2))(a)(psi)(c) == rec_prime_ref(phi2, a, psi, c)


def test_operator_R_matches_machine(rng):
    term = eval_term(bridge_term("operator_R"))
    machine = build_R_machine()
    for _ in range(200):
        phi = rand_table(rng)
        x = tuple_encode([rand_bits(rng, 10) for _ in range(3)])
        want, _ = run(machine, phi, x, FUEL)
        assert term(phi)(x) == want


def test_rec_symbol_replacement_matches_rec(rng):
    term = eval_term(bridge_term("rec_symbol_replacement"))
    for _ in range(200):
        phi = rand_table(rng)
        phi2 = lambda s, t: phi(pair_encode(s, t))
        a, b, c = (rand_bits(rng, 10) for _ in range(3))
        assert term(curried(phi2))(a)(b)(c) == rec_ref(phi2, a, b, c)


def test_argmax_via_T_matches_prefix_max(rng):
    term = eval_term(bridge_term("argmax_via_T"))
    for _ in range(200):
        phi = rand_table(rng)
        a = rand_bits(rng, 10)
        assert term(phi)(a) == prefix_max_ref(phi, a)


def test_filr_via_rec_matches_machine(rng):
    term = eval_term(bridge_term("filr_via_rec"))
    machine = build_filr_machine()
    for _ in range(200):
        phi = rand_table(rng)
        a = rand_bits(rng, 10)
        want, _ = run(machine, phi, a, FUEL)
        assert term(phi)(a) == want


def test_tupler_bridge():
    term = eval_term(bridge_term("tupler_T"))
    phi = lambda s: "101" if s == "" else ""
    assert term(phi)("0") == pair_encode("101", "0")


def test_unknown_bridge():
    with pytest.raises(ValueError):
        bridge_term("nope")


# --------------------------------------------------------------------------
# sections and parsing


def test_section_filters_by_level():
    ident = parse_term(r"\x:0. x")
    r_op = bridge_term("operator_R")
    ones = section([ident], 1)
    assert len(ones) == 1 and ones[0]("11") == "11"
    assert section([r_op], 1) == []
    twos = section([r_op, bridge_term("argmax_via_T"), ident], 2)
    assert len(twos) == 3
    with pytest.raises(TypeCheckError):
        section([Var("x", GROUND)], 1)
    with pytest.raises(ValueError):
        section([], 3)


def test_parse_term_surface_syntax():
    t = parse_term(r"\f:0->0. \x:0. f (f x)")
    twice = eval_term(t)
    assert twice(lambda s: s + "1")("") == "11"
    t2 = parse_term(r"(\x:0. #len_unary x) (#pair #empty #empty)")
    assert eval_term(t2) == "11"
    with pytest.raises(TermParseError):
        parse_term(r"\x:0. y")
    with pytest.raises(TermParseError):
        parse_term("#nope")
    with pytest.raises(TermParseError):
        parse_term(r"\x:?. x")
