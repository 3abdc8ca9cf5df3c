import json

import pytest
from hypothesis import given, strategies as st

from conftest import FUEL, naive_revision_counts, rand_bits, rand_table
from typetwo.otm import (
    Builtin,
    EnumerationCapError,
    FiniteTable,
    FuelExhaustedError,
    MachineParseError,
    MachineValidationError,
    Trace,
    brute_force_step_count,
    builtin_oracle,
    check_step_count_ks,
    check_step_count_plain,
    metrics,
    oracle_from_json,
    oracle_size,
    oracle_to_json,
    parse_machine_text,
    pretty_print,
    run,
    table_from_trace,
    table_size_function,
    trace_to_json,
)
from typetwo.sopoly import UnaryPolynomial


def mk_trace(events, input_length, steps=None):
    steps = steps if steps is not None else (events[-1][0] + 1 if events else 1)
    return Trace("", steps, input_length, tuple(events))


# --------------------------------------------------------------------------
# parsing and validation


def test_parse_single_halt():
    m = parse_machine_text("HALT r0")
    assert len(m.instructions) == 1 and m.register_count == 1


def test_parse_errors_carry_line_numbers():
    with pytest.raises(MachineParseError) as e:
        parse_machine_text("JMP nowhere")
    assert "line 1" in str(e.value) and "nowhere" in str(e.value)
    with pytest.raises(MachineParseError) as e:
        parse_machine_text("HALT r0\nFLY r1")
    assert "line 2" in str(e.value)
    with pytest.raises(MachineParseError):
        parse_machine_text("HALT x3")
    with pytest.raises(MachineParseError):
        parse_machine_text("CONST r0 012")
    with pytest.raises(MachineParseError):
        parse_machine_text("HALT r0\ntrailing:")


def test_comments_and_labels():
    src = """
    ; a looping machine
    COPY r0 r1
    top:            ; loop head
    JZ r1 end
    DROPLAST r1
    JMP top
    end:
    HALT r1
    """
    m = parse_machine_text(src)
    out, tr = run(m, builtin_oracle("empty"), "111", 100)
    assert out == ""


def test_pretty_print_roundtrip():
    src = "COPY r0 r1\nL:\nJZ r1 E\nDROPLAST r1\nJMP L\nE:\nHALT r1"
    m = parse_machine_text(src)
    assert parse_machine_text(pretty_print(m)) == m


def test_validation_rejects_bad_targets():
    with pytest.raises(MachineValidationError):
        from typetwo.otm import Machine

        Machine((("JMP", (5,)), ("HALT", (0,))), 1)
    with pytest.raises(MachineValidationError):
        from typetwo.otm import Machine

        Machine((("HALT", (3,)),), 1)


def test_fell_off_end():
    m = parse_machine_text("COPY r0 r1")
    with pytest.raises(MachineValidationError):
        run(m, builtin_oracle("empty"), "1", 100)


# --------------------------------------------------------------------------
# interpreter semantics and costs


def test_identity_run():
    m = parse_machine_text("HALT r0")
    out, tr = run(m, builtin_oracle("empty"), "101", 100)
    assert out == "101" and tr.steps == 1 and tr.events == ()


def test_query_run_costs():
    m = parse_machine_text("QUERY r0 r1\nHALT r1")
    phi = FiniteTable({"101": "11"}, "")
    out, tr = run(m, phi, "101", 100)
    assert out == "11" and tr.steps == 2
    assert tr.events == ((1, 3, 2),)


def test_copy_answer_costs():
    m = parse_machine_text("QUERY r0 r1\nCOPY r1 r2\nHALT r2")
    phi = FiniteTable({"101": "11"}, "")
    out, tr = run(m, phi, "101", 100)
    assert tr.steps == 1 + (2 + 1) + 1


def test_firstbit_and_jeq():
    src = """
    FIRSTBIT r0 zero one
    CONST r1
    HALT r1
    zero:
    CONST r1 0
    HALT r1
    one:
    CONST r1 1
    HALT r1
    """
    m = parse_machine_text(src)
    assert run(m, builtin_oracle("empty"), "011", 100)[0] == "0"
    assert run(m, builtin_oracle("empty"), "10", 100)[0] == "1"
    assert run(m, builtin_oracle("empty"), "", 100)[0] == ""
    src2 = "JEQ r0 r1 eq\nCONST r2 0\nHALT r2\neq:\nCONST r2 1\nHALT r2"
    m2 = parse_machine_text(src2)
    assert run(m2, builtin_oracle("empty"), "", 100)[0] == "1"  # r1 starts empty
    assert run(m2, builtin_oracle("empty"), "0", 100)[0] == "0"


def test_jprefix_and_trunc_and_pair():
    src = """
    CONST r1 11
    JPREFIX r1 r0 yes
    CONST r2 0
    HALT r2
    yes:
    PAIR r1 r0 r3
    TRUNC r3 r0
    HALT r3
    """
    m = parse_machine_text(src)
    out, _ = run(m, builtin_oracle("empty"), "110", 100)
    assert out == ("0101" + "11" + "110")[:3]
    assert run(m, builtin_oracle("empty"), "011", 100)[0] == "0"


def test_fuel_exhaustion_partial_trace():
    m = parse_machine_text("top:\nQUERY r0 r1\nJMP top")
    with pytest.raises(FuelExhaustedError) as e:
        run(m, builtin_oracle("empty"), "1", 17)
    assert e.value.trace.steps <= 17
    assert e.value.trace.events
    with pytest.raises(ValueError):
        run(m, builtin_oracle("empty"), "1", 0)


def test_oracle_answers_validated():
    bad = Builtin("bad", lambda q: "2")
    m = parse_machine_text("QUERY r0 r1\nHALT r1")
    with pytest.raises(ValueError):
        run(m, bad, "1", 100)


def test_determinism(rng):
    from typetwo.operators import build_R_machine

    m = build_R_machine()
    phi = rand_table(rng)
    a = rand_bits(rng, 16)
    r1 = run(m, phi, a, FUEL)
    r2 = run(m, phi, a, FUEL)
    assert r1 == r2
    assert json.dumps(trace_to_json(r1[1])) == json.dumps(trace_to_json(r2[1]))


# --------------------------------------------------------------------------
# metrics and step-count checks


def test_metrics_examples():
    m = metrics(mk_trace([], 4))
    assert m.lookahead_revisions == 0 and m.length_revisions == 0 and m.m == 4

    ev = [(1, 2, 1), (2, 2, 4), (3, 3, 2)]
    m = metrics(mk_trace(ev, 2))
    assert m.lookahead_revisions == 2
    assert m.length_revisions == 1

    ev = [(1, 5, 0), (2, 1, 0), (3, 1, 0)]
    m = metrics(mk_trace(ev, 9))
    assert m.lookahead_revisions == 1 and m.length_revisions == 0


def test_m_series():
    ev = [(2, 1, 3), (5, 1, 2), (9, 1, 7)]
    m = metrics(mk_trace(ev, 1, steps=12))
    assert m.m_series == ((0, 1), (2, 3), (9, 7))
    assert m.m == 7


@given(
    st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), max_size=10),
    st.integers(0, 12),
)
def test_metrics_agree_with_naive_reference(sizes, input_length):
    events = [(i + 1, q, a) for i, (q, a) in enumerate(sizes)]
    m = metrics(mk_trace(events, input_length, steps=len(events) + 1))
    assert (m.lookahead_revisions, m.length_revisions) == naive_revision_counts(
        events, input_length
    )


def test_plain_check_examples():
    t = mk_trace([(1, 1, 3)], 2, steps=5)
    assert check_step_count_plain(t, UnaryPolynomial((0, 0, 1)))
    assert not check_step_count_plain(t, UnaryPolynomial((0, 1)))


def test_ks_check_catches_late_answers():
    # all answers arrive at step 9; running max is 1 before that
    t = mk_trace([(9, 1, 10)], 1, steps=10)
    p = UnaryPolynomial((0, 0, 1))
    assert check_step_count_plain(t, p)
    assert not check_step_count_ks(t, p)


def test_ks_no_queries():
    t = mk_trace([], 6, steps=5)
    assert check_step_count_ks(t, UnaryPolynomial((0, 1)))


# --------------------------------------------------------------------------
# oracle analyses


def test_oracle_size_examples():
    assert oracle_size(FiniteTable({"0": "111"}, ""), 1) == 3
    assert oracle_size(FiniteTable({}, ""), 4) == 0
    phi = FiniteTable({"00": "1111"}, "1")
    assert oracle_size(phi, 1) == 1
    assert oracle_size(phi, 2) == 4


def test_oracle_size_cap():
    with pytest.raises(EnumerationCapError) as e:
        oracle_size(FiniteTable({}, ""), 25)
    assert "cap" in str(e.value)
    with pytest.raises(TypeError):
        oracle_size(builtin_oracle("empty"), 2)


def test_table_size_function_matches_enumeration(rng):
    for _ in range(40):
        phi = rand_table(rng, n_entries=rng.randint(0, 8), key_len=5, val_len=7)
        fast = table_size_function(phi)
        for n in range(8):
            assert fast(n) == oracle_size(phi, n), (phi, n)
    # entries can exhaust short lengths, hiding the default
    phi = FiniteTable({"": "1", "0": "11", "1": "111"}, "1111")
    fast = table_size_function(phi)
    assert fast(0) == 1 and fast(1) == 3 and fast(2) == 4
    assert [oracle_size(phi, n) for n in range(3)] == [1, 3, 4]


def test_brute_force_examples():
    assert brute_force_step_count(parse_machine_text("HALT r0"), 3, 1000) == 1
    assert brute_force_step_count(parse_machine_text("QUERY r0 r1\nHALT r1"), 3, 1000) == 2
    m = parse_machine_text("QUERY r0 r1\nCOPY r1 r2\nHALT r2")
    for n in range(4):
        assert brute_force_step_count(m, n, 1000) == n + 3


def test_brute_force_cap_and_fuel():
    with pytest.raises(EnumerationCapError):
        brute_force_step_count(parse_machine_text("HALT r0"), 9, 1000)
    loop = parse_machine_text("top:\nJMP top\nHALT r0")
    with pytest.raises(FuelExhaustedError):
        brute_force_step_count(loop, 1, 50)


def test_brute_force_dominates_concrete_runs(rng):
    m = parse_machine_text("QUERY r0 r1\nQUERY r1 r2\nCOPY r2 r3\nHALT r3")
    n = 2
    bound = brute_force_step_count(m, n, 1000)
    for _ in range(200):
        phi = rand_table(rng, n_entries=4, key_len=n, val_len=n, default_len=rng.randint(0, n))
        a = rand_bits(rng, n)
        _, tr = run(m, phi, a, 1000)
        assert tr.steps <= bound


# --------------------------------------------------------------------------
# locality and serialization


def test_locality_replay(rng):
    from typetwo.operators import build_prefix_max_machine

    m = build_prefix_max_machine()
    phi = rand_table(rng)
    a = rand_bits(rng, 10)
    out, tr = run(m, phi, a, FUEL)
    replay_oracle = table_from_trace(tr)
    out2, tr2 = run(m, replay_oracle, a, FUEL)
    assert out2 == out and tr2 == tr


def test_locality_is_insensitive_to_unqueried_strings(rng):
    # any oracle agreeing on the queried strings reproduces the run, no
    # matter how wildly it behaves elsewhere
    from typetwo.operators import LIBRARY

    from typetwo.strings import tuple_encode

    for name in ("R", "filr", "zeromax"):
        machine = LIBRARY[name].build()
        for _ in range(25):
            phi = rand_table(rng)
            if name == "R":
                a = tuple_encode([rand_bits(rng, 6) for _ in range(3)])
            else:
                a = rand_bits(rng, 8)
            out, tr = run(machine, phi, a, FUEL)
            queried = {q for q, _ in tr.qa}
            agreeing = dict(table_from_trace(tr).entries)
            for _ in range(6):  # junk on fresh, unqueried strings
                junk = rand_bits(rng, 14)
                if junk not in queried:
                    agreeing[junk] = rand_bits(rng, 20)
            noisy = Builtin(
                "noisy twin",
                lambda q, _t=dict(agreeing), _r=rng: _t.get(q, "1" * 17),
            )
            out2, tr2 = run(machine, noisy, a, FUEL)
            assert (out2, tr2.events, tr2.steps) == (out, tr.events, tr.steps)


def test_oracle_json_roundtrip():
    phi = FiniteTable({"0110": "11"}, "1")
    assert oracle_from_json(oracle_to_json(phi)) == phi
    b = builtin_oracle("doubling")
    assert oracle_to_json(b) == {"builtin": "doubling"}
    assert oracle_from_json({"builtin": "doubling"})("01") == "0101"
    with pytest.raises(ValueError):
        oracle_from_json({"builtin": "nope"})


def test_trace_json_fields():
    m = parse_machine_text("QUERY r0 r1\nHALT r1")
    _, tr = run(m, FiniteTable({"1": "00"}, ""), "1", 100)
    d = trace_to_json(tr)
    assert set(d) == {
        "steps",
        "input_length",
        "output",
        "events",
        "lookahead_revisions",
        "length_revisions",
    }
    assert d["events"] == [{"step": 1, "query_size": 1, "answer_size": 2}]
