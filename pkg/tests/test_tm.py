import itertools

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from tilefix.core import FormatError, InputError
from tilefix.tm import (
    TMachine, check_determinacy, corpus, decode_rows, diagram_tiles, format_machine,
    frame_completable, inject_duplicate, parse_machine, ro_copy_check, run_tm, scan_right,
)

CORPUS = corpus()


def inputs(m, max_len=4):
    for n in range(max_len + 1):
        yield from itertools.product(range(1, m.nsymbols), repeat=n)


def test_run_examples():
    assert run_tm(CORPUS["accept-now"], "101").outcome == "accept"
    assert run_tm(CORPUS["accept-now"], "101").steps == 0
    tr = run_tm(scan_right(), "111")
    assert (tr.outcome, tr.steps) == ("accept", 4)
    assert run_tm(scan_right(), "1", max_steps=0).outcome == "step-limit"
    assert run_tm(CORPUS["fall-left"], "").outcome == "space-limit"
    assert run_tm(CORPUS["even-ones"], "12").outcome == "reject"
    assert run_tm(CORPUS["shuttle"], "", max_steps=50).outcome == "step-limit"


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_run_matches_hand_simulation(name):
    m = CORPUS[name]
    table = {(q, s): v for (q, s, _), v in m.transitions.items()}
    for word in inputs(m):
        tr = run_tm(m, word, max_steps=30)
        assert (tr.outcome, tr.steps) == oracles.hand_run(table, list(word), m.accept, 30), word


def test_machine_validation():
    with pytest.raises(InputError):
        TMachine("bad", 2, 2, {(0, 0, None): (5, 0, "R")})
    with pytest.raises(InputError):
        TMachine("bad", 2, 2, {(1, 0, None): (0, 0, "R")}, accept=1)


def test_text_round_trip():
    for m in list(CORPUS.values()) + [ro_copy_check()]:
        assert parse_machine(format_machine(m)) == m
    with pytest.raises(FormatError):
        parse_machine("tm x 2\n")


def test_accept_now_frames_always_complete():
    dt = diagram_tiles(CORPUS["accept-now"])
    for word in inputs(CORPUS["accept-now"], 3):
        for size in (3, 4):
            assert frame_completable(dt, word, size)[0]


def test_size_one_frame_for_two_step_machine():
    dt = diagram_tiles(scan_right())
    assert not frame_completable(dt, "1", 1)[0]


@pytest.mark.parametrize("name", ["scan-right", "even-ones", "has-11", "bounce", "rewrite"])
def test_frame_completable_iff_accepted(name):
    m = CORPUS[name]
    dt = diagram_tiles(m)
    for word in inputs(m):
        for size in (4, 6):
            ok, patch = frame_completable(dt, word, size)
            tr = run_tm(m, word, max_steps=size, max_cells=size)
            assert ok == tr.accepted, (word, size)
            if ok:
                rows = decode_rows(dt, patch)
                padded = tr.configs + [tr.configs[-1]] * (size + 1 - len(tr.configs))
                assert rows == padded


def test_read_only_layer():
    m = ro_copy_check()
    assert run_tm(m, "12", ro_layer="01").accepted
    assert not run_tm(m, "12", ro_layer="11").accepted
    dt = diagram_tiles(m)
    assert frame_completable(dt, "12", 4, ro_layer="0100")[0]
    assert not frame_completable(dt, "12", 4, ro_layer="1100")[0]


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_determinacy_and_mutation(name):
    dt = diagram_tiles(CORPUS[name])
    assert check_determinacy(dt).ok
    bad = check_determinacy(inject_duplicate(dt.tileset))
    assert not bad.ok and bad.counterexample is not None


def test_determinacy_on_samples():
    m = CORPUS["bounce"]
    dt = diagram_tiles(m)
    patches = [frame_completable(dt, w, 6)[1] for w in inputs(m, 3)]
    assert check_determinacy(dt, samples=[p for p in patches if p is not None]).ok


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 2), max_size=5), st.integers(0, 12))
def test_step_limit_monotone(word, steps):
    m = CORPUS["bounce"]
    a = run_tm(m, word, max_steps=steps)
    b = run_tm(m, word, max_steps=steps + 1)
    if a.outcome != "step-limit":
        assert (a.outcome, a.steps) == (b.outcome, b.steps)
