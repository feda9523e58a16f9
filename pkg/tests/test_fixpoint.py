import functools

import pytest
from hypothesis import given, strategies as st

from tilefix.core import (
    ConfigurationError, FormatError, Patch, SizingError, format_tileset, with_letter_layer,
)
from tilefix.fixpoint import (
    CONDITIONS, ProgramBundle, ProgramTemplate, ZoomSchedule, accept_program, audit,
    block_offsets, checker_machine, compile, decode_macro_tile, decode_program,
    decode_program_field, encode_program, gamma, input_row, layout, macro_request,
    p4_decode, p4_encode, p4_roles, parse_color, parse_program, quasiperiodic_upgrade,
    reader_machine, self_referential_program, skeleton_tiles, slot_catalogue,
    slot_determinacy, structural_equal, target_tileset, tile_coordinates,
    verify_simulation, zero_program,
)
from tilefix.solver import SAT, UNSAT, SolveRequest, full_shift_tiles, solve_patch, torus_tilings
from tilefix.tm import run_tm

SMALL = (61, 1, 16, 2)          # N, k_bits, m, free_rows


@functools.lru_cache(maxsize=None)
def small_layout():
    return layout(*SMALL[:3], free_rows=SMALL[3])


@functools.lru_cache(maxsize=None)
def compiled(program):
    bundle = accept_program() if program == "accept" else zero_program()
    return bundle, compile(bundle, small_layout())


# ---------------------------------------------------------------- skeleton

def test_skeleton_sizes_and_tori():
    assert len(skeleton_tiles(2)) == 4
    sk = skeleton_tiles(3)
    assert len(sk) == 9
    assert torus_tilings(sk, 3, 3).exists
    assert not torus_tilings(sk, 2, 2).exists


def test_skeleton_columns_repeat_with_period_n():
    sk = skeleton_tiles(3)
    coords = tile_coordinates(sk)
    res = solve_patch(SolveRequest(sk, 4, 3, mode="enumerate"))
    assert res.patches
    for p in res.patches:
        assert all(coords[p[0, y]] == coords[p[3, y]] for y in range(3))


def test_block_offset_is_unique():
    sk = skeleton_tiles(4)
    fixed = Patch.empty(7, 7).with_cells({(2, 1): 0})     # tile 0 has coordinates (0, 0)
    res = solve_patch(SolveRequest(sk, 7, 7, fixed=fixed))
    assert block_offsets(sk, res.patches[0], 4) == [(2, 1)]


def test_colour_names():
    c = parse_color("h3,4:p1|a")
    assert (c.axis, c.i, c.j, c.payload, c.letter) == ("h", 3, 4, "p1", "a")
    with pytest.raises(FormatError):
        parse_color("x1,2")


def test_zoom_schedule():
    z = ZoomSchedule(2)
    assert (z.N(1), z.L(1), z.N(2), z.L(2)) == (9, 9, 81, 729)


# ---------------------------------------------------------------- layout

def test_layout_sizing_errors():
    with pytest.raises(SizingError):
        layout(16, 0, 16)
    # 32 landing columns at pitch 4 cannot share an input row of width 16
    with pytest.raises(SizingError):
        layout(64, 8, 16)


def test_eight_bit_layout_passes_audit():
    lay = layout(365, 8, 128, free_rows=4)
    assert len(lay.wires) == 4 * 8
    rep = audit(lay)
    assert rep.ok, rep.problems
    assert rep.min_gap > 2


def test_role_at_wire_corner():
    lay = small_layout()
    corners = 0
    for wi, wire in enumerate(lay.wires):
        for idx, (x, y) in enumerate(wire.cells):
            src, dst = wire.conducted(idx)
            role = lay.role(x, y)
            assert role.kind == "wire" and role.detail == (wi, src, dst)
            if {src, dst} not in ({"left", "right"}, {"top", "bottom"}):
                corners += 1
    assert corners >= 2


def test_audit_flags_crossing_wires():
    from dataclasses import replace
    lay = small_layout()
    w = lay.wires[0]
    moved = replace(w, cells=tuple((x + 1, y) for x, y in w.cells))
    bad = replace(lay, wires=(moved,) + lay.wires[1:])
    assert not audit(bad).ok


# ---------------------------------------------------------------- programs

def test_gamma_and_program_round_trip():
    assert [gamma(n) for n in (1, 2, 5)] == ["1", "010", "00101"]
    instrs = (("ZERO",), ("SELF", 3, 1), ("ACCEPT",))
    assert decode_program(encode_program(instrs)) == (instrs, None)
    assert accept_program().text == "1100"
    assert zero_program().text == "0100"
    with pytest.raises(FormatError):
        ProgramBundle("0100" + gamma(9))


def test_parse_program():
    assert parse_program("ZERO\n") == zero_program()
    assert parse_program("0100") == zero_program()
    assert isinstance(parse_program("SELF 0\nZERO"), ProgramTemplate)
    with pytest.raises(FormatError):
        parse_program("JUMP 3")


def test_self_referential_program():
    tpl = ProgramTemplate((("SELF", 0), ("SELF", 5), ("ZERO",)))
    pi = self_referential_program(tpl)
    assert pi == self_referential_program(tpl)
    instrs, length = decode_program(pi.text)
    assert length == len(pi.text)
    for op in instrs:
        if op[0] == "SELF":
            assert int(pi.text[op[1]]) == op[2]
    with pytest.raises(SizingError):
        self_referential_program(tpl, capacity=10)


def test_checker_and_reader_machines():
    lay = small_layout()
    row = input_row(zero_program(), lay)
    m = checker_machine(zero_program())
    zeros = [5 if s is None else s for s in row]            # wires carry 0
    ones = [6 if s is None else s for s in row]
    assert run_tm(m, zeros, max_steps=lay.m, max_cells=lay.m).outcome == "accept"
    assert run_tm(m, ones, max_steps=lay.m, max_cells=lay.m).outcome == "reject"
    for j, bit in enumerate(zero_program().text):
        accepted = run_tm(reader_machine(j), zeros, max_steps=lay.m, max_cells=lay.m).accepted
        assert accepted == (bit == "1")


# ---------------------------------------------------------------- compiler

def test_compile_is_deterministic():
    a = compile(zero_program(), small_layout())
    b = compile(zero_program(), small_layout())
    assert format_tileset(a) == format_tileset(b)


def test_zero_program_macro_tiles():
    bundle, tau = compiled("zero")
    N = SMALL[0]
    assert solve_patch(macro_request(tau, N, (0, 0, 0, 0), small_layout())).status == SAT
    assert solve_patch(macro_request(tau, N, (0, 0, 0, 1), small_layout())).status == UNSAT


@pytest.mark.parametrize("program", ["accept", "zero"])
def test_compiled_set_simulates_target(program):
    bundle, tau = compiled(program)
    rep = verify_simulation(tau, target_tileset(bundle, 1), SMALL[0], lay=small_layout())
    assert rep.ok, rep
    assert rep.macro_tiles == len(target_tileset(bundle, 1))


def test_program_field_decodes():
    bundle, tau = compiled("accept")
    assert decode_program_field(tau, small_layout()) == bundle.text


@pytest.mark.parametrize("N", [10, 11, 12])
def test_tiny_compiled_sets_have_no_small_period(N):
    tau = compile(zero_program(), layout(N, 0, 6, free_rows=1))
    for p in range(1, 5):
        for q in range(1, 5):
            assert not torus_tilings(tau, p, q, count=False).exists
    assert torus_tilings(tau, N, N, count=False).exists


# ---------------------------------------------------------------- simulation check

def test_skeleton_simulates_one_tile():
    rep = verify_simulation(skeleton_tiles(3), full_shift_tiles(1), 3)
    assert rep.ok
    assert rep.macro_tiles == 1


def test_deleted_tile_breaks_constructive_check():
    rep = verify_simulation(skeleton_tiles(3).without([4]), full_shift_tiles(1), 3)
    assert rep.constructive == "fail"


# ---------------------------------------------------------------- quasiperiodicity

def test_p4_codec():
    for j in range(6):
        roles = p4_roles(j)
        assert sorted(roles) == ["data", "ones", "zeros"]
        nxt = p4_roles(j + 1)
        assert all(nxt[(z + 1) % 3] == roles[z] for z in range(3))
    assert p4_decode(p4_encode("101", 4), 4) == (1, 0, 1)
    with pytest.raises(FormatError):
        p4_decode((1, 1, 1, 1, 1, 1), 0)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8), st.integers(0, 20))
def test_p4_round_trip(bits, j):
    assert p4_decode(p4_encode(bits, j), j) == tuple(bits)


def test_upgrade_needs_three_zone_width():
    with pytest.raises(ConfigurationError):
        quasiperiodic_upgrade(small_layout())


@functools.lru_cache(maxsize=None)
def qp_demo():
    lay = quasiperiodic_upgrade(layout(140, 0, 6, free_rows=124))
    return lay, compile(zero_program(), lay)


def test_quasiperiodic_layout():
    lay, tau = qp_demo()
    assert len(lay.slots) == (lay.m - 1) ** 2
    assert audit(lay).ok
    catalogue = slot_catalogue(zero_program(), lay)
    assert max(catalogue.values()) <= lay.patterns_per_position
    dets = slot_determinacy(tau, lay)
    assert dets and set(dets.values()) == {1}


def test_quasiperiodic_set_still_simulates():
    lay, tau = qp_demo()
    assert verify_simulation(tau, target_tileset(zero_program(), 0), 140, lay=lay).ok


# ---------------------------------------------------------------- structural equality

def _lettered_blocks():
    ts = with_letter_layer(skeleton_tiles(3), "ab")
    coords = tile_coordinates(ts)

    def block(letters):
        cells = {}
        for x in range(3):
            for y in range(3):
                cells[(x, y)] = next(k for k, t in enumerate(ts.tiles)
                                     if coords[k] == (x, y) and t.letter == letters[x])
        return Patch.from_dict(3, 3, cells)
    return ts, block


def test_structural_equal():
    ts, block = _lettered_blocks()
    a = decode_macro_tile(ts, block("aab"), pos=(0, 0))
    same = decode_macro_tile(ts, block("aab"), pos=(0, 0))
    other = decode_macro_tile(ts, block("abb"), pos=(0, 0))
    assert structural_equal(a, same)
    rep = structural_equal(a, other)
    assert not rep.conditions["zone_letters"] and not rep.bodies_equal and rep.consistent
    skel = skeleton_tiles(3)
    plain = Patch([[0, 1, 2], [3, 4, 5], [6, 7, 8]])
    b1 = decode_macro_tile(skel, plain, pos=(1, 2))
    b2 = decode_macro_tile(skel, plain, pos=(1, 2))
    assert structural_equal(b1, b2).bodies_equal
    assert set(structural_equal(b1, b2).conditions) == set(CONDITIONS)
