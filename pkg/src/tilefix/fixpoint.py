"""Self-simulating tile sets: coordinates, wires, a computation zone, and
the checks that a compiled set behaves like the tile set it simulates.

Colours are named.  ``h{i},{j}`` is the vertical edge on the left of cell
(i, j) of a macro-tile and ``v{i},{j}`` the horizontal edge below it.  An
optional ``:payload`` carries a wire bit, an input symbol or diagram content;
an optional ``|letter`` comes from a letter layer.  Plain names are skeleton
edges.
"""
from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field, replace
from functools import cached_property

from .core import (
    BOTTOM, LEFT, RIGHT, TOP, ConfigurationError, Direction, FormatError, InputError,
    SizingError, Tile, TileSet, macro_colors_match, macro_tile, project_letters,
    tiles_match,
)
from .solver import BUDGET, SAT, SolveRequest, solve_patch
from .tm import TMachine, diagram_tiles, frame_request

# ---------------------------------------------------------------- colour names

_NAME = re.compile(r"^([hv])(\d+),(\d+)(?::([^|]*))?(?:\|(.*))?$")


@dataclass(frozen=True)
class EdgeColor:
    axis: str           # "h": vertical edge between columns, "v": between rows
    i: int
    j: int
    payload: str = ""
    letter: str | None = None


def parse_color(name):
    hit = _NAME.match(name)
    if hit is None:
        raise FormatError(f"colour {name!r} is not a coordinate colour")
    axis, i, j, payload, letter = hit.groups()
    return EdgeColor(axis, int(i), int(j), payload or "", letter)


def edge_name(axis, i, j, payload=""):
    return f"{axis}{i},{j}" + (f":{payload}" if payload else "")


class _Palette:
    """Colour ids handed out in first-use order, so compiles are reproducible."""

    def __init__(self):
        self.ids = {}
        self.names = []

    def __call__(self, name):
        c = self.ids.get(name)
        if c is None:
            c = self.ids[name] = len(self.names)
            self.names.append(name)
        return c


def _plain_tile(pal, n, i, j, **override):
    edges = {
        "left": edge_name("h", i, j), "right": edge_name("h", (i + 1) % n, j),
        "top": edge_name("v", i, (j + 1) % n), "bottom": edge_name("v", i, j),
    }
    edges.update(override)
    return Tile(pal(edges["left"]), pal(edges["right"]), pal(edges["top"]), pal(edges["bottom"]))


def skeleton_tiles(n):
    """The N*N tiles that know their coordinates modulo N."""
    if n < 2:
        raise InputError("skeleton needs N >= 2")
    pal = _Palette()
    tiles = [_plain_tile(pal, n, i, j) for j in range(n) for i in range(n)]
    return TileSet(f"skeleton-{n}", len(pal.names), tiles, pal.names)


def _parsed_colors(ts):
    if ts.color_names is None:
        raise FormatError(f"tile set {ts.name!r} has no colour names")
    return [parse_color(c) for c in ts.color_names]


def tile_coordinates(ts):
    """(i, j) each tile believes it sits at, read from its left and bottom colours."""
    cols = _parsed_colors(ts)
    out = []
    for k, t in enumerate(ts.tiles):
        left, bottom = cols[t.left], cols[t.bottom]
        right, top = cols[t.right], cols[t.top]
        if left.axis != "h" or bottom.axis != "v":
            raise FormatError(f"tile {k} has inconsistent coordinate colours")
        if (left.i, left.j) == (bottom.i, bottom.j):
            out.append((left.i, left.j))
            continue
        # a slot frame shows a block colour on one side; right and top stay real
        real = [(c.i, c.j) for c in (left, bottom) if c.i == top.i and c.j == right.j]
        if len(real) != 1:
            raise FormatError(f"tile {k} has inconsistent coordinate colours")
        out.append(real[0])
    return out


def block_offsets(ts, patch, n):
    """Offsets (ox, oy) at which every cell's coordinates read ((x-ox)%n, (y-oy)%n)."""
    coords = tile_coordinates(ts)
    found = []
    for oy in range(n):
        for ox in range(n):
            if all(coords[int(patch.cells[y, x])] == ((x - ox) % n, (y - oy) % n)
                   for y in range(patch.height) for x in range(patch.width)):
                found.append((ox, oy))
    return found


# ---------------------------------------------------------------- zoom schedule

@dataclass(frozen=True)
class ZoomSchedule:
    """N_k = 3^(C^k), L_k = N_1 ... N_k, m_k = ceil(log2 N_k) ** m_power."""
    C: int = 2
    m_power: int = 3

    def __post_init__(self):
        if self.C < 2:
            raise InputError("zoom schedule needs C >= 2")

    def N(self, k):
        if k < 1:
            raise InputError("levels start at 1")
        return 3 ** (self.C ** k)

    def L(self, k):
        return math.prod(self.N(i) for i in range(1, k + 1))

    def m(self, k):
        return ((self.N(k) - 1).bit_length()) ** self.m_power


# ---------------------------------------------------------------- layout

_STEP_SIDE = {(-1, 0): "left", (1, 0): "right", (0, 1): "top", (0, -1): "bottom"}
_SIDE_OF = {"left": LEFT, "right": RIGHT, "top": TOP, "bottom": BOTTOM}
_OUTER = {"bottom": "bottom", "left": "left", "right": "right", "top": "top"}


@dataclass(frozen=True)
class Wire:
    side: str           # macro-tile side the bit enters through
    bit: int            # position of the bit along that side
    cells: tuple        # (x, y) from the entry cell to the cell under the landing
    landing: int        # computation-zone column that receives the bit

    def conducted(self, idx):
        """The two sides of cell ``idx`` the wire passes through (in, out)."""
        x, y = self.cells[idx]
        if idx == 0:
            src = _OUTER[self.side]
        else:
            px, py = self.cells[idx - 1]
            src = _STEP_SIDE[(px - x, py - y)]
        if idx == len(self.cells) - 1:
            dst = "top"
        else:
            nx, ny = self.cells[idx + 1]
            dst = _STEP_SIDE[(nx - x, ny - y)]
        return src, dst


@dataclass(frozen=True)
class Slot:
    source: tuple       # (s, t): bottom-left cell of the cloned block in the computation zone
    pattern: int        # index into the catalogue of blocks at that position
    origin: tuple       # bottom-left corner of the 4x4 frame

    def footprint(self):
        x, y = self.origin
        return [(x + dx, y + dy) for dy in range(4) for dx in range(4)]

    def interior(self):
        x, y = self.origin
        return [(x + dx, y + dy) for dy in (1, 2) for dx in (1, 2)]


@dataclass(frozen=True)
class Role:
    kind: str           # skeleton | free | wire | input | comp | slot-frame | slot-interior
    detail: tuple = ()


@dataclass(frozen=True)
class MacroLayout:
    N: int
    k_bits: int
    m: int
    free_rows: int
    gap: int
    entries: tuple      # bit positions along every side
    comp: tuple         # (x, y, width, height); its bottom row is the input row
    free: tuple         # (x, y, width, height) reserved above the computation zone
    wires: tuple
    input_map: tuple    # per computation-zone column: ("wire", i) | ("field",) | ("end",)
    slots: tuple = ()
    patterns_per_position: int = 0
    p4: bool = False

    @cached_property
    def _roles(self):
        roles = {}
        x0, y0, w, h = self.comp
        for t in range(h):
            for s in range(w):
                roles[(x0 + s, y0 + t)] = Role("comp", (s, t))
        for s, kind in enumerate(self.input_map):
            if kind[0] != "wire":
                roles[(x0 + s, y0 - 1)] = Role("input", (s,))
        for wi, wire in enumerate(self.wires):
            for idx, cell in enumerate(wire.cells):
                roles[cell] = Role("wire", (wi, *wire.conducted(idx)))
        fx, fy, fw, fh = self.free
        for y in range(fy, fy + fh):
            for x in range(fx, fx + fw):
                roles.setdefault((x, y), Role("free"))
        for si, slot in enumerate(self.slots):
            ox, oy = slot.origin
            s, t = slot.source
            for x, y in slot.footprint():
                dx, dy = x - ox, y - oy
                if 1 <= dx <= 2 and 1 <= dy <= 2:
                    src = (x0 + s + dx - 1, y0 + t + dy - 1)
                    roles[(x, y)] = Role("slot-interior", (si, src))
                else:
                    roles[(x, y)] = Role("slot-frame", (si, _inward(dx, dy)))
        return roles

    def role(self, x, y):
        """What the cell at macro-tile coordinates (x, y) does."""
        if not (0 <= x < self.N and 0 <= y < self.N):
            raise InputError(f"({x}, {y}) lies outside the {self.N}x{self.N} macro-tile")
        return self._roles.get((x, y), Role("skeleton"))

    @property
    def landings(self):
        return [s for s, kind in enumerate(self.input_map) if kind[0] == "wire"]

    @property
    def field_columns(self):
        return [s for s, kind in enumerate(self.input_map) if kind[0] == "field"]


def _inward(dx, dy):
    # which side of a frame cell faces the slot interior, None for the corners
    if dx == 0 and dy in (1, 2):
        return "right"
    if dx == 3 and dy in (1, 2):
        return "left"
    if dy == 0 and dx in (1, 2):
        return "top"
    if dy == 3 and dx in (1, 2):
        return "bottom"
    return None


def _trace(points):
    cells = [points[0]]
    for (ax, ay), (bx, by) in zip(points, points[1:]):
        if ax != bx and ay != by:
            raise ValueError("wire segments must be axis-parallel")
        dx = (bx > ax) - (bx < ax)
        dy = (by > ay) - (by < ay)
        x, y = ax, ay
        while (x, y) != (bx, by):
            x, y = x + dx, y + dy
            cells.append((x, y))
    return tuple(cells)


def layout(N, k_bits, m, free_rows=None, gap=3):
    """Place the computation zone, the free zone and the wires of an N x N macro-tile.

    Bits sit ``gap + 1`` apart in the middle of each side.  Bottom wires run
    straight up, left and right wires make one turn, top wires go around the
    free zone.  Landing columns on the input row are ordered top-left half,
    left, bottom, right, top-right half; the last input column holds the end
    marker.
    """
    if m < 2:
        raise SizingError("computation zone side m must be at least 2")
    if m >= N:
        raise SizingError(f"computation zone side m={m} must be smaller than N={N}")
    if k_bits < 0 or gap < 1:
        raise InputError("k_bits must be >= 0 and gap >= 1")
    F = m if free_rows is None else int(free_rows)
    pitch = gap + 1
    k = k_bits
    e0 = N // 2 - (pitch * (k - 1)) // 2 if k else N // 2
    entries = tuple(e0 + pitch * a for a in range(k))
    if k and (entries[0] < 1 or entries[-1] > N - 2):
        raise SizingError(f"{k} bits at pitch {pitch} do not fit on a side of length {N}")
    n_tl = k // 2
    n_tr = k - n_tl
    n_top = max(n_tl, n_tr)
    if k:
        e_last = entries[-1]
        rmin = e_last + pitch
        Y0 = rmin + pitch * n_top
    else:
        Y0 = max(2, (N - m - F) // 2)
    free_top = Y0 + m + F - 1
    if free_top > N - 2:
        raise SizingError(f"computation zone and free zone need rows up to {free_top}, N={N}")
    if n_top and N - 2 - pitch * (n_top - 1) < free_top + pitch:
        raise SizingError("no room above the free zone to route the top wires")

    landing_cols = {}
    for a in range(k):
        landing_cols[("bottom", a)] = entries[a]
        landing_cols[("left", a)] = e0 - pitch * (a + 1)
        landing_cols[("right", a)] = e_last + pitch * (a + 1)
    for o in range(n_tl):
        landing_cols[("top", o)] = e0 - pitch * k - pitch * (o + 1)
    for o in range(n_tr):
        landing_cols[("top", k - 1 - o)] = e_last + pitch * k + pitch * (o + 1)
    if landing_cols:
        lo, hi = min(landing_cols.values()), max(landing_cols.values())
        # centre the landings in the input row, keeping the last column free
        X0 = lo - max(0, (m - 1 - (hi - lo + 1)) // 2)
    else:
        X0 = (N - m) // 2
    if X0 < 1 or X0 + m > N - 1:
        raise SizingError(f"computation zone of width m={m} does not fit inside N={N}")
    for key, col in landing_cols.items():
        if not X0 <= col <= X0 + m - 2:
            span = 4 * k * pitch - gap
            raise SizingError(
                f"{4 * k} landing columns at pitch {pitch} span {span} columns and do "
                f"not fit the input row of width m={m} (plus the end marker)")

    def yt(o):
        return N - 2 - pitch * o

    def r(o):
        return rmin + pitch * o

    wires = []
    for a in range(k):
        x = entries[a]
        wires.append(Wire("bottom", a, _trace([(x, 0), (x, Y0 - 1)]), x - X0))
    for a in range(k):
        land = landing_cols[("left", a)]
        wires.append(Wire("left", a, _trace([(0, entries[a]), (land, entries[a]), (land, Y0 - 1)]),
                          land - X0))
    for a in range(k):
        land = landing_cols[("right", a)]
        wires.append(Wire("right", a, _trace([(N - 1, entries[a]), (land, entries[a]), (land, Y0 - 1)]),
                          land - X0))
    for a in range(k):
        x = entries[a]
        land = landing_cols[("top", a)]
        if a < n_tl:
            o = a
            c = X0 - 1 - pitch - pitch * (n_tl - 1 - o)
        else:
            o = k - 1 - a
            c = X0 + m + pitch + pitch * (n_tr - 1 - o)
        if not 1 <= c <= N - 2:
            raise SizingError("no room beside the free zone to route the top wires")
        pts = [(x, N - 1), (x, yt(o)), (c, yt(o)), (c, r(o)), (land, r(o)), (land, Y0 - 1)]
        wires.append(Wire("top", a, _trace(pts), land - X0))

    input_map = [("field",)] * m
    for wi, w in enumerate(wires):
        input_map[w.landing] = ("wire", wi)
    input_map[m - 1] = ("end",)
    return MacroLayout(
        N=N, k_bits=k, m=m, free_rows=F, gap=gap, entries=entries,
        comp=(X0, Y0, m, m), free=(X0 - 1, Y0 + m, m + 2, F),
        wires=tuple(wires), input_map=tuple(input_map))


@dataclass
class LayoutAudit:
    ok: bool
    min_gap: int | None          # fewest free cells between two different wires
    problems: list = field(default_factory=list)


def audit(lay):
    """Geometric audit: wire gaps, zone and slot disjointness, slot alignment."""
    problems = []
    N = lay.N
    x0, y0, w, h = lay.comp
    comp = {(x, y) for y in range(y0, y0 + h) for x in range(x0, x0 + w)}
    fx, fy, fw, fh = lay.free
    free = {(x, y) for y in range(fy, fy + fh) for x in range(fx, fx + fw)}
    if comp & free:
        problems.append("computation zone overlaps the free zone")
    owner = {}
    for wi, wire in enumerate(lay.wires):
        cells = wire.cells
        if len(set(cells)) != len(cells):
            problems.append(f"wire {wi} visits a cell twice")
        for (ax, ay), (bx, by) in zip(cells, cells[1:]):
            if abs(ax - bx) + abs(ay - by) != 1:
                problems.append(f"wire {wi} is not connected at {(ax, ay)}")
        for c in cells:
            if not (0 <= c[0] < N and 0 <= c[1] < N):
                problems.append(f"wire {wi} leaves the macro-tile at {c}")
            if c in comp or c in free:
                problems.append(f"wire {wi} enters a reserved zone at {c}")
            if c in owner:
                problems.append(f"wires {owner[c]} and {wi} share {c}")
            owner[c] = wi
        if cells[-1] != (x0 + wire.landing, y0 - 1):
            problems.append(f"wire {wi} does not end under its landing column")
        entry = {"bottom": (lay.entries[wire.bit], 0), "top": (lay.entries[wire.bit], N - 1),
                 "left": (0, lay.entries[wire.bit]), "right": (N - 1, lay.entries[wire.bit])}
        if cells[0] != entry[wire.side]:
            problems.append(f"wire {wi} does not start at its side bit")
    landings = [wire.landing for wire in lay.wires]
    if len(set(landings)) != len(landings):
        problems.append("two wires share a landing column")
    min_gap = None
    reach = lay.gap
    for (x, y), wi in owner.items():
        for dy in range(-reach, reach + 1):
            for dx in range(-reach, reach + 1):
                other = owner.get((x + dx, y + dy))
                if other is not None and other != wi:
                    d = max(abs(dx), abs(dy)) - 1
                    min_gap = d if min_gap is None else min(min_gap, d)
    if min_gap is not None and min_gap <= 2:
        problems.append(f"two wires come within {min_gap} free cells")
    if len(lay.wires) > 1 and min_gap is None:
        min_gap = reach      # nothing closer than the search radius
    taken = {}
    for si, slot in enumerate(lay.slots):
        s, t = slot.source
        for c in slot.footprint():
            if c not in free:
                problems.append(f"slot {si} leaves the free zone at {c}")
                break
        if slot.interior()[0][0] != x0 + s:
            problems.append(f"slot {si} is not aligned with source column {s}")
        for x, y in slot.footprint():
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    o = taken.get((x + dx, y + dy))
                    if o is not None and o != si:
                        problems.append(f"slots {o} and {si} touch at {(x, y)}")
        for c in slot.footprint():
            taken[c] = si
    return LayoutAudit(not problems, min_gap, problems)


# ---------------------------------------------------------------- quasiperiodicity

_ROLES = ("data", "zeros", "ones")


def p4_roles(j):
    """Roles of the three macro-colour zones in the macro-tile at height j."""
    return tuple(_ROLES[(z - j) % 3] for z in range(3))


def p4_encode(bits, j):
    """Spread ``bits`` into three zones: data, all zeros, all ones, rotated by j."""
    bits = tuple(int(b) for b in bits)
    fill = {"data": bits, "zeros": (0,) * len(bits), "ones": (1,) * len(bits)}
    return sum((fill[role] for role in p4_roles(j)), ())


def p4_decode(code, j):
    code = tuple(int(b) for b in code)
    if len(code) % 3:
        raise FormatError("three-zone code length must be divisible by 3")
    r = len(code) // 3
    data = None
    for z, role in enumerate(p4_roles(j)):
        part = code[z * r:(z + 1) * r]
        if role == "data":
            data = part
        elif part != ((0,) if role == "zeros" else (1,)) * r:
            raise FormatError(f"zone {z} should be all {role}")
    return data


def quasiperiodic_upgrade(lay, patterns_per_position=1):
    """Add one diversification slot per (computation-zone 2x2 position, pattern).

    Slots are 4x4 frames in the free zone, with the cloned block in the same
    columns as its source.  Lanes whose frames would touch are moved to
    separate bands: source column s goes to band s mod 5.
    """
    if lay.k_bits % 3:
        raise ConfigurationError("three-zone macro-colour code needs k_bits divisible by 3")
    P = int(patterns_per_position)
    if P < 1:
        raise InputError("patterns_per_position must be positive")
    x0, _, m, _ = lay.comp
    fx, fy, fw, fh = lay.free
    per_lane = (m - 1) * P
    band = 5 * per_lane
    needed = 5 * band - 1
    nslots = (m - 1) * (m - 1) * P
    if needed > fh:
        raise SizingError(f"{nslots} diversification slots need {needed} free rows, "
                          f"the layout reserves {fh}")
    slots = []
    for s in range(m - 1):
        for t in range(m - 1):
            for p in range(P):
                idx = t * P + p
                slots.append(Slot((s, t), p, (x0 + s - 1, fy + (s % 5) * band + 5 * idx)))
    return replace(lay, slots=tuple(slots), patterns_per_position=P, p4=True)


# ---------------------------------------------------------------- programs

BLANK, P0, P1, L0, L1, W0, W1, END = range(8)
TOKENS = ("b", "p0", "p1", "l0", "l1", "0", "1", "E")
_OPS = {"ACCEPT": "11", "ZERO": "01", "SELF": "10", "END": "00"}
_OP_NAMES = {v: k for k, v in _OPS.items()}


def gamma(n):
    """Elias gamma code of n >= 1."""
    if n < 1:
        raise InputError("gamma code needs n >= 1")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def _read_gamma(text, pos):
    zeros = 0
    while pos + zeros < len(text) and text[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(text):
        raise FormatError("truncated gamma code")
    return int(text[pos + zeros:end], 2), end


def encode_program(instructions, length_field=None):
    out = []
    for ins in instructions:
        op = ins[0]
        if op == "SELF":
            j, v = ins[1], ins[2]
            out.append(_OPS[op] + gamma(j + 1) + str(int(v)))
        elif op in _OPS and op != "END":
            out.append(_OPS[op])
        else:
            raise InputError(f"unknown instruction {op!r}")
    out.append(_OPS["END"])
    text = "".join(out)
    if length_field is not None:
        text += gamma(length_field)
    return text


def decode_program(text):
    """(instructions, self-length field or None) of a program text."""
    if not text or set(text) - {"0", "1"}:
        raise FormatError("program text must be a nonempty bit string")
    instructions = []
    pos = 0
    while True:
        if pos + 2 > len(text):
            raise FormatError("program text lacks an END instruction")
        op = _OP_NAMES[text[pos:pos + 2]]
        pos += 2
        if op == "END":
            break
        if op == "SELF":
            j1, pos = _read_gamma(text, pos)
            if pos >= len(text):
                raise FormatError("truncated SELF instruction")
            instructions.append(("SELF", j1 - 1, int(text[pos])))
            pos += 1
        else:
            instructions.append((op,))
    length = None
    if pos < len(text):
        length, end = _read_gamma(text, pos)
        if end != len(text):
            raise FormatError("trailing bits after the length field")
    return tuple(instructions), length


@dataclass(frozen=True)
class ProgramBundle:
    """Program text (a bit string) hardwired into the input row.

    Instructions: ACCEPT (accept every payload), ZERO (reject a 1 on any
    wire), SELF j v (bit j of the program field must be v).  A text may end
    with a gamma-coded field holding its own length.
    """
    text: str
    payload: str | None = None
    version: int = 1

    def __post_init__(self):
        _, length = decode_program(self.text)
        if length is not None and length != len(self.text):
            raise FormatError(f"length field says {length}, text has {len(self.text)} bits")

    @property
    def instructions(self):
        return decode_program(self.text)[0]


def accept_program():
    return ProgramBundle(encode_program([("ACCEPT",)]))


def zero_program():
    return ProgramBundle(encode_program([("ZERO",)]))


@dataclass(frozen=True)
class ProgramTemplate:
    """Instructions with self-references left open: ("SELF", j) without the bit."""
    instructions: tuple
    payload: str | None = None
    version: int = 1


def self_referential_program(template, capacity=None):
    """Fixed point: a program whose SELF checks and length field describe its own text."""
    guesses = {ins[1]: 0 for ins in template.instructions if ins[0] == "SELF"}
    for _ in range(8):
        instrs = [("SELF", ins[1], guesses[ins[1]]) if ins[0] == "SELF" else ins
                  for ins in template.instructions]
        body = len(encode_program(instrs))
        n = body + 1
        while body + len(gamma(n)) != n:
            n = body + len(gamma(n))
        text = encode_program(instrs, length_field=n)
        if capacity is not None and len(text) > capacity:
            raise SizingError(f"self-referential program needs {len(text)} bits, "
                              f"the program field holds {capacity}")
        seen = {}
        for j in guesses:
            if j >= len(text):
                raise InputError(f"SELF {j} points past the {len(text)}-bit program")
            seen[j] = int(text[j])
        if seen == guesses:
            return ProgramBundle(text, template.payload, template.version)
        guesses = seen
    raise InputError("self-references did not settle on a fixed point")


def parse_program(text):
    """A bit string, or one instruction per line: ACCEPT, ZERO, ``SELF j v``.

    ``SELF j`` without the bit makes the result a ProgramTemplate whose bits
    are settled by self_referential_program.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError("empty program")
    joined = "".join(lines)
    if set(joined) <= {"0", "1"}:
        return ProgramBundle(joined)
    instrs = []
    open_bits = False
    for ln in lines:
        f = ln.split()
        op = f[0].upper()
        try:
            if op in ("ACCEPT", "ZERO") and len(f) == 1:
                instrs.append((op,))
            elif op == "SELF" and len(f) == 3:
                instrs.append(("SELF", int(f[1]), int(f[2]) & 1))
            elif op == "SELF" and len(f) == 2:
                instrs.append(("SELF", int(f[1])))
                open_bits = True
            else:
                raise FormatError(f"bad instruction {ln!r}")
        except ValueError:
            raise FormatError(f"bad instruction {ln!r}") from None
    if open_bits:
        return ProgramTemplate(tuple(instrs))
    return ProgramBundle(encode_program(instrs))


def read_program(path):
    with open(path) as fh:
        return parse_program(fh.read())


def checker_machine(bundle):
    """Turing machine that checks the input row in one left-to-right pass.

    The row holds program bits, level bits, wire bits and an end marker in its
    last cell.  With no ZERO or SELF instruction the machine accepts at once.
    """
    instrs = bundle.instructions
    zero = any(ins[0] == "ZERO" for ins in instrs)
    checks = {}
    for ins in instrs:
        if ins[0] == "SELF":
            if checks.get(ins[1], ins[2]) != ins[2]:
                raise InputError(f"contradicting SELF checks on bit {ins[1]}")
            checks[ins[1]] = ins[2]
    if not zero and not checks:
        return TMachine("checker-accept", 1, len(TOKENS), {}, start=0, accept=0)
    last = max(checks) if checks else -1
    done, accept = last + 1, last + 2
    trans = {}
    for q in range(last + 2):
        seeking = q <= last
        for s in range(len(TOKENS)):
            if s == END:
                if not seeking:
                    trans[(q, s, None)] = (accept, s, "S")
                continue
            if s == W1 and zero:
                continue
            if seeking and s in (P0, P1):
                if q in checks and s != (P1 if checks[q] else P0):
                    continue
                trans[(q, s, None)] = (q + 1, s, "R")
            else:
                trans[(q, s, None)] = (q, s, "R")
    return TMachine("checker", last + 3, len(TOKENS), trans, start=0 if checks else done, accept=accept)


def reader_machine(j):
    """Walks right to program bit j and accepts iff it reads a 1 there."""
    trans = {}
    for q in range(j + 1):
        for s in range(len(TOKENS)):
            if s in (P0, P1):
                if q < j:
                    trans[(q, s, None)] = (q + 1, s, "R")
                elif s == P1:
                    trans[(q, s, None)] = (j + 1, s, "S")
            elif s != END:
                trans[(q, s, None)] = (q, s, "R")
    return TMachine(f"reader-{j}", j + 2, len(TOKENS), trans, start=0, accept=j + 1)


def input_row(bundle, lay, level_field=None, level_width=4):
    """Input symbols of the computation zone, with wires shown as None."""
    cols = lay.field_columns
    bits = [P1 if b == "1" else P0 for b in bundle.text]
    if level_field is not None:
        if not 0 <= level_field < 2 ** level_width:
            raise SizingError(f"level {level_field} does not fit {level_width} bits")
        bits += [L1 if b == "1" else L0 for b in format(level_field, f"0{level_width}b")]
    if len(bits) > len(cols):
        raise SizingError(f"program and level field need {len(bits)} input columns, "
                          f"the layout leaves {len(cols)}")
    row = [None] * lay.m
    for s, kind in enumerate(lay.input_map):
        if kind[0] == "end":
            row[s] = END
        elif kind[0] == "field":
            row[s] = BLANK
    for s, sym in zip(cols, bits):
        row[s] = sym
    return row


# ---------------------------------------------------------------- compiler

def _comp_tile(pal, dt, lay, d, s, t, row):
    """Tile for diagram tile ``d`` at computation-zone cell (s, t), or None."""
    x0, y0, m, _ = lay.comp
    x, y = x0 + s, y0 + t
    names = dt.tileset.color_names
    quiet = dt.quiet
    left, right, top, bottom = d.sides
    if t == 0:
        start = dt.machine.start if s == 0 else None
        syms = [row[s]] if row[s] is not None else [W0, W1]
        fits = [sym for sym in syms if dt.cell_color(sym, start) == bottom]
        if not fits:
            return None
        b = edge_name("v", x, y, TOKENS[fits[0]])
    else:
        b = edge_name("v", x, y, names[bottom])
    if t == m - 1:
        if top not in dt.accepting_tops():
            return None
        tp = edge_name("v", x, y + 1)
    else:
        tp = edge_name("v", x, y + 1, names[top])
    if s == 0 and left != quiet or s == m - 1 and right != quiet:
        return None
    lf = edge_name("h", x, y, "" if left == quiet else names[left])
    rt = edge_name("h", x + 1, y, "" if right == quiet else names[right])
    return Tile(pal(lf), pal(rt), pal(tp), pal(b))


def _catalogue(dt, lay, row, max_inputs=1 << 16):
    """Diagram 2x2 blocks at each computation-zone position over all accepted inputs."""
    wires = [s for s in range(lay.m) if row[s] is None]
    if 1 << len(wires) > max_inputs:
        raise SizingError(f"{len(wires)} wire bits give too many inputs to catalogue")
    m = lay.m
    blocks = {}
    for bits in itertools.product((W0, W1), repeat=len(wires)):
        word = list(row)
        for s, b in zip(wires, bits):
            word[s] = b
        res = solve_patch(frame_request(dt, word, m, m))
        if res.status != SAT:
            continue
        cells = res.patches[0].cells
        for t in range(m - 1):
            for s in range(m - 1):
                blk = (int(cells[t, s]), int(cells[t, s + 1]),
                       int(cells[t + 1, s]), int(cells[t + 1, s + 1]))
                blocks.setdefault((s, t), set()).add((blk, tuple(word)))
    return blocks


def compile(bundle, lay, level_field=None, level_width=4):
    """Tile set of the macro-tile described by ``lay`` running ``bundle``.

    Emits, cell by cell, the tiles each role allows: one skeleton tile, two
    wire tiles (bit 0 and bit 1), one input-field tile, the diagram tiles of
    the checker machine in the computation zone, and slot frames.
    """
    machine = checker_machine(bundle)
    dt = diagram_tiles(machine)
    row = input_row(bundle, lay, level_field, level_width)
    N = lay.N
    pal = _Palette()
    tiles = {}

    def emit(tile):
        tiles.setdefault(tile, None)

    comp_tiles = {}     # (s, t, diagram tile index) -> Tile

    def comp_at(s, t):
        for di, d in enumerate(dt.tileset.tiles):
            key = (s, t, di)
            if key not in comp_tiles:
                comp_tiles[key] = _comp_tile(pal, dt, lay, d, s, t, row)
        return [comp_tiles[(s, t, di)] for di in range(len(dt.tileset))]

    used_slots = {}
    if lay.slots:
        cat = _catalogue(dt, lay, row)
        for si, slot in enumerate(lay.slots):
            options = sorted({blk for blk, _ in cat.get(slot.source, ())})
            if len(options) > lay.patterns_per_position:
                raise SizingError(f"position {slot.source} has {len(options)} blocks, "
                                  f"the layout reserves {lay.patterns_per_position} slots")
            if slot.pattern < len(options):
                used_slots[si] = options[slot.pattern]

    for y in range(N):
        for x in range(N):
            role = lay.role(x, y)
            kind = role.kind
            if kind in ("skeleton", "free"):
                emit(_plain_tile(pal, N, x, y))
            elif kind == "input":
                (s,) = role.detail
                emit(_plain_tile(pal, N, x, y, top=edge_name("v", x, y + 1, TOKENS[row[s]])))
            elif kind == "wire":
                _, src, dst = role.detail
                for bit in "01":
                    over = {}
                    for side in (src, dst):
                        over[side] = _bit_edge(N, x, y, side, bit)
                    emit(_plain_tile(pal, N, x, y, **over))
            elif kind == "comp":
                s, t = role.detail
                for tile in comp_at(s, t):
                    if tile is not None:
                        emit(tile)
            elif kind == "slot-frame":
                si, inward = role.detail
                if si not in used_slots or inward is None:
                    emit(_plain_tile(pal, N, x, y))
                    continue
                slot = lay.slots[si]
                s, t = slot.source
                ox, oy = slot.origin
                # the block cell this frame cell touches, and the side it shows us
                bx = min(max(x - ox - 1, 0), 1)
                by = min(max(y - oy - 1, 0), 1)
                d = dt.tileset.tiles[used_slots[si][2 * by + bx]]
                inner = comp_at(s + bx, t + by)[dt.tileset.index(d)]
                facing = {"right": LEFT, "left": RIGHT, "top": BOTTOM, "bottom": TOP}[inward]
                emit(_plain_tile(pal, N, x, y, **{inward: pal.names[inner.sides[facing]]}))
            elif kind == "slot-interior":
                si, _ = role.detail
                if si not in used_slots:
                    emit(_plain_tile(pal, N, x, y))
    suffix = "-qp" if lay.slots else ""
    name = f"fixpoint-N{N}-k{lay.k_bits}-m{lay.m}{suffix}"
    return TileSet(name, len(pal.names), list(tiles), pal.names)


def _bit_edge(N, x, y, side, bit):
    if side == "left":
        return edge_name("h", x, y, bit)
    if side == "right":
        return edge_name("h", (x + 1) % N, y, bit)
    if side == "bottom":
        return edge_name("v", x, y, bit)
    return edge_name("v", x, (y + 1) % N, bit)


def slot_catalogue(bundle, lay, level_field=None, level_width=4):
    """Number of distinct diagram blocks per computation-zone 2x2 position."""
    dt = diagram_tiles(checker_machine(bundle))
    cat = _catalogue(dt, lay, input_row(bundle, lay, level_field, level_width))
    return {pos: len({blk for blk, _ in v}) for pos, v in cat.items()}


def decode_program_field(tau, lay):
    """Program bits read back from the input-field tiles of a compiled set."""
    cols = _parsed_colors(tau)
    x0, y0, _, _ = lay.comp
    tops = {}
    for t in tau.tiles:
        c = cols[t.top]
        if c.axis == "v" and c.j == y0 and c.payload in ("p0", "p1"):
            tops[c.i - x0] = c.payload[1]
    out = []
    for s in lay.field_columns:
        if s not in tops:
            break
        out.append(tops[s])
    return "".join(out)


def input_row_symbols(tau, lay):
    """Input-row symbols shown by the input-field tiles; wire columns read as W0."""
    cols = _parsed_colors(tau)
    x0, y0, m, _ = lay.comp
    row = [W0] * m
    for t in tau.tiles:
        c = cols[t.top]
        if c.axis == "v" and c.j == y0 and c.payload in TOKENS[:5] + ("E",):
            row[c.i - x0] = TOKENS.index(c.payload)
    return row


def target_tileset(bundle, k_bits):
    """The tile set a compiled macro-tile is meant to simulate.

    Colour c of a side stands for the k bits of c, least significant first.
    """
    zero = any(ins[0] == "ZERO" for ins in bundle.instructions)
    values = [0] if zero else range(2 ** k_bits)
    tiles = [Tile(*q) for q in itertools.product(values, repeat=4)]
    return TileSet(f"target-k{k_bits}", 2 ** k_bits, tiles)


# ---------------------------------------------------------------- verification

def cell_options(tau, N, lay=None):
    """Candidate tiles per macro-tile cell (row-major from the bottom row)."""
    coords = tile_coordinates(tau)
    by_coord = {}
    for k, c in enumerate(coords):
        by_coord.setdefault(c, []).append(k)
    out = []
    for y in range(N):
        for x in range(N):
            where = (x, y)
            if lay is not None:
                role = lay.role(x, y)
                if role.kind == "slot-interior" and by_coord.get(role.detail[1]):
                    src = role.detail[1]
                    if not by_coord.get((x, y)):
                        where = src
            out.append(by_coord.get(where, []))
    return out


class _SideCodec:
    """Reads macro-colours of a coordinate tile set as bit strings."""

    def __init__(self, tau, N):
        self.N = N
        self.cols = _parsed_colors(tau)
        self.bottom = {x: [] for x in range(N)}     # v(x,0) colours along bottom/top
        self.left = {y: [] for y in range(N)}       # h(0,y) colours along left/right
        for cid, c in enumerate(self.cols):
            if c.axis == "v" and c.j == 0 and c.i < N:
                self.bottom[c.i].append((cid, c.payload))
            elif c.axis == "h" and c.i == 0 and c.j < N:
                self.left[c.j].append((cid, c.payload))
        self.bit_x = sorted(x for x, opts in self.bottom.items() if any(p in ("0", "1") for _, p in opts))
        self.bit_y = sorted(y for y, opts in self.left.items() if any(p in ("0", "1") for _, p in opts))

    def constraint(self, axis, value):
        table, positions = (self.bottom, self.bit_x) if axis == "v" else (self.left, self.bit_y)
        bits = {pos: (value >> a) & 1 for a, pos in enumerate(positions)}
        if value >> len(positions):
            return None
        out = []
        for pos in range(self.N):
            want = str(bits[pos]) if pos in bits else ""
            out.append({cid for cid, p in table[pos] if p == want})
        return out

    def value(self, colours):
        bits = [self.cols[c].payload for c in colours if self.cols[c].payload in ("0", "1")]
        return sum(int(b) << a for a, b in enumerate(bits))

    def decode(self, mt):
        return (self.value(mt.left), self.value(mt.right), self.value(mt.top), self.value(mt.bottom))


def macro_request(tau, N, colours=None, lay=None, mode="first", budget=None):
    """Solve request for one aligned N x N macro-tile, optionally with given macro-colours."""
    codec = _SideCodec(tau, N)
    boundary = {}
    if colours is not None:
        left, right, top, bottom = colours
        for side, axis, v in (("left", "h", left), ("right", "h", right),
                              ("top", "v", top), ("bottom", "v", bottom)):
            seq = codec.constraint(axis, v)
            if seq is None:
                return None
            boundary[side] = seq
    return SolveRequest(tau, N, N, boundary=boundary, allowed=cell_options(tau, N, lay),
                        mode=mode, budget=budget)


@dataclass
class SimulationReport:
    constructive: str           # pass | fail | unverified, per check
    soundness: str
    faithfulness: str
    missing: list = field(default_factory=list)       # target tiles with no macro-tile
    unmapped: int = 0           # macro-tiles decoding to no target tile
    macro_tiles: int = 0
    pairs_checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self):
        return self.constructive == self.soundness == self.faithfulness == "pass"


def verify_simulation(tau, rho, N, budget=None, lay=None, pairs=4096, seed=0, jobs=1):
    """Check that aligned N x N macro-tiles of ``tau`` behave like the tiles of ``rho``.

    (a) every rho tile has a macro-tile with its macro-colours; (b) every
    valid macro-tile decodes to a rho tile; (c) macro-colours of two
    macro-tiles match exactly when the decoded rho tiles match.  Pairs for (c)
    are all pairs when there are at most ``pairs`` of them, else a seeded
    sample.
    """
    codec = _SideCodec(tau, N)
    report = SimulationReport("pass", "pass", "pass")
    for rt in rho.tiles:
        req = macro_request(tau, N, rt.sides, lay, budget=budget)
        if req is None:
            report.missing.append(rt)
            continue
        res = solve_patch(req, jobs=jobs)
        if res.status == BUDGET:
            report.constructive = "unverified"
        elif res.status != SAT:
            report.missing.append(rt)
    if report.missing:
        report.constructive = "fail"

    res = solve_patch(macro_request(tau, N, None, lay, mode="enumerate", budget=budget), jobs=jobs)
    if res.status == BUDGET:
        report.soundness = report.faithfulness = "unverified"
        return report
    wanted = {t.sides for t in rho.tiles}
    macros = [macro_tile(tau, p) for p in res.patches]
    decoded = [codec.decode(mt) for mt in macros]
    report.macro_tiles = len(macros)
    report.unmapped = sum(1 for q in decoded if q not in wanted)
    if report.unmapped:
        report.soundness = "fail"

    n = len(macros)
    all_pairs = n * n
    if all_pairs <= pairs:
        chosen = [(a, b) for a in range(n) for b in range(n)]
    else:
        rng = random.Random(seed)
        chosen = [(rng.randrange(n), rng.randrange(n)) for _ in range(pairs)]
    for a, b in chosen:
        for d in (Direction.RIGHT, Direction.UP):
            lhs = macro_colors_match(macros[a], macros[b], d)
            rhs = tiles_match(decoded[a], decoded[b], d)
            if lhs != rhs:
                report.mismatches.append((a, b, d.value))
    report.pairs_checked = len(chosen)
    if report.mismatches:
        report.faithfulness = "fail"
    return report


def slot_determinacy(tau, lay):
    """For every used slot: the frame's inward colours admit exactly one interior."""
    cols = tau.color_names
    out = {}
    frame_tiles = {}
    coords = tile_coordinates(tau)
    for k, c in enumerate(coords):
        frame_tiles.setdefault(c, []).append(k)
    for si, slot in enumerate(lay.slots):
        ox, oy = slot.origin
        ring = {}
        for x, y in slot.footprint():
            role = lay.role(x, y)
            if role.kind == "slot-frame" and role.detail[1] is not None:
                (k,) = frame_tiles[(x, y)]
                ring[(x, y)] = (role.detail[1], tau.tiles[k])
        if all(cols[t.sides[_SIDE_OF[side]]].count(":") == 0 for side, t in ring.values()):
            continue        # unused slot, plain skeleton inside
        side_colour = {}
        for (x, y), (side, t) in ring.items():
            side_colour[(x, y)] = t.sides[_SIDE_OF[side]]
        boundary = {
            "left": [side_colour[(ox, oy + 1)], side_colour[(ox, oy + 2)]],
            "right": [side_colour[(ox + 3, oy + 1)], side_colour[(ox + 3, oy + 2)]],
            "bottom": [side_colour[(ox + 1, oy)], side_colour[(ox + 2, oy)]],
            "top": [side_colour[(ox + 1, oy + 3)], side_colour[(ox + 2, oy + 3)]],
        }
        res = solve_patch(SolveRequest(tau, 2, 2, boundary=boundary, mode="count"))
        out[si] = res.count
    return out


# ---------------------------------------------------------------- structural equality

CONDITIONS = ("pos", "father_pos", "wire_bit", "comp_pattern", "fields", "zone_letters")


@dataclass(frozen=True)
class DecodedMacroTile:
    pos: tuple | None               # position inside the father
    father_pos: tuple | None        # father's position inside the grandfather
    wire_bit: int | None            # bit the father's wire carries through this block
    comp_pattern: tuple | None      # computation-zone content
    fields: tuple                   # macro-colour values (left, right, top, bottom)
    zone_letters: tuple | None      # letters of the columns this block oversees
    body: tuple


def decode_macro_tile(tau, body, pos=None, father_pos=None, wire_bit=None, lay=None,
                      zone_letters=None):
    """Decode an aligned macro-tile body; colours must be coordinate colours."""
    N = body.width
    if body.height != N or not body.is_full:
        raise FormatError("macro-tile body must be a full square patch")
    codec = _SideCodec(tau, N)
    mt = macro_tile(tau, body)
    comp = None
    if lay is not None:
        x0, y0, w, h = lay.comp
        comp = tuple(int(v) for v in body.cells[y0:y0 + h, x0:x0 + w].ravel())
    if zone_letters is None and tau.has_letters:
        grid, constant = project_letters(tau, body)
        if not constant:
            raise FormatError("letters are not constant along columns")
        zone_letters = tuple(grid[0])
    return DecodedMacroTile(pos, father_pos, wire_bit, comp, codec.decode(mt),
                            None if zone_letters is None else tuple(zone_letters),
                            tuple(int(v) for v in body.cells.ravel()))


@dataclass
class StructuralReport:
    conditions: dict        # condition name -> equal?
    implied: bool           # all conditions hold, so the bodies must be equal
    bodies_equal: bool

    @property
    def consistent(self):
        return self.bodies_equal or not self.implied

    def __bool__(self):
        return self.implied and self.bodies_equal


def structural_equal(a, b, fields=CONDITIONS):
    conditions = {name: getattr(a, name) == getattr(b, name) for name in fields}
    return StructuralReport(conditions, all(conditions.values()), a.body == b.body)
