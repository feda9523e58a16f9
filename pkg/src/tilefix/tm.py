"""Single-tape Turing machines, a direct simulator, and their space-time
diagrams as Wang tiles.

Symbol 0 is the blank.  A tile row is one step: bottom colours hold the
configuration before the step, top colours the one after.  Vertical colours
carry (symbol, head state or None, read-only bit); horizontal colours carry
the head as it moves to a neighbouring cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import FormatError, InputError, Patch, Tile, TileSet
from .solver import SAT, SolveRequest, solve_patch

MOVES = {"L": -1, "R": 1, "S": 0}


@dataclass(frozen=True)
class TMachine:
    name: str
    nstates: int
    nsymbols: int
    transitions: dict
    start: int = 0
    accept: int = 1
    uses_ro: bool = False

    def __post_init__(self):
        for (q, s, r), (q2, s2, mv) in self.transitions.items():
            if not (0 <= q < self.nstates and 0 <= q2 < self.nstates):
                raise InputError(f"{self.name}: state out of range in {(q, s, r)}")
            if not (0 <= s < self.nsymbols and 0 <= s2 < self.nsymbols):
                raise InputError(f"{self.name}: symbol out of range in {(q, s, r)}")
            if mv not in MOVES:
                raise InputError(f"{self.name}: bad move {mv!r}")
            if q == self.accept:
                raise InputError(f"{self.name}: accept state has an outgoing transition")
            if (r is None) == self.uses_ro:
                raise InputError(f"{self.name}: read-only bit usage inconsistent at {(q, s)}")
        if not (0 <= self.start < self.nstates and 0 <= self.accept < self.nstates):
            raise InputError(f"{self.name}: start/accept out of range")

    def step(self, state, symbol, robit=0):
        return self.transitions.get((state, symbol, robit if self.uses_ro else None))


@dataclass
class RunTrace:
    configs: list           # (tape tuple, head, state) per step
    outcome: str            # accept | reject | step-limit | space-limit
    steps: int

    @property
    def accepted(self):
        return self.outcome == "accept"


def _symbols(word):
    if isinstance(word, str):
        return [int(ch) for ch in word]
    return [int(s) for s in word]


def run_tm(m, word=(), ro_layer=None, max_steps=1000, max_cells=None):
    """Simulate ``m`` on ``word`` written from cell 0, head on cell 0.

    The tape is bounded on the left; ``max_cells`` bounds it on the right.
    Leaving the tape is a space-limit; no applicable transition is a reject.
    """
    tape = _symbols(word)
    for s in tape:
        if not 0 <= s < m.nsymbols:
            raise InputError(f"symbol {s} not in the alphabet of {m.name}")
    if max_cells is not None:
        if len(tape) > max_cells:
            return RunTrace([], "space-limit", 0)
        tape += [0] * (max_cells - len(tape))
    if not tape:
        tape = [0]
    ro = [0] * len(tape) if ro_layer is None else _symbols(ro_layer)
    if len(ro) < len(tape):
        raise InputError("read-only layer shorter than the tape window")
    head, state = 0, m.start
    configs = [(tuple(tape), head, state)]
    steps = 0
    while True:
        if state == m.accept:
            return RunTrace(configs, "accept", steps)
        if steps >= max_steps:
            return RunTrace(configs, "step-limit", steps)
        t = m.step(state, tape[head], ro[head] if head < len(ro) else 0)
        if t is None:
            return RunTrace(configs, "reject", steps)
        state, tape[head], mv = t[0], t[1], t[2]
        head += MOVES[mv]
        steps += 1
        if head < 0 or (max_cells is not None and head >= max_cells):
            return RunTrace(configs, "space-limit", steps)
        if head >= len(tape):
            tape.append(0)
            ro.append(0) if head >= len(ro) else None
        configs.append((tuple(tape), head, state))


# ---------------------------------------------------------------- diagrams

@dataclass
class DiagramTiles:
    """Tile encoding of a machine's space-time diagrams.

    Frame interface: the bottom row's bottom colours spell the input
    configuration, the side walls carry the quiet colour, and the top row may
    only show cells without a head or with the head in the accept state.
    """
    machine: TMachine
    tileset: TileSet
    vertical: dict = field(repr=False)      # (symbol, state|None, robit) -> colour
    horizontal: dict = field(repr=False)    # ("-",) | ("R", q) | ("L", q) -> colour

    @property
    def quiet(self):
        return self.horizontal[("-",)]

    def cell_color(self, symbol, state=None, robit=0):
        return self.vertical[(symbol, state, robit if self.machine.uses_ro else None)]

    def accepting_tops(self):
        acc = self.machine.accept
        return sorted(c for (s, q, r), c in self.vertical.items() if q is None or q == acc)

    def decode(self, color):
        return self._inverse[color]

    def __post_init__(self):
        self._inverse = {c: k for k, c in self.vertical.items()}
        self._inverse.update({c: k for k, c in self.horizontal.items()})


def _content_name(key):
    s, q, r = key
    name = f"s{s}" + ("" if q is None else f"q{q}")
    return name + ("" if r is None else f"r{r}")


def diagram_tiles(m):
    robits = (0, 1) if m.uses_ro else (None,)
    syms = range(m.nsymbols)
    states = range(m.nstates)
    vertical = {}
    for r in robits:
        for s in syms:
            for q in (None, *states):
                vertical[(s, q, r)] = len(vertical)
    horizontal = {("-",): len(vertical)}
    for q in states:
        horizontal[("R", q)] = len(vertical) + len(horizontal)
        horizontal[("L", q)] = len(vertical) + len(horizontal)
    names = [None] * (len(vertical) + len(horizontal))
    for k, c in vertical.items():
        names[c] = _content_name(k)
    for k, c in horizontal.items():
        names[c] = "-" if k == ("-",) else f"{k[0]}{k[1]}"
    quiet = horizontal[("-",)]
    # receivers only for states some move can actually enter
    from_left = sorted({q2 for q2, _, mv in m.transitions.values() if mv == "R"})
    from_right = sorted({q2 for q2, _, mv in m.transitions.values() if mv == "L"})
    tiles = []
    for r in robits:
        for s in syms:
            plain = vertical[(s, None, r)]
            tiles.append(Tile(quiet, quiet, plain, plain))
            acc = vertical[(s, m.accept, r)]
            tiles.append(Tile(quiet, quiet, acc, acc))
            for q in states:
                if q == m.accept:
                    continue
                t = m.transitions.get((q, s, r))
                if t is None:
                    continue
                q2, s2, mv = t
                below = vertical[(s, q, r)]
                if mv == "S":
                    tiles.append(Tile(quiet, quiet, vertical[(s2, q2, r)], below))
                elif mv == "L":
                    tiles.append(Tile(horizontal[("L", q2)], quiet, vertical[(s2, None, r)], below))
                else:
                    tiles.append(Tile(quiet, horizontal[("R", q2)], vertical[(s2, None, r)], below))
            # the head arrives from the left or from the right neighbour
            for q in from_left:
                tiles.append(Tile(horizontal[("R", q)], quiet, vertical[(s, q, r)], plain))
            for q in from_right:
                tiles.append(Tile(quiet, horizontal[("L", q)], vertical[(s, q, r)], plain))
    ts = TileSet(f"diagram-{m.name}", len(names), tiles, names)
    return DiagramTiles(m, ts, vertical, horizontal)


def frame_request(dt, word, width, height, ro_layer=None, mode="first", budget=None):
    """SolveRequest for a width x height frame with ``word`` on the bottom row."""
    m = dt.machine
    tape = _symbols(word)
    if len(tape) > width:
        return None
    tape += [0] * (width - len(tape))
    ro = [0] * width if ro_layer is None else _symbols(ro_layer)[:width]
    if len(ro) < width:
        raise InputError("read-only layer shorter than the frame")
    bottom = [dt.cell_color(tape[x], m.start if x == 0 else None, ro[x]) for x in range(width)]
    tops = dt.accepting_tops()
    boundary = {
        "bottom": bottom,
        "left": [dt.quiet] * height,
        "right": [dt.quiet] * height,
        "top": [tops] * width,
    }
    return SolveRequest(dt.tileset, width, height, boundary=boundary, mode=mode, budget=budget)


def frame_completable(dt, word, size, ro_layer=None, budget=None, height=None):
    """(completable, patch) for a size x size frame (height overridable)."""
    req = frame_request(dt, word, size, height or size, ro_layer, budget=budget)
    if req is None:
        return False, None
    res = solve_patch(req)
    if res.status not in (SAT, "unsat"):
        raise RuntimeError(f"frame search ran out of budget ({res.status})")
    return res.status == SAT, (res.patches[0] if res.patches else None)


def decode_rows(dt, patch):
    """Configurations (tape, head, state) read off a completed frame, bottom up."""
    sides = dt.tileset.sides
    rows = [[int(sides[t, 3]) for t in patch.cells[0]]]
    rows += [[int(sides[t, 2]) for t in patch.cells[y]] for y in range(patch.height)]
    configs = []
    for row in rows:
        contents = [dt.decode(c) for c in row]
        heads = [(x, q) for x, (s, q, r) in enumerate(contents) if q is not None]
        if len(heads) != 1:
            raise FormatError(f"row with {len(heads)} heads")
        x, q = heads[0]
        configs.append((tuple(s for s, _, _ in contents), x, q))
    return configs


# ---------------------------------------------------------------- determinacy

@dataclass
class DeterminacyReport:
    ok: bool
    blocks: int
    counterexample: tuple | None = None     # (ring, block, other block)


def _ring_and_block(cells, x, y):
    ring = tuple(int(cells[y + dy, x + dx]) for dy in range(-1, 3) for dx in range(-1, 3)
                 if not (0 <= dx <= 1 and 0 <= dy <= 1))
    block = tuple(int(cells[y + dy, x + dx]) for dy in (0, 1) for dx in (0, 1))
    return ring, block


def check_determinacy(tiles, samples=None, budget=None):
    """Does the 12-tile ring around a 2x2 block fix the block?

    With ``samples`` (valid patches) only the rings occurring in them are
    compared.  Otherwise the check is exhaustive: the ring touches the block
    only through its eight outer edge colours, so two valid blocks can share a
    ring exactly when they share those colours and one of them extends to a
    valid 4x4 patch.
    """
    ts = tiles.tileset if isinstance(tiles, DiagramTiles) else tiles
    if samples is not None:
        seen = {}
        for p in samples:
            for y in range(1, p.height - 2):
                for x in range(1, p.width - 2):
                    ring, block = _ring_and_block(p.cells, x, y)
                    other = seen.setdefault(ring, block)
                    if other != block:
                        return DeterminacyReport(False, len(seen), (ring, other, block))
        return DeterminacyReport(True, len(seen))

    res = solve_patch(SolveRequest(ts, 2, 2, mode="enumerate", budget=budget))
    if res.status == "budget-exhausted":
        raise RuntimeError("determinacy enumeration ran out of budget")
    groups = {}
    for p in res.patches:
        c = p.cells
        a, b, d, e = (ts.tiles[int(c[0, 0])], ts.tiles[int(c[0, 1])],
                      ts.tiles[int(c[1, 0])], ts.tiles[int(c[1, 1])])
        edge = (a.bottom, b.bottom, d.top, e.top, a.left, d.left, b.right, e.right)
        groups.setdefault(edge, []).append(p)
    for blocks in groups.values():
        if len(blocks) < 2:
            continue
        fixed = Patch.empty(4, 4).with_cells(
            {(1 + x, 1 + y): int(blocks[0].cells[y, x]) for y in (0, 1) for x in (0, 1)})
        ext = solve_patch(SolveRequest(ts, 4, 4, fixed=fixed, budget=budget))
        if ext.status == "budget-exhausted":
            raise RuntimeError("determinacy extension ran out of budget")
        if ext.status == "sat":
            ring, block = _ring_and_block(ext.patches[0].cells, 1, 1)
            other = tuple(int(v) for v in blocks[1].cells.ravel())
            return DeterminacyReport(False, len(res.patches), (ring, block, other))
    return DeterminacyReport(True, len(res.patches))


def inject_duplicate(ts, index=0, tag="dup"):
    """Copy of ``ts`` with tile ``index`` cloned under a distinguishing letter."""
    t = ts.tiles[index]
    return ts.with_tiles([Tile(t.left, t.right, t.top, t.bottom, tag)], name=ts.name + "-mutant")


# ---------------------------------------------------------------- text format

def parse_machine(text):
    header = None
    trans = {}
    start = accept = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = line.split()
        try:
            if f[0] == "tm":
                header = (f[1], int(f[2]), int(f[3]), len(f) > 4 and f[4] == "ro")
            elif f[0] == "t":
                if header is None:
                    raise FormatError("transition before header")
                arrow = f.index("->")
                lhs, rhs = f[1:arrow], f[arrow + 1:]
                ro = header[3]
                if len(lhs) != (3 if ro else 2) or len(rhs) != 3:
                    raise FormatError("malformed transition")
                key = (int(lhs[0]), int(lhs[1]), int(lhs[2]) if ro else None)
                if key in trans:
                    raise InputError(f"nondeterministic: two transitions for {key}")
                trans[key] = (int(rhs[0]), int(rhs[1]), rhs[2])
            elif f[0] == "accept":
                accept = int(f[1])
            elif f[0] == "start":
                start = int(f[1])
            else:
                raise FormatError(f"unknown record {f[0]!r}")
        except (ValueError, IndexError):
            raise FormatError(f"line {lineno}: malformed record") from None
    if header is None or start is None or accept is None:
        raise FormatError("machine needs tm, start and accept records")
    name, nstates, nsymbols, ro = header
    return TMachine(name, nstates, nsymbols, trans, start, accept, ro)


def format_machine(m):
    lines = [f"tm {m.name} {m.nstates} {m.nsymbols}" + (" ro" if m.uses_ro else "")]
    for (q, s, r), (q2, s2, mv) in sorted(m.transitions.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0)):
        lhs = f"{q} {s}" + (f" {r}" if m.uses_ro else "")
        lines.append(f"t {lhs} -> {q2} {s2} {mv}")
    lines += [f"start {m.start}", f"accept {m.accept}"]
    return "\n".join(lines) + "\n"


def read_machine(path):
    with open(path) as f:
        return parse_machine(f.read())


# ---------------------------------------------------------------- small corpus

def _machine(name, nstates, nsymbols, rows, start=0, accept=None, ro=False):
    trans = {}
    for row in rows:
        if ro:
            q, s, r, q2, s2, mv = row
        else:
            (q, s, q2, s2, mv), r = row, None
        trans[(q, s, r)] = (q2, s2, mv)
    return TMachine(name, nstates, nsymbols, trans, start,
                    nstates - 1 if accept is None else accept, ro)


def accept_immediately():
    return TMachine("accept-now", 1, 2, {}, start=0, accept=0)


def scan_right():
    """Moves right over non-blanks and accepts on the first blank."""
    return _machine("scan-right", 2, 2, [(0, 1, 0, 1, "R"), (0, 0, 1, 0, "S")])


def corpus():
    """Deterministic machines with at most four states, alphabet {0, 1, 2}."""
    ms = [
        accept_immediately(),
        scan_right(),
        # even number of 1s before the first blank; a 2 rejects
        _machine("even-ones", 3, 3, [
            (0, 1, 1, 1, "R"), (1, 1, 0, 1, "R"),
            (0, 0, 2, 0, "S"), (0, 2, 0, 2, "R"), (1, 2, 1, 2, "R")]),
        # accepts iff the word contains "11"
        _machine("has-11", 3, 3, [
            (0, 1, 1, 1, "R"), (0, 2, 0, 2, "R"),
            (1, 1, 2, 1, "S"), (1, 2, 0, 2, "R")]),
        # marks cell 0, walks over the 1s to the end, returns to the mark
        _machine("bounce", 4, 3, [
            (0, 1, 1, 2, "R"), (0, 0, 3, 0, "S"),
            (1, 1, 1, 1, "R"), (1, 0, 2, 0, "L"),
            (2, 1, 2, 1, "L"), (2, 2, 3, 2, "S")]),
        # never accepts: shuttles between two cells
        _machine("shuttle", 3, 2, [
            (0, 0, 1, 0, "R"), (0, 1, 1, 1, "R"), (1, 0, 0, 0, "L"), (1, 1, 0, 1, "L")]),
        # first move is to the left: always leaves the tape
        _machine("fall-left", 2, 2, [(0, 0, 0, 0, "L"), (0, 1, 0, 1, "L")]),
        # rewrites 1s into 2s, accepts at the first blank
        _machine("rewrite", 2, 3, [(0, 1, 0, 2, "R"), (0, 2, 0, 2, "R"), (0, 0, 1, 0, "S")]),
    ]
    return {m.name: m for m in ms}


def ro_copy_check():
    """Accepts iff the read-only bit under every non-blank cell equals (symbol == 2)."""
    rows = []
    for s in (1, 2):
        rows.append((0, s, int(s == 2), 0, s, "R"))
    rows += [(0, 0, 0, 1, 0, "S"), (0, 0, 1, 1, 0, "S")]
    return _machine("ro-check", 2, 3, rows, ro=True)
