"""Wang tiles, tile sets, patches and macro-tiles.

Sides are stored in the order (left, right, top, bottom).  Patch cells are
indexed ``cells[y, x]`` with y growing upwards, so row 0 is the bottom row.
The text format prints the top row first, the way the grid is drawn.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LEFT, RIGHT, TOP, BOTTOM = range(4)
UNASSIGNED = -1


class TilingError(Exception):
    """Base class for all errors raised by the package."""


class InputError(TilingError):
    pass


class BoundaryError(TilingError):
    pass


class ConfigurationError(TilingError):
    pass


class SizingError(TilingError):
    pass


class FormatError(TilingError):
    pass


class Direction(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"

    @property
    def opposite(self):
        return _OPPOSITE[self]

    @property
    def delta(self):
        return _DELTA[self]


_OPPOSITE = {
    Direction.LEFT: Direction.RIGHT,
    Direction.RIGHT: Direction.LEFT,
    Direction.UP: Direction.DOWN,
    Direction.DOWN: Direction.UP,
}
_DELTA = {
    Direction.LEFT: (-1, 0),
    Direction.RIGHT: (1, 0),
    Direction.UP: (0, 1),
    Direction.DOWN: (0, -1),
}
# side of the first tile that faces the second one, and the side it must equal
_FACING = {
    Direction.RIGHT: (RIGHT, LEFT),
    Direction.LEFT: (LEFT, RIGHT),
    Direction.UP: (TOP, BOTTOM),
    Direction.DOWN: (BOTTOM, TOP),
}


class Tile(NamedTuple):
    left: int
    right: int
    top: int
    bottom: int
    letter: str | None = None

    @property
    def sides(self):
        return (self.left, self.right, self.top, self.bottom)


def tiles_match(a, b, direction):
    """True iff ``b`` placed next to ``a`` in ``direction`` shares the colour."""
    mine, theirs = _FACING[direction]
    return a[mine] == b[theirs]


class TileSet:
    """An ordered, duplicate-free list of Wang tiles over ``ncolors`` colours.

    ``color_names`` is optional metadata; compiled tile sets use it to record
    what each colour encodes (coordinates, wire bits, diagram content).
    """

    def __init__(self, name, ncolors, tiles, color_names=None):
        self.name = str(name)
        self.ncolors = int(ncolors)
        self.tiles = tuple(t if isinstance(t, Tile) else Tile(*t) for t in tiles)
        self.color_names = tuple(color_names) if color_names is not None else None
        if self.color_names is not None and len(self.color_names) != self.ncolors:
            raise InputError("color_names length differs from ncolors")
        seen = {}
        for i, t in enumerate(self.tiles):
            for c in t.sides:
                if not 0 <= c < self.ncolors:
                    raise InputError(f"tile {i} uses colour {c} outside [0, {self.ncolors})")
            if t in seen:
                raise InputError(f"tile {i} duplicates tile {seen[t]}")
            seen[t] = i
        self._index = seen
        self.sides = np.array([t.sides for t in self.tiles], dtype=np.int32).reshape(-1, 4)
        self.sides.flags.writeable = False

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __getitem__(self, i):
        return self.tiles[i]

    def __eq__(self, other):
        return (isinstance(other, TileSet) and self.name == other.name
                and self.ncolors == other.ncolors and self.tiles == other.tiles
                and self.color_names == other.color_names)

    def __repr__(self):
        return f"TileSet({self.name!r}, ncolors={self.ncolors}, ntiles={len(self.tiles)})"

    def index(self, tile):
        return self._index[tile]

    @property
    def has_letters(self):
        return any(t.letter is not None for t in self.tiles)

    def color_id(self, name):
        if self.color_names is None:
            raise ConfigurationError("tile set has no colour names")
        if not hasattr(self, "_color_ids"):
            self._color_ids = {n: i for i, n in enumerate(self.color_names)}
        return self._color_ids[name]

    def without(self, indices, name=None):
        drop = set(indices)
        kept = [t for i, t in enumerate(self.tiles) if i not in drop]
        return TileSet(name or self.name, self.ncolors, kept, self.color_names)

    def with_tiles(self, extra, name=None):
        return TileSet(name or self.name, self.ncolors, list(self.tiles) + list(extra),
                       self.color_names)


class Patch:
    """Rectangular, possibly partial assignment of tile indices.

    Immutable: ``cells`` is a read-only int32 array, -1 marks a free cell.
    """

    __slots__ = ("cells",)

    def __init__(self, cells):
        arr = np.array(cells, dtype=np.int32, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("patch needs a non-empty 2D cell array")
        arr.flags.writeable = False
        self.cells = arr

    @classmethod
    def empty(cls, width, height):
        return cls(np.full((height, width), UNASSIGNED, dtype=np.int32))

    @classmethod
    def from_dict(cls, width, height, assigned):
        arr = np.full((height, width), UNASSIGNED, dtype=np.int32)
        for (x, y), t in assigned.items():
            if not (0 <= x < width and 0 <= y < height):
                raise InputError(f"cell {(x, y)} outside {width}x{height}")
            arr[y, x] = t
        return cls(arr)

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def height(self):
        return self.cells.shape[0]

    def __getitem__(self, xy):
        x, y = xy
        return int(self.cells[y, x])

    def __eq__(self, other):
        return isinstance(other, Patch) and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes()))

    def __repr__(self):
        return f"Patch({self.width}x{self.height})"

    @property
    def is_full(self):
        return bool((self.cells >= 0).all())

    def assigned(self):
        ys, xs = np.nonzero(self.cells >= 0)
        return {(int(x), int(y)): int(self.cells[y, x]) for x, y in zip(xs, ys)}

    def with_cells(self, assigned):
        arr = self.cells.copy()
        for (x, y), t in assigned.items():
            arr[y, x] = t
        return Patch(arr)

    def crop(self, x, y, width, height):
        return Patch(self.cells[y:y + height, x:x + width])


def _check_indices(ts, p):
    bad = (p.cells >= len(ts)) | (p.cells < UNASSIGNED)
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise InputError(f"tile index {p.cells[y, x]} at {(int(x), int(y))} not in tile set")


def validate_patch(ts, p):
    """List of mismatching adjacent cell pairs ``((x, y), (x2, y2))``."""
    _check_indices(ts, p)
    cells = p.cells
    sides = ts.sides
    out = []
    if p.width > 1:
        a, b = cells[:, :-1], cells[:, 1:]
        both = (a >= 0) & (b >= 0)
        bad = both & (sides[np.maximum(a, 0), RIGHT] != sides[np.maximum(b, 0), LEFT])
        out += [((int(x), int(y)), (int(x) + 1, int(y))) for y, x in np.argwhere(bad)]
    if p.height > 1:
        a, b = cells[:-1, :], cells[1:, :]
        both = (a >= 0) & (b >= 0)
        bad = both & (sides[np.maximum(a, 0), TOP] != sides[np.maximum(b, 0), BOTTOM])
        out += [((int(x), int(y)), (int(x), int(y) + 1)) for y, x in np.argwhere(bad)]
    out.sort()
    return out


def occurrences(haystack, needle):
    """All offsets (dx, dy) where ``needle`` equals the sub-rectangle of ``haystack``."""
    if not (haystack.is_full and needle.is_full):
        raise InputError("occurrences needs fully assigned patches")
    h, w = needle.cells.shape
    if h > haystack.height or w > haystack.width:
        return []
    windows = np.lib.stride_tricks.sliding_window_view(haystack.cells, (h, w))
    hits = (windows == needle.cells).all(axis=(2, 3))
    return [(int(dx), int(dy)) for dy, dx in np.argwhere(hits)]


@dataclass(frozen=True)
class MacroTile:
    """An n x n block together with the colour sequences read off its sides.

    Left and right sequences run bottom to top, top and bottom run left to right.
    """
    n: int
    body: Patch
    left: tuple
    right: tuple
    top: tuple
    bottom: tuple

    @property
    def macro_colors(self):
        return (self.left, self.right, self.top, self.bottom)


def macro_tile(ts, body):
    if body.width != body.height:
        raise InputError("macro-tile body must be square")
    if not body.is_full:
        raise InputError("macro-tile body must be fully assigned")
    if validate_patch(ts, body):
        raise InputError("macro-tile body has mismatching neighbours")
    s = ts.sides
    c = body.cells
    return MacroTile(
        n=body.width, body=body,
        left=tuple(int(v) for v in s[c[:, 0], LEFT]),
        right=tuple(int(v) for v in s[c[:, -1], RIGHT]),
        top=tuple(int(v) for v in s[c[-1, :], TOP]),
        bottom=tuple(int(v) for v in s[c[0, :], BOTTOM]),
    )


def macro_colors_match(a, b, direction):
    mine, theirs = _FACING[direction]
    return a.macro_colors[mine] == b.macro_colors[theirs]


def split_into_blocks(ts, p, n, offset=(0, 0), crop=False):
    """Cut ``p`` along the lattice of lines x = ox (mod n), y = oy (mod n).

    Returns a grid ``blocks[by][bx]`` of MacroTiles.  Partial blocks at the
    border raise BoundaryError unless ``crop`` is set, in which case they are
    dropped.
    """
    if n < 1:
        raise InputError("block size must be positive")
    if not p.is_full:
        raise InputError("split_into_blocks needs a fully assigned patch")
    ox, oy = offset[0] % n, offset[1] % n
    if not crop:
        for axis, o, size in (("x", ox, p.width), ("y", oy, p.height)):
            if o:
                raise BoundaryError(f"incomplete block before {axis}={o} (block 0 along {axis})")
            if (size - o) % n:
                idx = (size - o) // n
                raise BoundaryError(
                    f"incomplete block {idx} along {axis}: {(size - o) % n} of {n} cells")
    nx = (p.width - ox) // n
    ny = (p.height - oy) // n
    grid = []
    for by in range(ny):
        row = []
        for bx in range(nx):
            x, y = ox + bx * n, oy + by * n
            row.append(macro_tile(ts, p.crop(x, y, n, n)))
        grid.append(row)
    return grid


def join_blocks(grid):
    """Inverse of split_into_blocks for a rectangular grid of blocks."""
    rows = [np.hstack([mt.body.cells for mt in row]) for row in grid]
    return Patch(np.vstack(rows))


def project_letters(ts, p):
    """Letter grid ``[y][x]`` and whether every column carries one letter."""
    if not ts.has_letters:
        raise ConfigurationError(f"tile set {ts.name!r} has no letter projection")
    if not p.is_full:
        raise InputError("project_letters needs a fully assigned patch")
    _check_indices(ts, p)
    grid = [[ts.tiles[t].letter for t in row] for row in p.cells]
    constant = all(len({grid[y][x] for y in range(p.height)}) == 1 for x in range(p.width))
    return grid, constant


def letters_forced_vertically(ts):
    """True iff any two vertically matching tiles carry the same letter."""
    by_bottom = {}
    for t in ts.tiles:
        by_bottom.setdefault(t.bottom, set()).add(t.letter)
    return all(by_bottom.get(t.top, {t.letter}) <= {t.letter} for t in ts.tiles)


def with_letter_layer(ts, alphabet, name=None):
    """Product of ``ts`` with a letter carried unchanged from bottom to top.

    Every tile appears once per letter; the letter is appended to its top and
    bottom colours, so matching forces one letter per column.
    """
    alphabet = [str(a) for a in alphabet]
    n = ts.ncolors
    k = len(alphabet)
    base = ts.color_names or [str(c) for c in range(n)]
    names = list(base) + [f"{base[c]}|{a}" for c in range(n) for a in alphabet]
    tiles = []
    for t in ts.tiles:
        if t.letter is not None:
            raise ConfigurationError(f"tile set {ts.name!r} already carries letters")
        for i, a in enumerate(alphabet):
            tiles.append(Tile(t.left, t.right, n + t.top * k + i, n + t.bottom * k + i, a))
    return TileSet(name or f"{ts.name}-letters", n + n * k, tiles, names)


# ---------------------------------------------------------------- text formats

def _records(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_tileset(text):
    """Parse the ``tileset``/``tile`` format; ``color <id> <name>`` lines are optional."""
    header = None
    tiles = []
    names = {}
    for lineno, f in _records(text):
        try:
            if f[0] == "tileset":
                if header is not None or len(f) != 4:
                    raise FormatError("bad tileset header")
                header = (f[1], int(f[2]), int(f[3]))
            elif f[0] == "tile":
                if header is None:
                    raise FormatError("tile before header")
                if int(f[1]) != len(tiles):
                    raise FormatError(f"tile id {f[1]} out of order")
                letter = None
                if len(f) == 7:
                    if not f[6].startswith("letter="):
                        raise FormatError(f"unknown tile attribute {f[6]!r}")
                    letter = f[6][len("letter="):]
                elif len(f) != 6:
                    raise FormatError("tile needs id and four colours")
                tiles.append(Tile(int(f[2]), int(f[3]), int(f[4]), int(f[5]), letter))
            elif f[0] == "color":
                names[int(f[1])] = f[2]
            else:
                raise FormatError(f"unknown record {f[0]!r}")
        except ValueError as e:
            raise FormatError(f"line {lineno}: {e}") from None
        except FormatError as e:
            raise FormatError(f"line {lineno}: {e}") from None
    if header is None:
        raise FormatError("missing tileset header")
    name, ncolors, ntiles = header
    if ntiles != len(tiles):
        raise FormatError(f"header announces {ntiles} tiles, found {len(tiles)}")
    color_names = None
    if names:
        if sorted(names) != list(range(ncolors)):
            raise FormatError("colour names must cover every colour id")
        color_names = [names[i] for i in range(ncolors)]
    try:
        return TileSet(name, ncolors, tiles, color_names)
    except InputError as e:
        raise FormatError(str(e)) from None


def format_tileset(ts):
    lines = [f"tileset {ts.name} {ts.ncolors} {len(ts)}"]
    if ts.color_names is not None:
        lines += [f"color {i} {n}" for i, n in enumerate(ts.color_names)]
    for i, t in enumerate(ts.tiles):
        s = f"tile {i} {t.left} {t.right} {t.top} {t.bottom}"
        if t.letter is not None:
            s += f" letter={t.letter}"
        lines.append(s)
    return "\n".join(lines) + "\n"


def parse_patch(text):
    recs = list(_records(text))
    if not recs or recs[0][1][0] != "patch" or len(recs[0][1]) != 3:
        raise FormatError("missing patch header")
    try:
        w, h = int(recs[0][1][1]), int(recs[0][1][2])
    except ValueError:
        raise FormatError("bad patch size") from None
    rows = recs[1:]
    if len(rows) != h:
        raise FormatError(f"expected {h} rows, found {len(rows)}")
    arr = np.full((h, w), UNASSIGNED, dtype=np.int32)
    for i, (lineno, f) in enumerate(rows):
        if len(f) != w:
            raise FormatError(f"line {lineno}: expected {w} fields")
        y = h - 1 - i
        for x, tok in enumerate(f):
            if tok != ".":
                try:
                    arr[y, x] = int(tok)
                except ValueError:
                    raise FormatError(f"line {lineno}: bad cell {tok!r}") from None
    return Patch(arr)


def format_patch(p):
    lines = [f"patch {p.width} {p.height}"]
    for y in range(p.height - 1, -1, -1):
        lines.append(" ".join("." if t < 0 else str(int(t)) for t in p.cells[y]))
    return "\n".join(lines) + "\n"


def read_tileset(path):
    with open(path) as f:
        return parse_tileset(f.read())


def read_patch(path):
    with open(path) as f:
        return parse_patch(f.read())
