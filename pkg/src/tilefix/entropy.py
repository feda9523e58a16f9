"""Entropy of tile sets and the red/blue density recursion.

Every cell of a level-k macro-tile is a level-(k-1) macro-tile, coloured red
or blue: an alpha x alpha bottom-left corner is always red, a beta x beta
top-right corner is always blue, slot cells are half red and half blue, and
all other cells take the colour of the macro-tile.  nu_R(k) and nu_B(k) are
the fractions of red ground cells in red and blue level-k macro-tiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import ConfigurationError, InputError, SizingError, Tile, TileSet
from .fixpoint import ZoomSchedule
from .solver import count_rectangles

RED, BLUE = 1, 0


@dataclass(frozen=True)
class ConstantSchedule:
    """N_k = n at every level; for expansions small enough to draw."""
    n: int

    def N(self, k):
        return self.n

    def L(self, k):
        return self.n ** k


@dataclass(frozen=True)
class GeometricSchedule:
    """N_k = base * ratio**k."""
    base: int = 10
    ratio: int = 2

    def N(self, k):
        return self.base * self.ratio ** k

    def L(self, k):
        return math.prod(self.N(i) for i in range(1, k + 1))


def _per_level(value):
    if callable(value):
        return value
    return lambda k: value


@dataclass
class RedBlueParams:
    schedule: object = field(default_factory=ZoomSchedule)
    alpha: object = 1           # int or level -> int
    beta: object = 1
    slots: object = 0           # fraction of slot cells, Fraction or level -> Fraction

    def corners(self, k):
        n = self.schedule.N(k)
        a, b = int(_per_level(self.alpha)(k)), int(_per_level(self.beta)(k))
        if a < 1 or b < 1:
            raise ConfigurationError(f"level {k}: both corners must be nonempty (alpha={a}, beta={b})")
        if a + b >= n:
            raise ConfigurationError(f"level {k}: corners {a} and {b} overlap in N={n}")
        return n, a, b

    def coefficients(self, k):
        """(red in red, blue in red, red in blue, blue in blue) child fractions at level k."""
        n, a, b = self.corners(k)
        s = Fraction(_per_level(self.slots)(k))
        if not 0 <= s < 1:
            raise ConfigurationError(f"level {k}: slot fraction {s} outside [0, 1)")
        area = Fraction(n * n)
        half = s / 2
        rest = 1 - s
        rr = rest * (area - b * b) / area + half
        br = rest * b * b / area + half
        rb = rest * a * a / area + half
        bb = rest * (area - a * a) / area + half
        return rr, br, rb, bb


@dataclass(frozen=True)
class DensityPair:
    nu_R: Fraction
    nu_B: Fraction


def _step(params, k, pair):
    rr, br, rb, bb = params.coefficients(k)
    return DensityPair(rr * pair.nu_R + br * pair.nu_B, rb * pair.nu_R + bb * pair.nu_B)


def density_trajectory(params, k):
    pair = DensityPair(Fraction(1), Fraction(0))
    out = [pair]
    for level in range(1, k + 1):
        pair = _step(params, level, pair)
        out.append(pair)
    return out


def density_recursion(params, k):
    if k < 0:
        raise InputError("level must be >= 0")
    return density_trajectory(params, k)[-1]


def slot_fraction(lay):
    """Share of a macro-tile's cells taken by diversification slots."""
    return Fraction(16 * len(lay.slots), lay.N * lay.N)


_MAX_CELLS = 1 << 24


def expand_colors(params, k, colour=RED):
    """Red/blue map of a level-k macro-tile; [y, x] with y growing upward, 1 = red."""
    side = math.prod(params.schedule.N(i) for i in range(1, k + 1))
    if side * side > _MAX_CELLS:
        raise SizingError(f"a {side}x{side} map is too large to expand")
    if any(Fraction(_per_level(params.slots)(i)) for i in range(1, k + 1)):
        raise ConfigurationError("expansion draws corner rules only; set slots to 0")
    maps = {RED: np.ones((1, 1), dtype=np.uint8), BLUE: np.zeros((1, 1), dtype=np.uint8)}
    for level in range(1, k + 1):
        n, a, b = params.corners(level)
        nxt = {}
        for c in (RED, BLUE):
            grid = np.full((n, n), c, dtype=np.uint8)
            grid[:a, :a] = RED
            grid[n - b:, n - b:] = BLUE
            nxt[c] = np.block([[maps[int(v)] for v in row] for row in grid])
        maps = nxt
    return maps[colour]


# ---------------------------------------------------------------- beta scheduling

@dataclass(frozen=True)
class RERealEnumerator:
    """Rationals approaching h from above; level k sees the first k + 1 of them.

    The stream is normalised to be non-increasing by running minima.
    """
    source: object              # index -> rational

    @classmethod
    def constant(cls, h):
        h = Fraction(h)
        return cls(lambda i: h)

    @classmethod
    def from_list(cls, values):
        values = [Fraction(v) for v in values]
        if not values:
            raise InputError("empty enumeration")
        return cls(lambda i: values[min(i, len(values) - 1)])

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_list([line.strip() for line in fh if line.strip()])

    def approximation(self, k):
        return min(Fraction(self.source(i)) for i in range(k + 1))


@dataclass
class ScheduleRow:
    k: int
    beta: int
    nu_R: Fraction
    nu_B: Fraction
    approx_h: Fraction


def _beta_max(n):
    return max(1, n // 10)


def _check_growth(schedule, k_max):
    for k in range(1, k_max + 1):
        if schedule.N(k + 1) < 2 * schedule.N(k):
            raise ConfigurationError("beta scheduling needs N_{k+1} >= 2 N_k")


def beta_schedule(h, schedule, k_max, alpha=1):
    """Pick beta_k level by level so nu_R(k) comes down toward the current approximation of h.

    Every beta >= 1 lowers nu_R, so nu_R only decreases.  beta_k is the
    largest value in [1, max(1, N_k // 10)] that keeps nu_R(k) at least
    ``tail`` above the approximation, where ``tail`` bounds what later levels
    will take off even at beta = 1.
    """
    _check_growth(schedule, k_max)
    pair = DensityPair(Fraction(1), Fraction(0))
    rows = []
    for k in range(1, k_max + 1):
        n = schedule.N(k)
        target = h.approximation(k)
        gap = pair.nu_R - pair.nu_B
        tail = Fraction(4, 3) * gap / (schedule.N(k + 1) ** 2)
        bmax = _beta_max(n)
        if gap <= 0:
            beta = 1
        else:
            room = (pair.nu_R - target - tail) * n * n / gap
            beta = min(bmax, max(1, math.isqrt(max(0, math.floor(room)))))
        beta = min(beta, n - 1 - alpha)
        params = RedBlueParams(schedule, alpha, beta)
        pair = _step(params, k, pair)
        rows.append(ScheduleRow(k, beta, pair.nu_R, pair.nu_B, target))
    return rows


def predicted_level(h, schedule, tol, k_max, alpha=1):
    """First level at which nu_R is within ``tol`` above h when every beta is maximal."""
    pair = DensityPair(Fraction(1), Fraction(0))
    h = Fraction(h)
    for k in range(1, k_max + 1):
        n = schedule.N(k)
        params = RedBlueParams(schedule, alpha, min(_beta_max(n), n - 1 - alpha))
        pair = _step(params, k, pair)
        if pair.nu_R - h < tol:
            return k
    return None


# ---------------------------------------------------------------- doubled shift

def doubled_entropy(d):
    """Entropy (bits per cell) after doubling every red tile: the red density itself."""
    d = Fraction(d)
    if not 0 <= d <= 1:
        raise InputError("density must lie in [0, 1]")
    return d


def boundary_bound(params, k, bits_per_cell=1):
    """log2(#level-k macro-tiles) / L_k^2 when a macro-tile is fixed by its colour and border."""
    side = math.prod(params.schedule.N(i) for i in range(1, k + 1))
    return (1 + 4 * side * bits_per_cell) / side ** 2


def doubled_map_tileset(colour_map):
    """Tile set whose only full-size patches spell ``colour_map`` with two copies per red cell."""
    grid = np.asarray(colour_map)
    height, width = grid.shape
    h_ids = {}
    v_ids = {}

    def hid(x, y):
        return h_ids.setdefault((x, y), len(h_ids) + len(v_ids))

    def vid(x, y):
        return v_ids.setdefault((x, y), len(h_ids) + len(v_ids))

    tiles = []
    for y in range(height):
        for x in range(width):
            sides = (hid(x, y), hid(x + 1, y), vid(x, y + 1), vid(x, y))
            letters = ("r0", "r1") if grid[y, x] == RED else ("b",)
            tiles.extend(Tile(*sides, letter) for letter in letters)
    return TileSet("doubled-map", len(h_ids) + len(v_ids), tiles)


def doubled_pattern_entropy(colour_map, budget=None, jobs=1):
    """log2(number of full-size patches) / cells on the doubled map, counted by the solver."""
    grid = np.asarray(colour_map)
    ts = doubled_map_tileset(grid)
    res = count_rectangles(ts, grid.shape[1], grid.shape[0], budget=budget, jobs=jobs)
    if res.count is None:
        return None
    return math.log2(res.count) / grid.size
