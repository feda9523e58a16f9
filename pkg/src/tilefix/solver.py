"""Completing, counting and enumerating finite tilings; torus search; strip entropy."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import kernels
from .core import BOTTOM, LEFT, RIGHT, TOP, InputError, Patch, TileSet, Tile

SAT, UNSAT, BUDGET = "sat", "unsat", "budget-exhausted"
_STATUS = {kernels.SAT: SAT, kernels.UNSAT: UNSAT, kernels.BUDGET: BUDGET}
_MODES = {"first": kernels.FIRST, "count": kernels.COUNT, "enumerate": kernels.ENUMERATE}
_SIDE_INDEX = {"left": LEFT, "right": RIGHT, "top": TOP, "bottom": BOTTOM}


@dataclass
class SolveRequest:
    """What to solve.

    ``boundary`` maps a side name to a sequence with one entry per cell along
    that side (bottom to top, or left to right).  An entry is a colour, None
    (free) or a collection of allowed colours.  ``allowed`` optionally gives a
    candidate tile list per cell (row-major from the bottom row), which callers
    with extra knowledge, such as known coordinates, use to keep domains small.
    """
    tileset: TileSet
    width: int
    height: int
    fixed: Patch | None = None
    boundary: dict = field(default_factory=dict)
    mode: str = "first"
    budget: int | None = None
    wrap: bool = False
    allowed: list | None = None
    most_constrained: bool = False

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise InputError("width and height must be positive")
        if self.mode not in _MODES:
            raise InputError(f"unknown mode {self.mode!r}")
        if self.fixed is not None:
            if (self.fixed.width, self.fixed.height) != (self.width, self.height):
                raise InputError("fixed patch size differs from the request")
            if (self.fixed.cells >= len(self.tileset)).any():
                raise InputError("fixed patch uses a tile index outside the tile set")
        for side, seq in self.boundary.items():
            if side not in _SIDE_INDEX:
                raise InputError(f"unknown side {side!r}")
            n = self.height if side in ("left", "right") else self.width
            if len(seq) != n:
                raise InputError(f"{side} boundary has {len(seq)} entries, expected {n}")
        if self.allowed is not None and len(self.allowed) != self.width * self.height:
            raise InputError("allowed needs one entry per cell")


@dataclass
class SolveResult:
    status: str
    count: int = 0
    patches: list = field(default_factory=list)
    nodes: int = 0


def _color_filter(entry):
    if entry is None:
        return None
    if isinstance(entry, (int, np.integer)):
        return {int(entry)}
    return {int(c) for c in entry}


def _candidates(req):
    ts = req.tileset
    w, h = req.width, req.height
    sides = ts.sides
    everything = np.arange(len(ts), dtype=np.int32)
    per_cell = []
    for c in range(w * h):
        x, y = c % w, c // w
        if req.fixed is not None and req.fixed.cells[y, x] >= 0:
            opts = np.array([req.fixed.cells[y, x]], dtype=np.int32)
        elif req.allowed is not None and req.allowed[c] is not None:
            opts = np.unique(np.asarray(req.allowed[c], dtype=np.int32))
        else:
            opts = everything
        for side, seq in req.boundary.items():
            at_edge = {"left": x == 0, "right": x == w - 1,
                       "bottom": y == 0, "top": y == h - 1}[side]
            if not at_edge:
                continue
            keep = _color_filter(seq[y if side in ("left", "right") else x])
            if keep is not None:
                cols = sides[opts, _SIDE_INDEX[side]]
                opts = opts[np.isin(cols, list(keep))]
        per_cell.append(opts)
    ptr = np.zeros(w * h + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(o) for o in per_cell])
    cand = np.concatenate(per_cell) if per_cell else np.zeros(0, dtype=np.int32)
    return ptr, cand.astype(np.int32)


def _run(args):
    return kernels.search(*args)


def _split_cell(ptr):
    sizes = np.diff(ptr)
    multi = np.nonzero(sizes > 1)[0]
    return int(multi[0]) if len(multi) else -1


def solve_patch(req, jobs=1):
    """Complete, count or enumerate the tilings described by ``req``.

    Enumeration order is lexicographic in the row-major tile sequence (unless
    ``most_constrained`` is set), and identical for every ``jobs`` value.
    """
    req.validate()
    ts = req.tileset
    ptr, cand = _candidates(req)
    alive = np.ones(len(cand), dtype=np.uint8)
    budget = -1 if req.budget is None else int(req.budget)
    mode = _MODES[req.mode]
    base = (ts.sides, ts.ncolors, req.width, req.height, req.wrap, req.wrap)
    split = _split_cell(ptr) if jobs > 1 and not req.most_constrained else -1
    if split < 0:
        status, count, sols, nodes = kernels.search(
            *base, ptr, cand, alive, mode, budget, req.most_constrained)
        return _result(req, _STATUS[status], count, sols, nodes)
    # one subtask per candidate of the first undecided cell, merged in candidate order
    tasks = []
    for k in range(ptr[split], ptr[split + 1]):
        sub = alive.copy()
        sub[ptr[split]:ptr[split + 1]] = 0
        sub[k] = 1
        tasks.append(base + (ptr, cand, sub, mode, budget, False))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_run, tasks))
    count, nodes, sols, exhausted = 0, 0, [], False
    for status, c, s, n in results:
        nodes += n
        if mode == kernels.FIRST and status == kernels.SAT:
            return _result(req, SAT, 1, s, nodes)
        if status == kernels.BUDGET:
            exhausted = True
            if mode == kernels.FIRST:
                break
        count += c
        sols.extend(s)
    status = BUDGET if exhausted else (SAT if count else UNSAT)
    return _result(req, status, count, sols, nodes)


def _result(req, status, count, sols, nodes):
    patches = [Patch(np.asarray(s, dtype=np.int32).reshape(req.height, req.width)) for s in sols]
    return SolveResult(status=status, count=int(count), patches=patches, nodes=int(nodes))


def _profile_task(args):
    return kernels.profile_count(*args)


@dataclass
class CountResult:
    status: str
    count: int | None
    steps: int


def count_rectangles(ts, width, height, budget=None, jobs=1):
    """Exact number of locally valid width x height patches."""
    b = -1 if budget is None else int(budget)
    if jobs <= 1 or len(ts) < 2:
        n, steps = kernels.profile_count(ts.sides, ts.ncolors, width, height, b)
        return CountResult(BUDGET if n is None else SAT if n else UNSAT, n, steps)
    # one subtask per tile at the bottom-left cell
    tasks = [(ts.sides, ts.ncolors, width, height, b, t) for t in range(len(ts))]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_profile_task, tasks))
    steps = sum(s for _, s in parts)
    if any(n is None for n, _ in parts):
        return CountResult(BUDGET, None, steps)
    n = sum(n for n, _ in parts)
    return CountResult(SAT if n else UNSAT, n, steps)


def count_patterns(ts, k, budget=None, jobs=1):
    """Number of locally consistent k x k patches.

    Local consistency over-approximates the patterns that extend to full
    tilings; both give the same entropy limit.
    """
    if k < 1:
        raise InputError("k must be positive")
    return count_rectangles(ts, k, k, budget, jobs)


@dataclass
class TorusResult:
    status: str
    exists: bool | None
    count: int | None
    witness: Patch | None = None
    nodes: int = 0


def _on_closed_walks(sides, keep, src, dst, length):
    """Tiles whose edge src->dst lies on a closed walk of ``length`` edges.

    The walk runs in the colour graph whose edges are the kept tiles.  A row
    of a torus of width p is such a walk of length p, so other tiles can never
    appear in one.
    """
    idx = np.nonzero(keep)[0]
    if len(idx) == 0:
        return keep
    colors, inv = np.unique(np.concatenate([sides[idx, src], sides[idx, dst]]), return_inverse=True)
    a, b = inv[:len(idx)], inv[len(idx):]
    n = len(colors)
    step = scipy.sparse.csr_matrix((np.ones(len(idx), dtype=np.int8), (a, b)), shape=(n, n))
    step.data[:] = 1
    back = scipy.sparse.identity(n, dtype=np.int8, format="csr")
    for _ in range(length - 1):
        back = back @ step
        back.data[:] = 1
    # the edge a -> b closes up when b reaches a again in length - 1 steps
    ok = np.asarray(back[b, a]).ravel() > 0
    out = np.zeros_like(keep)
    out[idx[ok]] = True
    return out


def torus_candidates(ts, p, q):
    """Mask of tiles that can occur in some p x q torus assignment (exact filter)."""
    keep = np.ones(len(ts), dtype=bool)
    while True:
        nxt = _on_closed_walks(ts.sides, keep, LEFT, RIGHT, p)
        nxt = _on_closed_walks(ts.sides, nxt, BOTTOM, TOP, q)
        if (nxt == keep).all():
            return keep
        keep = nxt


def torus_tilings(ts, p, q, budget=None, jobs=1, count=True):
    """Valid assignments of the p x q torus (width p, height q, wrap-around).

    Tiles that lie on no closed colour walk of length p (horizontally) or q
    (vertically) are dropped first; that filter is exact.  The existence check
    then tries each tile at (0, 0) in turn and, by translation symmetry,
    removes tiles that already failed there from every other cell.  Counting
    never uses that pruning.
    """
    if p < 1 or q < 1:
        raise InputError("torus periods must be positive")
    usable = torus_candidates(ts, p, q)
    remaining = budget
    nodes = 0
    failed = ~usable
    witness = None
    exists = False
    exhausted = False
    for t in np.nonzero(usable)[0]:
        allowed = [np.nonzero(~failed)[0]] * (p * q)
        allowed[0] = [int(t)]
        req = SolveRequest(ts, p, q, wrap=True, allowed=allowed, mode="first", budget=remaining)
        res = solve_patch(req)
        nodes += res.nodes
        if remaining is not None:
            remaining = max(0, remaining - res.nodes)
        if res.status == SAT:
            exists = True
            witness = res.patches[0]
            break
        if res.status == BUDGET:
            exhausted = True
            break
        failed[t] = True
    if exhausted:
        return TorusResult(BUDGET, None, None, None, nodes)
    n = None
    status = SAT if exists else UNSAT
    if count:
        if not exists:
            n = 0
        else:
            allowed = [np.nonzero(usable)[0]] * (p * q)
            req = SolveRequest(ts, p, q, wrap=True, allowed=allowed, mode="count", budget=remaining)
            res = solve_patch(req, jobs=jobs)
            nodes += res.nodes
            if res.status == BUDGET:
                status = BUDGET
            else:
                n = res.count
    return TorusResult(status, exists, n, witness, nodes)


# ------------------------------------------------------------ strip transfer

class RowAutomaton:
    """Rows of ``width`` tiles as transitions between vertical colour profiles.

    ``matrix[a, b]`` counts the rows whose bottom colours read ``profiles[a]``
    and top colours read ``profiles[b]``.  ``ends`` selects free horizontal
    ends (None), both ends pinned to one colour (an int), or a cyclic row
    ("cyclic").
    """

    def __init__(self, ts, width, ends=None, budget=None):
        self.width = width
        self.ends = ends
        self.steps = 0
        sides = [tuple(int(v) for v in r) for r in ts.sides]
        by_left = {}
        for t, s in enumerate(sides):
            by_left.setdefault(s[LEFT], []).append(t)
        # partial rows keyed by (bottom prefix, top prefix, first left, last right)
        if ends is None or ends == "cyclic":
            starts = range(len(sides))
        else:
            starts = by_left.get(ends, [])
        layer = {}
        for t in starts:
            s = sides[t]
            key = ((s[BOTTOM],), (s[TOP],), s[LEFT], s[RIGHT])
            layer[key] = layer.get(key, 0) + 1
        for _ in range(width - 1):
            nxt = {}
            for (bot, top, first, right), n in layer.items():
                for t in by_left.get(right, ()):
                    self.steps += 1
                    if budget is not None and self.steps > budget:
                        raise _Exhausted()
                    s = sides[t]
                    key = (bot + (s[BOTTOM],), top + (s[TOP],), first, s[RIGHT])
                    nxt[key] = nxt.get(key, 0) + n
            layer = nxt
        entries = {}
        for (bot, top, first, right), n in layer.items():
            if ends == "cyclic" and right != first:
                continue
            if ends not in (None, "cyclic") and right != ends:
                continue
            entries[(bot, top)] = entries.get((bot, top), 0) + n
        profiles = sorted({p for pair in entries for p in pair})
        index = {p: i for i, p in enumerate(profiles)}
        self.profiles = profiles
        rows = [index[a] for a, _ in entries]
        cols = [index[b] for _, b in entries]
        vals = list(entries.values())
        n = len(profiles)
        self.matrix = scipy.sparse.csr_matrix(
            (np.array(vals, dtype=float), (rows, cols)), shape=(n, n))

    def spectral_radius(self):
        n = self.matrix.shape[0]
        if n == 0 or self.matrix.nnz == 0:
            return 0.0
        if n <= 600:
            return float(np.max(np.abs(np.linalg.eigvals(self.matrix.toarray()))))
        vals = scipy.sparse.linalg.eigs(self.matrix, k=1, which="LM",
                                        return_eigenvectors=False, tol=1e-12)
        return float(np.abs(vals[0]))


class _Exhausted(Exception):
    pass


@dataclass
class EntropyBounds:
    """Entropy bracket from strips of width up to ``width``.

    ``rigorous_lower``/``rigorous_upper`` hold for every shift: the upper one
    from subadditivity of free strips, the lower one from strips whose ends
    share a colour and therefore glue side by side.  Both close in like 1/w.
    ``lower``/``upper`` tighten this with the growth ratios
    log2(lambda_w / lambda_{w-1}) of consecutive strips, which oscillate
    around the limit on the tested families; that part is an estimate.
    """
    lower: float
    upper: float
    width: int
    rigorous_lower: float
    rigorous_upper: float
    ratios: list
    status: str = SAT


def _log2(x):
    return math.log2(x) if x > 0 else float("-inf")


def transfer_entropy_bounds(ts, max_width, budget=None):
    if max_width < 1:
        raise InputError("max_width must be positive")
    hcolors = sorted({int(c) for c in ts.sides[:, LEFT]} & {int(c) for c in ts.sides[:, RIGHT]})
    rig_lo, rig_hi = 0.0, float("inf")
    lower, upper = float("-inf"), float("inf")
    logs = []
    ratios = []
    width = 0
    status = SAT
    spent = 0
    for w in range(1, max_width + 1):
        try:
            left = None if budget is None else budget - spent
            free = RowAutomaton(ts, w, budget=left)
            spent += free.steps
            pinned = []
            for c in hcolors:
                left = None if budget is None else budget - spent
                a = RowAutomaton(ts, w, ends=c, budget=left)
                spent += a.steps
                pinned.append(a)
        except _Exhausted:
            status = BUDGET
            break
        lam = free.spectral_radius()
        logs.append(_log2(lam))
        if lam > 0:
            rig_hi = min(rig_hi, logs[-1] / w)
        else:
            rig_hi = 0.0
        for a in pinned:
            mu = a.spectral_radius()
            if mu > 0:
                rig_lo = max(rig_lo, _log2(mu) / w)
        if w >= 2 and lam > 0:
            ratios.append(logs[-1] - logs[-2])
        if len(ratios) >= 2:
            lower = max(lower, min(ratios[-2:]))
            upper = min(upper, max(ratios[-2:]))
        width = w
    if rig_hi == float("inf"):
        rig_hi = 0.0
    rig_hi = max(rig_hi, 0.0)
    lo = max(rig_lo, lower) if lower > float("-inf") else rig_lo
    hi = min(rig_hi, upper)
    return EntropyBounds(lo, hi, width, rig_lo, rig_hi, ratios, status)


# ------------------------------------------------------------ standard families

def full_shift_tiles(ntiles=2):
    """``ntiles`` tiles with all sides coloured 0, told apart by letters."""
    return TileSet(f"full{ntiles}", 1, [Tile(0, 0, 0, 0, str(i)) for i in range(ntiles)])


def golden_mean_tiles():
    """Wang encoding of the hard-square shift: no two marked cells side by side.

    A tile carries its own mark on its top and right sides and the marks of
    its left and lower neighbours on its left and bottom sides.
    """
    tiles = [Tile(l, x, x, b) for x in (0, 1) for l in (0, 1) for b in (0, 1)
             if not (x and (l or b))]
    return TileSet("golden-mean", 2, tiles)
