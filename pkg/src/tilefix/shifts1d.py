"""One-dimensional shifts: sequence sources, recurrence measurements,
letter delegation across macro-tile levels, and canonical configurations.

Every measurement here is relative to a finite window, and reports carry the
window they were computed on.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .core import InputError, TilingError
from .fixpoint import ZoomSchedule, layout

# ---------------------------------------------------------------- sources


@dataclass(frozen=True)
class SequenceSource:
    """A one-sided sequence over single-character symbols."""
    kind: str                   # explicit | periodic | substitution | callback
    data: object
    alphabet: tuple

    @classmethod
    def explicit(cls, word):
        return cls("explicit", str(word), tuple(sorted(set(word))))

    @classmethod
    def periodic(cls, word):
        if not word:
            raise InputError("periodic word must be nonempty")
        return cls("periodic", str(word), tuple(sorted(set(word))))

    @classmethod
    def substitution(cls, rules, seed):
        rules = {str(a): str(w) for a, w in rules.items()}
        if any(not w for w in rules.values()):
            raise InputError("substitution must be non-erasing")
        if any(set(w) - set(rules) for w in rules.values()):
            raise InputError("substitution images use symbols without a rule")
        img = rules.get(seed)
        if img is None or not img.startswith(seed) or len(img) < 2:
            raise InputError("seed must be a growing prefix of its own image")
        return cls("substitution", (tuple(sorted(rules.items())), seed), tuple(sorted(rules)))

    @classmethod
    def callback(cls, fn, alphabet):
        return cls("callback", fn, tuple(alphabet))

    def prefix(self, n):
        if n < 0:
            raise InputError("prefix length must be >= 0")
        if self.kind == "explicit":
            if n > len(self.data):
                raise InputError(f"explicit word has only {len(self.data)} symbols")
            return self.data[:n]
        if self.kind == "periodic":
            reps = -(-n // len(self.data))
            return (self.data * reps)[:n]
        if self.kind == "substitution":
            rules, seed = dict(self.data[0]), self.data[1]
            word = seed
            while len(word) < n:
                word = "".join(rules[a] for a in word)
            return word[:n]
        if self.kind == "callback":
            return "".join(str(self.data(i)) for i in range(n))
        raise InputError(f"unknown sequence kind {self.kind!r}")


def thue_morse():
    return SequenceSource.substitution({"0": "01", "1": "10"}, "0")


def parse_source(text):
    """``thue-morse`` | ``periodic:<word>`` | ``explicit:<word>`` | ``file:<path>``."""
    if text == "thue-morse":
        return thue_morse()
    kind, _, arg = text.partition(":")
    if kind == "periodic" and arg:
        return SequenceSource.periodic(arg)
    if kind == "explicit" and arg:
        return SequenceSource.explicit(arg)
    if kind == "file" and arg:
        with open(arg) as fh:
            return SequenceSource.explicit("".join(fh.read().split()))
    raise InputError(f"unknown sequence {text!r}")


# ---------------------------------------------------------------- recurrence

def _span_needed(positions, n, total):
    # least w such that every length-w sub-window of [0, total) contains a start
    need = positions[0] + n
    for a, b in zip(positions, positions[1:]):
        need = max(need, b - a - 1 + n)
    return max(need, total - positions[-1])


@dataclass
class QPFunction:
    values: dict                # n -> int, or None when the window cannot certify it
    window: int

    def __call__(self, n):
        return self.values[n]


def qp_function(src, n_max, window):
    """phi(n): least w such that each length-n factor seen occurs in every length-w sub-window.

    A value above half the window is reported as None: the window holds fewer
    than two disjoint sub-windows of that length, so it certifies nothing.
    """
    word = src.prefix(window)
    values = {}
    for n in range(1, n_max + 1):
        where = defaultdict(list)
        for p in range(len(word) - n + 1):
            where[word[p:p + n]].append(p)
        w = max(_span_needed(ps, n, len(word)) for ps in where.values()) if where else None
        values[n] = w if w is not None and w <= window // 2 else None
    return QPFunction(values, window)


def lemma2_find(src, occurrence, q, horizon):
    """Nonzero shift t*q at which the factor at ``occurrence`` recurs, or None.

    Shifts are tried by increasing size, positive before negative.
    """
    pos, n = occurrence
    if q < 1 or n < 1 or pos < 0:
        raise InputError("need q >= 1, a positive factor length and pos >= 0")
    word = src.prefix(pos + n + horizon)
    factor = word[pos:pos + n]
    for t in range(q, horizon + 1, q):
        if word[pos + t:pos + t + n] == factor:
            return t
        if pos - t >= 0 and word[pos - t:pos - t + n] == factor:
            return -t
    return None


def lemma2_bound(src, n, q, window):
    """Largest, over all length-n occurrences in the window, least |t*q| recurrence shift.

    None when some occurrence has no recurrence with the right residue inside
    the window.
    """
    word = src.prefix(window)
    groups = defaultdict(list)
    for p in range(len(word) - n + 1):
        groups[(word[p:p + n], p % q)].append(p)
    worst = 0
    for ps in groups.values():
        if len(ps) < 2:
            return None
        gaps = [b - a for a, b in zip(ps, ps[1:])]
        worst = max(worst, max(min(l, r) for l, r in zip([gaps[0]] + gaps, gaps + [gaps[-1]])))
    return worst


@dataclass
class Saturation:
    bounds: dict                # window -> lemma2_bound
    saturated: bool             # identical over at least two doublings

    @property
    def value(self):
        return next(iter(self.bounds.values())) if self.saturated else None


def lemma2_saturation(src, n, q, windows=(2 ** 14, 2 ** 15, 2 ** 16)):
    if len(windows) < 3:
        raise InputError("saturation needs at least three windows")
    bounds = {w: lemma2_bound(src, n, q, w) for w in windows}
    vals = list(bounds.values())
    return Saturation(bounds, vals[0] is not None and len(set(vals)) == 1)


@dataclass
class Lemma3Report:
    verdict: str                # recurs | absent | uncertified
    gap: int | None             # every sub-window of this length contains v
    occurrences: int
    lemma2_L: int | None        # recurrence bound of v's first component at multiples of |y|
    window: int


def lemma3_check(x_src, y, v, window):
    """Recurrence of the product factor ``v = (xpart, ypart)`` in x (x) y^infinity."""
    xpart, ypart = v
    if len(xpart) != len(ypart) or not xpart:
        raise InputError("product factor needs two components of equal positive length")
    x = x_src.prefix(window)
    q = len(y)
    ys = (y * (window // q + 2))[:window]
    n = len(xpart)
    hits = [p for p in range(window - n + 1) if x[p:p + n] == xpart and ys[p:p + n] == ypart]
    lemma_l = None
    first = x.find(xpart)
    if first >= 0:
        shifts = [p - first for p in range(window - n + 1)
                  if p != first and (p - first) % q == 0 and x[p:p + n] == xpart]
        lemma_l = min((abs(s) for s in shifts), default=None)
    if not hits:
        return Lemma3Report("absent", None, 0, lemma_l, window)
    gap = _span_needed(hits, n, window)
    verdict = "recurs" if len(hits) > 1 and gap <= window // 2 else "uncertified"
    return Lemma3Report(verdict, gap, len(hits), lemma_l, window)


# ---------------------------------------------------------------- delegation

def chunk_length(L):
    """l = max(1, floor(log2 log2 L))."""
    if L < 4:
        return 1
    return max(1, math.floor(math.log2(math.log2(L))))


@dataclass(frozen=True)
class DelegationLayout:
    """Which letters of the embedded word a level-k macro-tile oversees and checks.

    Level-k macro-tile (i, j) spans columns [i*L_k, (i+1)*L_k).  It oversees
    the 3*L_k columns centred on that span and checks the l_k-letter chunk at
    offset (j mod N_{k+1}) mod (3*L_k - l_k) inside them.
    """
    schedule: ZoomSchedule = field(default_factory=ZoomSchedule)
    wire_m: int = 14

    def L(self, k):
        return self.schedule.L(k)

    def chunk_len(self, k):
        return chunk_length(self.L(k))

    def delegation(self, k, j, i=0):
        """(responsibility interval, chunk interval), both half-open."""
        if k < 1:
            raise InputError("delegation starts at level 1")
        L = self.L(k)
        lk = self.chunk_len(k)
        lo = i * L - L
        start = lo + (j % self.schedule.N(k + 1)) % (3 * L - lk)
        return (lo, lo + 3 * L), (start, start + lk)

    def wire_roles(self, n):
        """Cells of an n x n macro-tile that are wires, and those next to wires."""
        return _wire_roles(n, self.wire_m)

    def role(self, k, i, j):
        """Role of level-k macro-tile (i, j) inside its father."""
        n = self.schedule.N(k + 1)
        wires, near = self.wire_roles(n)
        cell = (i % n, j % n)
        if cell in wires:
            return "wire"
        if cell in near:
            return "wire-neighbour"
        return "plain"


_WIRE_CACHE = {}


def _wire_roles(n, m):
    key = (n, m)
    if key not in _WIRE_CACHE:
        lay = layout(n, 1, m, free_rows=4)
        wires = {c for w in lay.wires for c in w.cells}
        near = {(x + dx, y + dy) for x, y in wires for dx in (-1, 0, 1) for dy in (-1, 0, 1)}
        _WIRE_CACHE[key] = (frozenset(wires), frozenset(near - wires))
    return _WIRE_CACHE[key]


def coverage_gaps(dl, k, lo, hi):
    """Start positions in [lo, hi - l_k] that no level-k macro-tile is assigned."""
    L = dl.L(k)
    lk = dl.chunk_len(k)
    rows = dl.schedule.N(k + 1)
    covered = set()
    for i in range(lo // L - 2, hi // L + 3):
        for j in range(min(rows, 3 * L - lk)):
            _, (s, _) = dl.delegation(k, j, i)
            covered.add(s)
    return [p for p in range(lo, hi - lk + 1) if p not in covered]


@dataclass
class FieldSet:
    """Letters a level-k macro-tile (i, j) carries.

    ``own``: its chunk (iv); ``family``: the chunks of its father and the
    father's two horizontal neighbours (v); ``father_pos``: father's position
    in the grandfather (vi), None when left empty.  Chunks are tuples of
    (position, letter) pairs inside the window.
    """
    k: int
    i: int
    j: int
    own: tuple
    family: tuple
    father_pos: tuple | None


def _chunk(word, interval):
    s, e = interval
    return tuple((p, word[p]) for p in range(max(s, 0), min(e, len(word))))


def fieldsets_from_word(dl, word, levels, rows=None):
    """All field sets of the given levels over a window, filled in from ``word``."""
    out = {}
    for k in levels:
        L = dl.L(k)
        n1 = dl.schedule.N(k + 1)
        n2 = dl.schedule.N(k + 2)
        nrows = (rows or {}).get(k, min(n1, 3 * L))
        for i in range(len(word) // L):
            for j in range(nrows):
                _, own = dl.delegation(k, j, i)
                I, J = i // n1, j // n1
                family = tuple(_chunk(word, dl.delegation(k + 1, J, I + d)[1]) for d in (-1, 0, 1))
                fpos = None if dl.role(k, i, j) != "plain" else (I % n2, J % n2)
                out[(k, i, j)] = FieldSet(k, i, j, _chunk(word, own), family, fpos)
    return out


@dataclass
class FieldReport:
    violations: list            # (clause, position or cell, keys involved)

    @property
    def ok(self):
        return not self.violations


def check_fields(dl, fieldsets, word):
    """Consistency clauses over a collection of field sets.

    (a) every two chunks holding the same position agree there; (b) siblings
    next to each other agree on (v) and on nonempty (vi); (c) level-1 chunks
    match the word; (d) (vi) is empty exactly on wires and their neighbours.
    """
    bad = []
    holders = defaultdict(list)
    for key, fs in sorted(fieldsets.items()):
        for p, a in fs.own:
            holders[p].append((key, a))
        for chunk in fs.family:
            for p, a in chunk:
                holders[p].append((key, a))
    for p, hs in sorted(holders.items()):
        if len({a for _, a in hs}) > 1:
            for (k1, a1), (k2, a2) in itertools.combinations(hs, 2):
                if a1 != a2 and k1 != k2:
                    bad.append(("a", p, (k1, k2)))
    n1_cache = {}
    for (k, i, j), fs in sorted(fieldsets.items()):
        n1 = n1_cache.setdefault(k, dl.schedule.N(k + 1))
        for di, dj in ((1, 0), (0, 1)):
            other = fieldsets.get((k, i + di, j + dj))
            if other is None or (i // n1, j // n1) != ((i + di) // n1, (j + dj) // n1):
                continue
            if fs.family != other.family:
                bad.append(("b", (k, i, j), ((k, i, j), (k, i + di, j + dj))))
            if None not in (fs.father_pos, other.father_pos) and fs.father_pos != other.father_pos:
                bad.append(("b", (k, i, j), ((k, i, j), (k, i + di, j + dj))))
        if k == 1:
            for p, a in fs.own:
                if 0 <= p < len(word) and word[p] != a:
                    bad.append(("c", p, ((k, i, j),)))
        empty = fs.father_pos is None
        if empty != (dl.role(k, i, j) != "plain"):
            bad.append(("d", (k, i, j), ((k, i, j),)))
    return FieldReport(bad)


def flip_letter(fieldsets, key, index=0, alphabet="01"):
    """Copy of ``fieldsets`` with one letter of one (iv) field changed."""
    out = dict(fieldsets)
    fs = out[key]
    own = list(fs.own)
    p, a = own[index]
    own[index] = (p, next(b for b in alphabet if b != a))
    out[key] = FieldSet(fs.k, fs.i, fs.j, tuple(own), fs.family, fs.father_pos)
    return out


# ---------------------------------------------------------------- separator

@dataclass(frozen=True)
class Enumeration:
    """Two enumerable sets as timed events: (step, set index 1 or 2, element)."""
    events: tuple

    def within(self, budget):
        return [(s, e) for t, s, e in self.events if t < budget]


TOY_PAIR = Enumeration(((0, 1, 2), (1, 2, 5), (3, 1, 7), (6, 2, 11)))


def _tiny_machine(e):
    # machine e: 2 states, 2 symbols, read from the digits of e in base 12
    trans = {}
    for q in range(2):
        for s in range(2):
            e, d = divmod(e, 12)
            if d < 8:
                trans[(q, s)] = (d >> 2 & 1, d >> 1 & 1, "LR"[d & 1])
    return trans


def _runs(e, budget):
    trans = _tiny_machine(e)
    tape = defaultdict(int, enumerate(int(b) for b in bin(e)[2:]))
    q, head = 0, 0
    for step in range(budget):
        t = trans.get((q, tape[head]))
        if t is None:
            return step, tape[head]
        q, tape[head], mv = t[0], t[1], t[2]
        head += 1 if mv == "R" else -1
    return None


def diagonal_pair(budget, limit=64):
    """S1 = {e : machine e halts on e showing 1}, S2 the same with 0, to a step budget."""
    events = []
    for e in range(limit):
        hit = _runs(e, budget)
        if hit is not None:
            steps, out = hit
            events.append((steps, 1 if out else 2, e))
    return Enumeration(tuple(sorted(events)))


@dataclass
class SeparatorResult:
    ok: bool
    index: int | None = None


def separator_check(prefix, budget, pair=TOY_PAIR):
    """Does ``prefix`` put 1 on S1 and 0 on S2 as far as enumerated within ``budget``?"""
    for s, e in sorted(pair.within(budget), key=lambda se: se[1]):
        if e < len(prefix) and prefix[e] != ("1" if s == 1 else "0"):
            return SeparatorResult(False, e)
    return SeparatorResult(True)


# ---------------------------------------------------------------- canonical configuration

class ExtensionError(TilingError):
    """Greedy extension found no admissible symbol."""


@dataclass(frozen=True)
class ForbiddenWordSource:
    """Forbidden words enumerated up to a budget; longer budgets list more words."""
    alphabet: tuple
    enumerator: object

    @classmethod
    def finite(cls, words, alphabet):
        words = tuple(sorted(set(words)))
        return cls(tuple(alphabet), lambda budget: list(words))

    def words(self, budget):
        return list(self.enumerator(budget))


def _essential(alphabet, forbidden, memory):
    # words of length ``memory`` lying on a bi-infinite path that avoids ``forbidden``
    def clean(w):
        return not any(f in w for f in forbidden)

    states = {"".join(t) for t in itertools.product(alphabet, repeat=memory) if clean("".join(t))}
    while True:
        keep = {s for s in states
                if any(s[1:] + a in states and clean(s + a) for a in alphabet)
                and any(a + s[:-1] in states and clean(a + s) for a in alphabet)}
        if keep == states:
            return states, clean
        states = keep


@dataclass(frozen=True)
class CanonicalConfig:
    word: str
    origin: tuple = (0, 0)      # bottom-left corner of a macro-tile at every level


def canonical_config(fws, length, budget):
    """Greedy admissible word: grow to the right with the least symbol that keeps
    the word extendable both ways, and to the left only when the right is stuck."""
    forbidden = [f for f in fws.words(budget) if f]
    alphabet = sorted(fws.alphabet)
    memory = max([len(f) for f in forbidden] + [2]) - 1
    states, clean = _essential(alphabet, forbidden, memory)

    def admissible(w):
        if len(w) <= memory:
            return any(w in s for s in states)
        if not clean(w):
            return False
        windows = [w[p:p + memory] for p in range(len(w) - memory + 1)]
        return all(x in states for x in windows)

    word = ""
    if not admissible(word):
        raise ExtensionError("the shift is empty at this budget")
    while len(word) < length:
        for a in alphabet:
            if admissible(word + a):
                word += a
                break
        else:
            for a in alphabet:
                if admissible(a + word):
                    word = a + word
                    break
            else:
                raise ExtensionError(f"no admissible extension of a {len(word)}-letter word")
    return CanonicalConfig(word)


def forbidden_factors(word, forbidden):
    return sorted({f for f in forbidden if f and f in word})
