"""Independent brute-force reference computations used by the tests.

Nothing here calls into tilefix's search code; the tests compare the two.
"""
import itertools
import math

import numpy as np

# log2 of the hard-square constant, 1.50304808247533226...
HARD_SQUARE_ENTROPY = math.log2(1.5030480824753322643)


def brute_count(tiles, width, height):
    """Valid width x height patches over ``tiles`` (tuples left, right, top, bottom)."""
    n = 0
    for cells in itertools.product(range(len(tiles)), repeat=width * height):
        ok = True
        for y in range(height):
            for x in range(width):
                t = tiles[cells[y * width + x]]
                if x + 1 < width and t[1] != tiles[cells[y * width + x + 1]][0]:
                    ok = False
                    break
                if y + 1 < height and t[2] != tiles[cells[(y + 1) * width + x]][3]:
                    ok = False
                    break
            if not ok:
                break
        n += ok
    return n


def hard_square_patterns(width, height):
    """0/1 grids with no two horizontally or vertically adjacent ones."""
    rows = [r for r in range(1 << width) if not r & (r >> 1)]
    count = {r: 1 for r in rows}
    for _ in range(height - 1):
        count = {r: sum(c for s, c in count.items() if not r & s) for r in rows}
    return count


def golden_wang_count(k):
    """Count k x k golden-mean Wang patches.

    An unmarked cell on the left (bottom) border may carry either colour on its
    outward left (bottom) side; a marked one must carry 0 there.
    """
    total = 0
    rows = [r for r in range(1 << k) if not r & (r >> 1)]
    for grid in itertools.product(rows, repeat=k):
        if any(a & b for a, b in zip(grid, grid[1:])):
            continue
        free_left = sum(1 for r in grid if not r & 1)
        free_bottom = k - bin(grid[0]).count("1")
        total += 2 ** (free_left + free_bottom)
    return total


def hard_square_strip_rate(width):
    """log2(lambda_w / lambda_{w-1}) for the free-boundary strip transfer matrices."""
    def lam(w):
        rows = [r for r in range(1 << w) if not r & (r >> 1)]
        m = np.array([[0 if a & b else 1 for b in rows] for a in rows], dtype=float)
        return max(abs(np.linalg.eigvals(m)))
    return math.log2(lam(width) / lam(width - 1))


def thue_morse_bit(i):
    return bin(i).count("1") % 2


def thue_morse_word(n):
    return "".join(str(thue_morse_bit(i)) for i in range(n))


def least_shift(word, pos, n, q):
    """Least |t| > 0 with t = 0 mod q and word[pos+t : pos+t+n] == word[pos : pos+n]."""
    f = word[pos:pos + n]
    for t in range(q, len(word), q):
        if word[pos + t:pos + t + n] == f and pos + t + n <= len(word):
            return t
        if pos - t >= 0 and word[pos - t:pos - t + n] == f:
            return -t
    return None


def hand_run(table, word, accept, max_steps):
    """Plain dictionary Turing machine run: (outcome, steps)."""
    tape = dict(enumerate(word))
    q, head = 0, 0
    for step in range(max_steps + 1):
        if q == accept:
            return "accept", step
        if step == max_steps:
            return "step-limit", step
        key = (q, tape.get(head, 0))
        if key not in table:
            return "reject", step
        q, tape[head], mv = table[key]
        head += {"L": -1, "R": 1, "S": 0}[mv]
        if head < 0:
            return "space-limit", step + 1
