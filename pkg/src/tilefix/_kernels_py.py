"""Pure-Python search kernels; same contract as the compiled ``_kernels``."""
import numpy as np

UNSAT, SAT, BUDGET = 0, 1, 2
FIRST, COUNT, ENUMERATE = 0, 1, 2


def _neighbours(width, height, wrap_x, wrap_y):
    # per cell: (neighbour, side of the cell facing it, side of the neighbour facing back)
    ncells = width * height
    out = [[] for _ in range(ncells)]
    for y in range(height):
        for x in range(width):
            c = y * width + x
            for dx, dy, mine, theirs in ((1, 0, 1, 0), (-1, 0, 0, 1), (0, 1, 2, 3), (0, -1, 3, 2)):
                nx, ny = x + dx, y + dy
                if wrap_x:
                    nx %= width
                if wrap_y:
                    ny %= height
                if 0 <= nx < width and 0 <= ny < height:
                    out[c].append((ny * width + nx, mine, theirs))
    return out


def search(sides, ncolors, width, height, wrap_x, wrap_y, cand_ptr, cand, alive0,
           mode, budget, mrv):
    """Backtracking with arc consistency over per-cell candidate lists.

    ``cand[cand_ptr[c]:cand_ptr[c+1]]`` are the candidate tiles of cell c in
    ascending order, ``alive0`` flags which of them are initially allowed.
    Returns (status, count, solutions, nodes); one node is one branch attempt.
    """
    sides = [tuple(int(v) for v in row) for row in np.asarray(sides)]
    ptr = [int(v) for v in cand_ptr]
    cand = [int(v) for v in cand]
    alive = bytearray(np.asarray(alive0, dtype=np.uint8).tobytes())
    ncells = width * height
    size = [sum(alive[ptr[c]:ptr[c + 1]]) for c in range(ncells)]
    nbrs = _neighbours(width, height, wrap_x, wrap_y)
    trail = []
    stamp = [0] * max(ncolors, 1)
    clock = [0]

    def propagate(queue):
        inq = set(queue)
        while queue:
            c = queue.pop()
            inq.discard(c)
            lo, hi = ptr[c], ptr[c + 1]
            for nb, mine, theirs in nbrs[c]:
                clock[0] += 1
                tick = clock[0]
                for k in range(lo, hi):
                    if alive[k]:
                        stamp[sides[cand[k]][mine]] = tick
                changed = False
                for k in range(ptr[nb], ptr[nb + 1]):
                    if alive[k] and stamp[sides[cand[k]][theirs]] != tick:
                        alive[k] = 0
                        trail.append(k)
                        size[nb] -= 1
                        changed = True
                if changed:
                    if size[nb] == 0:
                        return False
                    if nb not in inq:
                        inq.add(nb)
                        queue.append(nb)
        return True

    def undo(mark):
        while len(trail) > mark:
            k = trail.pop()
            alive[k] = 1
            size[_owner[k]] += 1

    _owner = [0] * len(cand)
    for c in range(ncells):
        for k in range(ptr[c], ptr[c + 1]):
            _owner[k] = c

    def pick():
        best, best_size = -1, 0
        for c in range(ncells):
            s = size[c]
            if s > 1:
                if not mrv:
                    return c
                if best < 0 or s < best_size:
                    best, best_size = c, s
        return best

    def snapshot():
        sol = np.empty(ncells, dtype=np.int32)
        for c in range(ncells):
            for k in range(ptr[c], ptr[c + 1]):
                if alive[k]:
                    sol[c] = cand[k]
                    break
        return sol

    count = 0
    nodes = 0
    solutions = []
    if any(s == 0 for s in size) or not propagate(list(range(ncells - 1, -1, -1))):
        return UNSAT, 0, solutions, 0
    stack = []
    while True:
        c = pick()
        if c < 0:
            count += 1
            if mode != COUNT:
                solutions.append(snapshot())
            if mode == FIRST:
                return SAT, count, solutions, nodes
        else:
            opts = [k for k in range(ptr[c], ptr[c + 1]) if alive[k]]
            stack.append([c, opts, 0, len(trail)])
        while stack:
            fr = stack[-1]
            undo(fr[3])
            if fr[2] >= len(fr[1]):
                stack.pop()
                continue
            k = fr[1][fr[2]]
            fr[2] += 1
            if 0 <= budget <= nodes:
                return BUDGET, count, solutions, nodes
            nodes += 1
            cell = fr[0]
            for j in range(ptr[cell], ptr[cell + 1]):
                if j != k and alive[j]:
                    alive[j] = 0
                    trail.append(j)
                    size[cell] -= 1
            if propagate([cell]):
                break
        else:
            return (SAT if count else UNSAT), count, solutions, nodes


def profile_count(sides, ncolors, width, height, budget, first=-1):
    """Exact number of locally valid width x height patches (broken-profile DP).

    ``first`` >= 0 pins the bottom-left cell to that tile.  Returns
    (count, steps) with count None when the budget ran out.
    """
    sides = [tuple(int(v) for v in row) for row in np.asarray(sides)]
    by_bl, by_b, by_l = {}, {}, {}
    for t, (l, r, tp, b) in enumerate(sides):
        by_bl.setdefault((b, l), []).append(t)
        by_b.setdefault(b, []).append(t)
        by_l.setdefault(l, []).append(t)
    everything = list(range(len(sides)))
    free = (-1,) * width
    states = {(free, -1): 1}
    steps = 0
    for y in range(height):
        for x in range(width):
            nxt = {}
            last = x == width - 1
            for (tops, right), n in states.items():
                below = tops[x]
                if first >= 0 and x == 0 and y == 0:
                    opts = (first,)
                elif below < 0 and right < 0:
                    opts = everything
                elif below < 0:
                    opts = by_l.get(right, ())
                elif right < 0:
                    opts = by_b.get(below, ())
                else:
                    opts = by_bl.get((below, right), ())
                for t in opts:
                    steps += 1
                    if 0 <= budget < steps:
                        return None, steps
                    s = sides[t]
                    key = (tops[:x] + (s[2],) + tops[x + 1:], -1 if last else s[1])
                    nxt[key] = nxt.get(key, 0) + n
            states = nxt
    return sum(states.values()), steps
