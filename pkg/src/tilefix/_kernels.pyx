# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels; mirrors ``_kernels_py`` call for call."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    UNSAT = 0
    SAT = 1
    BUDGET = 2
    FIRST = 0
    COUNT = 1


def search(sides_in, int ncolors, int width, int height, bint wrap_x, bint wrap_y,
           cand_ptr_in, cand_in, alive0, int mode, long long budget, bint mrv):
    cdef const int[:, ::1] sides = np.ascontiguousarray(sides_in, dtype=np.int32).reshape(-1, 4)
    cdef const long long[::1] ptr = np.ascontiguousarray(cand_ptr_in, dtype=np.int64)
    cdef const int[::1] cand = np.ascontiguousarray(cand_in, dtype=np.int32)
    cdef unsigned char[::1] alive = np.array(alive0, dtype=np.uint8, copy=True)
    cdef int ncells = width * height
    cdef long long ncand = cand.shape[0]
    cdef int[::1] size = np.zeros(ncells, dtype=np.int32)
    cdef int[::1] owner = np.zeros(max(ncand, 1), dtype=np.int32)
    cdef int[:, ::1] nbr = np.full((ncells, 4), -1, dtype=np.int32)
    cdef long long[::1] trail = np.zeros(max(ncand, 1), dtype=np.int64)
    cdef long long ntrail = 0
    cdef long long[::1] stamp = np.zeros(max(ncolors, 1), dtype=np.int64)
    cdef long long tick = 0
    cdef int[::1] queue = np.zeros(ncells, dtype=np.int32)
    cdef unsigned char[::1] inq = np.zeros(ncells, dtype=np.uint8)
    cdef int qn = 0
    # branching stack: cell, option range in opt buffer, next index, trail mark
    cdef int[::1] st_cell = np.zeros(ncells + 1, dtype=np.int32)
    cdef long long[::1] st_lo = np.zeros(ncells + 1, dtype=np.int64)
    cdef long long[::1] st_hi = np.zeros(ncells + 1, dtype=np.int64)
    cdef long long[::1] st_i = np.zeros(ncells + 1, dtype=np.int64)
    cdef long long[::1] st_mark = np.zeros(ncells + 1, dtype=np.int64)
    cdef long long[::1] opt = np.zeros(max(ncand, 1), dtype=np.int64)
    cdef int depth = 0
    cdef long long nopt = 0
    cdef int x, y, xx, yy, c, nb, d, mine, theirs, cell, best, bsize, s
    cdef long long k, j, lo, hi
    cdef bint changed, ok, found
    cdef long long count = 0
    cdef long long nodes = 0
    cdef int[4] DX
    cdef int[4] DY
    cdef int[4] MINE
    cdef int[4] THEIRS
    DX[0] = 1; DY[0] = 0; MINE[0] = 1; THEIRS[0] = 0
    DX[1] = -1; DY[1] = 0; MINE[1] = 0; THEIRS[1] = 1
    DX[2] = 0; DY[2] = 1; MINE[2] = 2; THEIRS[2] = 3
    DX[3] = 0; DY[3] = -1; MINE[3] = 3; THEIRS[3] = 2
    solutions = []

    for y in range(height):
        for x in range(width):
            c = y * width + x
            for d in range(4):
                nb = -1
                if wrap_x:
                    xx = (x + DX[d] + width) % width
                else:
                    xx = x + DX[d]
                if wrap_y:
                    yy = (y + DY[d] + height) % height
                else:
                    yy = y + DY[d]
                if 0 <= xx < width and 0 <= yy < height:
                    nb = yy * width + xx
                nbr[c, d] = nb
    for c in range(ncells):
        for k in range(ptr[c], ptr[c + 1]):
            owner[k] = c
            if alive[k]:
                size[c] += 1
        if size[c] == 0:
            return UNSAT, 0, solutions, 0

    # initial propagation over every cell
    for c in range(ncells):
        queue[qn] = ncells - 1 - c
        inq[ncells - 1 - c] = 1
        qn += 1
    ok = True
    while True:
        # ---- propagate
        while qn > 0 and ok:
            qn -= 1
            c = queue[qn]
            inq[c] = 0
            lo = ptr[c]
            hi = ptr[c + 1]
            for d in range(4):
                nb = nbr[c, d]
                if nb < 0:
                    continue
                mine = MINE[d]
                theirs = THEIRS[d]
                tick += 1
                for k in range(lo, hi):
                    if alive[k]:
                        stamp[sides[cand[k], mine]] = tick
                changed = False
                for k in range(ptr[nb], ptr[nb + 1]):
                    if alive[k] and stamp[sides[cand[k], theirs]] != tick:
                        alive[k] = 0
                        trail[ntrail] = k
                        ntrail += 1
                        size[nb] -= 1
                        changed = True
                if changed:
                    if size[nb] == 0:
                        ok = False
                        break
                    if not inq[nb]:
                        inq[nb] = 1
                        queue[qn] = nb
                        qn += 1
        if not ok:
            while qn > 0:
                qn -= 1
                inq[queue[qn]] = 0
            if depth == 0:
                return UNSAT, count, solutions, nodes
        else:
            # ---- choose a branching cell
            best = -1
            bsize = 0
            for c in range(ncells):
                s = size[c]
                if s > 1:
                    if not mrv:
                        best = c
                        break
                    if best < 0 or s < bsize:
                        best = c
                        bsize = s
            if best < 0:
                count += 1
                if mode != COUNT:
                    sol = np.empty(ncells, dtype=np.int32)
                    for c in range(ncells):
                        for k in range(ptr[c], ptr[c + 1]):
                            if alive[k]:
                                sol[c] = cand[k]
                                break
                    solutions.append(sol)
                if mode == FIRST:
                    return SAT, count, solutions, nodes
            else:
                st_cell[depth] = best
                st_lo[depth] = nopt
                for k in range(ptr[best], ptr[best + 1]):
                    if alive[k]:
                        opt[nopt] = k
                        nopt += 1
                st_hi[depth] = nopt
                st_i[depth] = st_lo[depth]
                st_mark[depth] = ntrail
                depth += 1
        # ---- advance to the next untried option
        found = False
        while depth > 0:
            j = st_mark[depth - 1]
            while ntrail > j:
                ntrail -= 1
                k = trail[ntrail]
                alive[k] = 1
                size[owner[k]] += 1
            if st_i[depth - 1] >= st_hi[depth - 1]:
                nopt = st_lo[depth - 1]
                depth -= 1
                continue
            k = opt[st_i[depth - 1]]
            st_i[depth - 1] += 1
            if 0 <= budget <= nodes:
                return BUDGET, count, solutions, nodes
            nodes += 1
            cell = st_cell[depth - 1]
            for j in range(ptr[cell], ptr[cell + 1]):
                if j != k and alive[j]:
                    alive[j] = 0
                    trail[ntrail] = j
                    ntrail += 1
                    size[cell] -= 1
            queue[0] = cell
            inq[cell] = 1
            qn = 1
            ok = True
            found = True
            break
        if not found:
            return (SAT if count else UNSAT), count, solutions, nodes


def profile_count(sides_in, int ncolors, int width, int height, long long budget,
                  int first=-1):
    cdef const int[:, ::1] sides = np.ascontiguousarray(sides_in, dtype=np.int32).reshape(-1, 4)
    cdef int ntiles = sides.shape[0]
    cdef int t, x, y, below, right
    cdef long long steps = 0
    cdef bint last
    by_bl, by_b, by_l = {}, {}, {}
    for t in range(ntiles):
        by_bl.setdefault((sides[t, 3], sides[t, 0]), []).append(t)
        by_b.setdefault(sides[t, 3], []).append(t)
        by_l.setdefault(sides[t, 0], []).append(t)
    everything = list(range(ntiles))
    states = {((-1,) * width, -1): 1}
    for y in range(height):
        for x in range(width):
            nxt = {}
            last = x == width - 1
            for key, n in states.items():
                tops = key[0]
                right = key[1]
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
                    nkey = (tops[:x] + (sides[t, 2],) + tops[x + 1:], -1 if last else sides[t, 1])
                    nxt[nkey] = nxt.get(nkey, 0) + n
            states = nxt
    return sum(states.values()), steps
