# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of ``pure.py``: identical signatures and semantics.

Any behavioural change must land in both lanes; the parity tests diff them
on random inputs.
"""

from libc.stdlib cimport malloc, free

DEF HOLE_COST = 4
DEF STEP_COST = 1
DEF UNREACHED = -1


cdef long* _to_c_array(seq, Py_ssize_t n) except NULL:
    cdef long* buf = <long*> malloc(n * sizeof(long) if n > 0 else sizeof(long))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n):
        buf[i] = seq[i]
    return buf


cdef bint _c_is_subsequence(long* target, Py_ssize_t m, Py_ssize_t t_from,
                            long* current, Py_ssize_t n, Py_ssize_t c_from) noexcept:
    cdef Py_ssize_t i, j = c_from
    cdef long want
    for i in range(t_from, m):
        want = target[i]
        while j < n and current[j] != want:
            j += 1
        if j >= n:
            return False
        j += 1
    return True


def list_solvable(current, target, lock):
    """Whether ``target`` is still reachable from (current, lock)."""
    cdef Py_ssize_t n = len(current), m = len(target)
    cdef Py_ssize_t lk = lock
    if lk > m:
        return False
    cdef long* cur = _to_c_array(current, n)
    cdef long* tgt = _to_c_array(target, m)
    cdef Py_ssize_t i
    cdef bint ok = True
    try:
        for i in range(lk):
            if cur[i] != tgt[i]:
                ok = False
                break
        if ok:
            ok = _c_is_subsequence(tgt, m, lk, cur, n, lk)
        return bool(ok)
    finally:
        free(cur)
        free(tgt)


def list_optimal_pops(current, target, lock):
    """All pop indices that keep the target reachable (increasing order)."""
    cdef Py_ssize_t n = len(current), m = len(target)
    cdef Py_ssize_t lk = lock
    if n <= m or lk > m:
        return []
    cdef long* cur = _to_c_array(current, n)
    cdef long* tgt = _to_c_array(target, m)
    cdef Py_ssize_t i, limit
    out = []
    try:
        for i in range(lk):
            if cur[i] != tgt[i]:
                return []
        limit = m if m < n - 1 else n - 1
        i = lk
        while i <= limit:
            if _c_is_subsequence(tgt, m, i, cur, n, i + 1):
                out.append(i)
            if i >= m or cur[i] != tgt[i]:
                break
            i += 1
        return out
    finally:
        free(cur)
        free(tgt)


def grid_min_cost_from(size, holes, source):
    """Min cost from ``source`` to every cell; entering a hole costs 4."""
    return _dial(size, holes, source, False)


def grid_min_cost_to(size, holes, dest):
    """Min cost from every cell to ``dest``."""
    return _dial(size, holes, dest, True)


cdef _dial(Py_ssize_t size, holes, Py_ssize_t origin, bint to_mode):
    cdef Py_ssize_t n_cells = size * size
    cdef long max_dist = HOLE_COST * n_cells + 1
    cdef Py_ssize_t bucket_span = max_dist + HOLE_COST + 1
    cdef long* dist = <long*> malloc(n_cells * sizeof(long))
    cdef long* hole_mask = _to_c_array(holes, n_cells)
    # Bucket queue as linked lists: head[d] -> chain of node slots. Each cell
    # is re-queued at most once per incoming edge, so 4*n_cells slots suffice.
    cdef Py_ssize_t cap = 4 * n_cells + 8
    cdef long* head = <long*> malloc(bucket_span * sizeof(long))
    cdef long* node_cell = <long*> malloc(cap * sizeof(long))
    cdef long* node_next = <long*> malloc(cap * sizeof(long))
    if dist == NULL or head == NULL or node_cell == NULL or node_next == NULL:
        raise MemoryError()
    cdef Py_ssize_t n_nodes = 0
    cdef long d, cand, settled_entry, node
    cdef Py_ssize_t cell, r, c, nr, nc, nxt, k
    cdef int* drs = [-1, 1, 0, 0]
    cdef int* dcs = [0, 0, -1, 1]
    try:
        for cell in range(n_cells):
            dist[cell] = UNREACHED
        for d in range(bucket_span):
            head[d] = -1
        dist[origin] = 0
        node_cell[0] = origin
        node_next[0] = -1
        head[0] = 0
        n_nodes = 1
        for d in range(max_dist + 1):
            node = head[d]
            while node != -1:
                cell = node_cell[node]
                node = node_next[node]
                if dist[cell] != d:
                    continue
                r = cell // size
                c = cell - r * size
                settled_entry = HOLE_COST if hole_mask[cell] else STEP_COST
                for k in range(4):
                    nr = r + drs[k]
                    nc = c + dcs[k]
                    if nr < 0 or nr >= size or nc < 0 or nc >= size:
                        continue
                    nxt = nr * size + nc
                    if to_mode:
                        cand = d + settled_entry
                    else:
                        cand = d + (HOLE_COST if hole_mask[nxt] else STEP_COST)
                    if dist[nxt] == UNREACHED or cand < dist[nxt]:
                        dist[nxt] = cand
                        if n_nodes < cap:
                            node_cell[n_nodes] = nxt
                            node_next[n_nodes] = head[cand]
                            head[cand] = n_nodes
                            n_nodes += 1
        return [dist[cell] for cell in range(n_cells)]
    finally:
        free(dist)
        free(hole_mask)
        free(head)
        free(node_cell)
        free(node_next)
