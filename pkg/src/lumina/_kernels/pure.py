"""Pure-Python kernels: the reference implementation of the hot loops.

The compiled extension in ``_cykernels.pyx`` implements the same functions
with the same semantics; either lane can serve every caller. Keep the two
in lockstep — the parity tests compare them on random inputs.

Kernels work on pre-digested data (token ids, flat cell indices) so both
lanes stay free of string handling.
"""

from __future__ import annotations

from typing import Sequence

#: Cost of entering a hole cell vs. a normal cell.
HOLE_COST = 4
STEP_COST = 1
UNREACHED = -1


def list_solvable(current: Sequence[int], target: Sequence[int], lock: int) -> bool:
    """Whether ``target`` is still reachable from (current, lock).

    Indices below ``lock`` can no longer be popped, so the locked prefix
    must already match the target and the rest of the target must embed as
    a subsequence of the rest of the list.
    """
    n, m = len(current), len(target)
    if lock > m:
        return False
    for i in range(lock):
        if current[i] != target[i]:
            return False
    return _is_subsequence(target, lock, current, lock)


def list_optimal_pops(current: Sequence[int], target: Sequence[int], lock: int) -> list[int]:
    """All pop indices that keep the target reachable.

    Every pop removes exactly one element and the number of required pops
    is fixed, so the solvability-preserving pops are exactly the optimal
    ones. Returns indices in increasing order; empty when the state is the
    goal or unsolvable.
    """
    n, m = len(current), len(target)
    if n <= m or lock > m:
        return []
    for i in range(lock):
        if current[i] != target[i]:
            return []
    out = []
    # pop(i) leaves current[:i] + current[i+1:] with the lock moved to i, so
    # it preserves solvability iff current[:i] matches target[:i] and
    # target[i:] embeds in current[i+1:].
    limit = min(n - 1, m)
    i = lock
    while i <= limit:
        if _is_subsequence(target, i, current, i + 1):
            out.append(i)
        # The next candidate needs the prefix match to extend through i.
        if i >= m or current[i] != target[i]:
            break
        i += 1
    return out


def _is_subsequence(target: Sequence[int], t_from: int, current: Sequence[int], c_from: int) -> bool:
    m, n = len(target), len(current)
    j = c_from
    for i in range(t_from, m):
        want = target[i]
        while j < n and current[j] != want:
            j += 1
        if j >= n:
            return False
        j += 1
    return True


def grid_min_cost_from(size: int, holes: Sequence[int], source: int) -> list[int]:
    """Min cost from ``source`` to every cell; entering a hole costs 4.

    Cells are flat row-major indices; ``holes`` is a 0/1 mask of length
    size*size. The source's own entry cost is not counted.
    """
    return _dial(size, holes, source, to_mode=False)


def grid_min_cost_to(size: int, holes: Sequence[int], dest: int) -> list[int]:
    """Min cost from every cell to ``dest`` (the cost of each entered cell,
    destination included, starting cell excluded)."""
    return _dial(size, holes, dest, to_mode=True)


def _dial(size: int, holes: Sequence[int], origin: int, to_mode: bool) -> list[int]:
    # Bucket-queue Dijkstra; edge weights are 1 or 4 so distances are dense.
    n_cells = size * size
    max_dist = HOLE_COST * n_cells + 1
    dist = [UNREACHED] * n_cells
    dist[origin] = 0
    buckets: list[list[int]] = [[] for _ in range(max_dist + HOLE_COST + 1)]
    buckets[0].append(origin)
    for d in range(max_dist + 1):
        for cell in buckets[d]:
            if dist[cell] != d:
                continue
            r, c = divmod(cell, size)
            # In to_mode the relax step walks the path backwards, so the cost
            # of the edge is the entry cost of the settled cell.
            settled_entry = HOLE_COST if holes[cell] else STEP_COST
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nr, nc = r + dr, c + dc
                if not (0 <= nr < size and 0 <= nc < size):
                    continue
                nxt = nr * size + nc
                if to_mode:
                    cand = d + settled_entry
                else:
                    cand = d + (HOLE_COST if holes[nxt] else STEP_COST)
                if dist[nxt] == UNREACHED or cand < dist[nxt]:
                    dist[nxt] = cand
                    buckets[cand].append(nxt)
    return dist
