# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled board kernels.

Same signatures and semantics as ``pycore``; see that module for the
documented reference behaviour. Everything here trades numpy vectorization
for tight C loops over stack-allocated scratch, which is what the per-step
legality sweep actually spends its time on.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

NAME = "compiled"

DEF MAX_CELLS = 1024  # supports grids up to 32x32, far beyond any variant


cdef inline int _cell(int r, int c, int g) nogil:
    return r * g + c


cdef void _fill_occupancy(const int[:, ::1] pos, int n, int g, int skip, int* occ) nogil:
    cdef int i
    for i in range(g * g):
        occ[i] = -1
    for i in range(n):
        if i != skip:
            occ[_cell(pos[i, 0], pos[i, 1], g)] = i


cdef int _bfs_component(
    const int[:, ::1] pos, int g, int* occ, unsigned char* seen, int start, int* queue
) nogil:
    """Marks the side-connected component containing ``start``; returns its size."""
    cdef int head = 0, tail = 0, reached = 1
    cdef int r, c, cur, j
    cdef int dr[4]
    cdef int dc[4]
    dr[0] = -1; dr[1] = 1; dr[2] = 0; dr[3] = 0
    dc[0] = 0; dc[1] = 0; dc[2] = -1; dc[3] = 1
    seen[start] = 1
    queue[tail] = _cell(pos[start, 0], pos[start, 1], g)
    tail += 1
    cdef int k, nr, nc
    while head < tail:
        cur = queue[head]
        head += 1
        r = cur // g
        c = cur - r * g
        for k in range(4):
            nr = r + dr[k]
            nc = c + dc[k]
            if 0 <= nr < g and 0 <= nc < g:
                j = occ[_cell(nr, nc, g)]
                if j >= 0 and not seen[j]:
                    seen[j] = 1
                    reached += 1
                    queue[tail] = _cell(nr, nc, g)
                    tail += 1
    return reached


cdef const int[:, ::1] _as_positions(positions):
    return np.ascontiguousarray(positions, dtype=np.int32)


def adjacency_matrix(positions, int g):
    """Side-adjacency between cards: A[i, j] = 1 iff Manhattan distance 1."""
    cdef const int[:, ::1] pos = _as_positions(positions)
    cdef int n = pos.shape[0]
    out = np.zeros((n, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] a = out
    cdef int i, j, d
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(pos[i, 0] - pos[j, 0]) + abs(pos[i, 1] - pos[j, 1])
            if d == 1:
                a[i, j] = 1
                a[j, i] = 1
    return out


def is_connected(positions, int g):
    """True when all cards form one side-connected group."""
    cdef const int[:, ::1] pos = _as_positions(positions)
    cdef int n = pos.shape[0]
    if n <= 1:
        return True
    cdef int occ[MAX_CELLS]
    cdef int queue[MAX_CELLS]
    cdef unsigned char* seen = <unsigned char*> malloc(n)
    if seen == NULL:
        raise MemoryError()
    cdef int i, reached
    try:
        for i in range(n):
            seen[i] = 0
        _fill_occupancy(pos, n, g, -1, occ)
        reached = _bfs_component(pos, g, occ, seen, 0, queue)
    finally:
        free(seen)
    return reached == n


def legal_targets(positions, int g, int card):
    """Flat g*g mask of cells where ``card`` may be moved; see pycore."""
    cdef const int[:, ::1] pos = _as_positions(positions)
    out = np.zeros(g * g, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    _legal_targets_into(pos, g, card, o)
    return out


cdef void _legal_targets_into(
    const int[:, ::1] pos, int g, int card, unsigned char[::1] out
):
    cdef int n = pos.shape[0]
    cdef int occ[MAX_CELLS]
    cdef int queue[MAX_CELLS]
    cdef unsigned long long touch[MAX_CELLS]
    cdef int* comp = <int*> malloc(n * sizeof(int))
    cdef unsigned char* seen = <unsigned char*> malloc(n)
    if comp == NULL or seen == NULL:
        free(comp)
        free(seen)
        raise MemoryError()
    cdef int i, r, c, cell, own, num_comps = 0
    cdef int head, tail, cur, j, k, nr, nc
    cdef unsigned long long full, bit
    cdef int dr[4]
    cdef int dc[4]
    dr[0] = -1; dr[1] = 1; dr[2] = 0; dr[3] = 0
    dc[0] = 0; dc[1] = 0; dc[2] = -1; dc[3] = 1
    try:
        _fill_occupancy(pos, n, g, card, occ)
        for i in range(n):
            comp[i] = -1
            seen[i] = 0
        # label the components left after lifting the card
        for i in range(n):
            if i == card or comp[i] >= 0:
                continue
            comp[i] = num_comps
            head = tail = 0
            queue[tail] = _cell(pos[i, 0], pos[i, 1], g)
            tail += 1
            while head < tail:
                cur = queue[head]
                head += 1
                r = cur // g
                c = cur - r * g
                for k in range(4):
                    nr = r + dr[k]
                    nc = c + dc[k]
                    if 0 <= nr < g and 0 <= nc < g:
                        j = occ[_cell(nr, nc, g)]
                        if j >= 0 and comp[j] < 0:
                            comp[j] = num_comps
                            queue[tail] = _cell(nr, nc, g)
                            tail += 1
            num_comps += 1

        full = (<unsigned long long> 1 << num_comps) - 1
        for cell in range(g * g):
            touch[cell] = 0
        for i in range(n):
            if i == card:
                continue
            bit = <unsigned long long> 1 << comp[i]
            r = pos[i, 0]
            c = pos[i, 1]
            if r > 0:
                touch[_cell(r - 1, c, g)] |= bit
            if r < g - 1:
                touch[_cell(r + 1, c, g)] |= bit
            if c > 0:
                touch[_cell(r, c - 1, g)] |= bit
            if c < g - 1:
                touch[_cell(r, c + 1, g)] |= bit

        own = _cell(pos[card, 0], pos[card, 1], g)
        for cell in range(g * g):
            if occ[cell] < 0 and cell != own and touch[cell] == full:
                out[cell] = 1
    finally:
        free(comp)
        free(seen)


def legal_targets_many(positions, int g, cards):
    cdef const int[:, ::1] pos = _as_positions(positions)
    cdef const long[::1] card_ids = np.ascontiguousarray(cards, dtype=np.int64)
    cdef int m = card_ids.shape[0]
    out = np.zeros((m, g * g), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    cdef int k
    for k in range(m):
        _legal_targets_into(pos, g, <int> card_ids[k], o[k])
    return out


def colour_connected_flags(positions, colours, int num_colours, int g):
    """Per-colour flag: 1 when that colour's cards form one connected group."""
    cdef const int[:, ::1] pos = _as_positions(positions)
    cdef const signed char[::1] col = np.ascontiguousarray(colours, dtype=np.int8)
    cdef int n = pos.shape[0]
    out = np.zeros(num_colours, dtype=np.uint8)
    cdef unsigned char[::1] flags = out
    cdef int occ[MAX_CELLS]
    cdef int queue[MAX_CELLS]
    cdef unsigned char* seen = <unsigned char*> malloc(n if n > 0 else 1)
    if seen == NULL:
        raise MemoryError()
    cdef int colour, i, members, start, head, tail, cur, r, c, k, nr, nc, j, reached
    cdef int dr[4]
    cdef int dc[4]
    dr[0] = -1; dr[1] = 1; dr[2] = 0; dr[3] = 0
    dc[0] = 0; dc[1] = 0; dc[2] = -1; dc[3] = 1
    try:
        # occupancy over all cards; colour filter applied during the walk
        _fill_occupancy(pos, n, g, -1, occ)
        for colour in range(num_colours):
            members = 0
            start = -1
            for i in range(n):
                if col[i] == colour:
                    members += 1
                    if start < 0:
                        start = i
                    seen[i] = 0
            if members == 0:
                flags[colour] = 1
                continue
            seen[start] = 1
            reached = 1
            head = tail = 0
            queue[tail] = _cell(pos[start, 0], pos[start, 1], g)
            tail += 1
            while head < tail:
                cur = queue[head]
                head += 1
                r = cur // g
                c = cur - r * g
                for k in range(4):
                    nr = r + dr[k]
                    nc = c + dc[k]
                    if 0 <= nr < g and 0 <= nc < g:
                        j = occ[_cell(nr, nc, g)]
                        if j >= 0 and col[j] == colour and not seen[j]:
                            seen[j] = 1
                            reached += 1
                            queue[tail] = _cell(nr, nc, g)
                            tail += 1
            flags[colour] = 1 if reached == members else 0
    finally:
        free(seen)
    return out


def count_complete_colour_clusters(positions, colours, int num_colours, int g):
    return int(colour_connected_flags(positions, colours, num_colours, g).sum())
