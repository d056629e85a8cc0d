"""Pure-Python board kernels.

Reference implementation of the connectivity primitives the rules engine
leans on. The compiled module mirrors these signatures exactly; either one
can back the engine. Positions are int32 arrays of shape (n, 2) holding
(row, col), colours int8 of shape (n,), grids are g x g flattened row-major.
"""

from __future__ import annotations

from collections import deque

import numpy as np

NAME = "python"


def adjacency_matrix(positions: np.ndarray, g: int) -> np.ndarray:
    """Side-adjacency between cards: A[i, j] = 1 iff Manhattan distance 1."""
    rows = positions[:, 0].astype(np.int64)
    cols = positions[:, 1].astype(np.int64)
    dist = np.abs(rows[:, None] - rows[None, :]) + np.abs(cols[:, None] - cols[None, :])
    return (dist == 1).astype(np.uint8)


def _occupancy(positions: np.ndarray, g: int, skip: int = -1) -> list[int]:
    occ = [-1] * (g * g)
    for i in range(len(positions)):
        if i == skip:
            continue
        occ[int(positions[i, 0]) * g + int(positions[i, 1])] = i
    return occ


def is_connected(positions: np.ndarray, g: int) -> bool:
    """True when all cards form one side-connected group."""
    n = len(positions)
    if n <= 1:
        return True
    occ = _occupancy(positions, g)
    seen = [False] * n
    seen[0] = True
    queue = deque([(int(positions[0, 0]), int(positions[0, 1]))])
    reached = 1
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < g and 0 <= nc < g:
                j = occ[nr * g + nc]
                if j >= 0 and not seen[j]:
                    seen[j] = True
                    reached += 1
                    queue.append((nr, nc))
    return reached == n


def legal_targets(positions: np.ndarray, g: int, card: int) -> np.ndarray:
    """Flat g*g mask of cells where ``card`` may be moved.

    A target is legal when it is in bounds, unoccupied, differs from the
    card's current cell, and the move leaves the whole group connected.
    Lifting the card splits the rest into components; the landing cell must
    touch every one of them, which is both necessary and sufficient because
    distinct components are never adjacent to each other.
    """
    n = len(positions)
    occ = _occupancy(positions, g, skip=card)
    comp = [-1] * n
    num_comps = 0
    for i in range(n):
        if i == card or comp[i] >= 0:
            continue
        comp[i] = num_comps
        queue = deque([(int(positions[i, 0]), int(positions[i, 1]))])
        while queue:
            r, c = queue.popleft()
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < g and 0 <= nc < g:
                    j = occ[nr * g + nc]
                    if j >= 0 and comp[j] < 0:
                        comp[j] = num_comps
                        queue.append((nr, nc))
        num_comps += 1

    full = (1 << num_comps) - 1
    touch = [0] * (g * g)
    for i in range(n):
        if i == card:
            continue
        bit = 1 << comp[i]
        r = int(positions[i, 0])
        c = int(positions[i, 1])
        if r > 0:
            touch[(r - 1) * g + c] |= bit
        if r < g - 1:
            touch[(r + 1) * g + c] |= bit
        if c > 0:
            touch[r * g + c - 1] |= bit
        if c < g - 1:
            touch[r * g + c + 1] |= bit

    out = np.zeros(g * g, dtype=np.uint8)
    own = int(positions[card, 0]) * g + int(positions[card, 1])
    for cell in range(g * g):
        if occ[cell] < 0 and cell != own and touch[cell] == full:
            out[cell] = 1
    return out


def legal_targets_many(positions: np.ndarray, g: int, cards: np.ndarray) -> np.ndarray:
    out = np.zeros((len(cards), g * g), dtype=np.uint8)
    for k, card in enumerate(cards):
        out[k] = legal_targets(positions, g, int(card))
    return out


def colour_connected_flags(
    positions: np.ndarray, colours: np.ndarray, num_colours: int, g: int
) -> np.ndarray:
    """Per-colour flag: 1 when that colour's cards form one connected group."""
    n = len(positions)
    occ = _occupancy(positions, g)
    flags = np.zeros(num_colours, dtype=np.uint8)
    seen = [False] * n
    for colour in range(num_colours):
        members = [i for i in range(n) if int(colours[i]) == colour]
        if not members:
            flags[colour] = 1
            continue
        for i in members:
            seen[i] = False
        start = members[0]
        seen[start] = True
        queue = deque([(int(positions[start, 0]), int(positions[start, 1]))])
        reached = 1
        while queue:
            r, c = queue.popleft()
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < g and 0 <= nc < g:
                    j = occ[nr * g + nc]
                    if j >= 0 and int(colours[j]) == colour and not seen[j]:
                        seen[j] = True
                        reached += 1
                        queue.append((nr, nc))
        flags[colour] = 1 if reached == len(members) else 0
    return flags


def count_complete_colour_clusters(
    positions: np.ndarray, colours: np.ndarray, num_colours: int, g: int
) -> int:
    return int(colour_connected_flags(positions, colours, num_colours, g).sum())
