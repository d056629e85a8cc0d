"""Independent brute-force reference implementations used only by tests.

Everything here is written for obviousness, not speed, and deliberately
avoids the package's kernel code paths so the two can disagree.
"""

from __future__ import annotations

import numpy as np


def flood_fill_connected(cells: set[tuple[int, int]]) -> bool:
    """True when the cell set is one side-connected component."""
    if len(cells) <= 1:
        return True
    start = next(iter(cells))
    stack = [start]
    seen = {start}
    while stack:
        r, c = stack.pop()
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(cells)


def brute_force_move_targets(positions: np.ndarray, g: int, card: int) -> set[tuple[int, int]]:
    """All legal landing cells for ``card``: try every cell, flood fill."""
    occupied = {(int(r), int(c)) for r, c in positions}
    own = (int(positions[card, 0]), int(positions[card, 1]))
    others = occupied - {own}
    out = set()
    for r in range(g):
        for c in range(g):
            cell = (r, c)
            if cell in others or cell == own:
                continue
            if flood_fill_connected(others | {cell}):
                out.add(cell)
    return out


def matrix_power_connected(positions: np.ndarray, g: int) -> bool:
    """Connectivity via boolean powers of (I + A), the reachability matrix."""
    n = len(positions)
    rows = positions[:, 0].astype(np.int64)
    cols = positions[:, 1].astype(np.int64)
    dist = np.abs(rows[:, None] - rows[None, :]) + np.abs(cols[:, None] - cols[None, :])
    reach = ((dist == 1) | np.eye(n, dtype=bool)).astype(bool)
    power = np.eye(n, dtype=bool)
    for _ in range(n - 1):
        power = power @ reach
    return bool(power.all())


def matrix_power_move_targets(positions: np.ndarray, g: int, card: int) -> set[tuple[int, int]]:
    """Move targets judged by the reachability-matrix connectivity test."""
    occupied = {(int(r), int(c)) for r, c in positions}
    out = set()
    for r in range(g):
        for c in range(g):
            cell = (r, c)
            if cell in occupied:
                continue
            trial = positions.copy()
            trial[card, 0] = r
            trial[card, 1] = c
            if matrix_power_connected(trial, g):
                out.add(cell)
    return out


def per_colour_cluster_flags(
    positions: np.ndarray, colours: np.ndarray, num_colours: int
) -> list[bool]:
    """Per colour: do that colour's cards form one side-connected group?"""
    flags = []
    for colour in range(num_colours):
        cells = {
            (int(positions[i, 0]), int(positions[i, 1]))
            for i in range(len(positions))
            if int(colours[i]) == colour
        }
        flags.append(flood_fill_connected(cells))
    return flags


def brute_force_win(positions: np.ndarray, colours: np.ndarray, num_colours: int) -> bool:
    return all(per_colour_cluster_flags(positions, colours, num_colours))


def random_connected_board(
    rng: np.random.Generator, n: int, g: int, num_colours: int
) -> tuple[np.ndarray, np.ndarray]:
    """Grow a random connected configuration by sequential adjacent placement."""
    first = (int(rng.integers(2, g - 2)), int(rng.integers(2, g - 2)))
    cells = [first]
    taken = {first}
    while len(cells) < n:
        base = cells[int(rng.integers(0, len(cells)))]
        r, c = base
        options = [
            (nr, nc)
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
            if 0 <= nr < g and 0 <= nc < g and (nr, nc) not in taken
        ]
        if not options:
            continue
        cell = options[int(rng.integers(0, len(options)))]
        cells.append(cell)
        taken.add(cell)
    positions = np.array(cells, dtype=np.int32)
    per_colour = n // num_colours
    colours = rng.permutation(np.repeat(np.arange(num_colours), per_colour)).astype(np.int8)
    return positions, colours
