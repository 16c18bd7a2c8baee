"""Marching squares on a regular grid.

Nodes with ``field < level`` count as inside.  Crossing points are placed
by linear interpolation along cell edges; saddle cells are resolved by the
value at the cell centre (mean of the corners).  Every inside node ends up
strictly inside the polygon built around it.
"""
from __future__ import annotations

import numpy as np

# corner order: 0 (i, j), 1 (i+1, j), 2 (i+1, j+1), 3 (i, j+1)
# edge order: 0 bottom (0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3)
_SINGLE = {}
for _case in range(1, 15):
    if _case in (5, 10):
        continue
    bits = [(_case >> k) & 1 for k in range(4)]
    edges = [e for e, (a, b) in enumerate(((0, 1), (1, 2), (3, 2), (0, 3))) if bits[a] != bits[b]]
    _SINGLE[_case] = tuple(edges)


def _edge_key(i: int, j: int, e: int) -> tuple:
    if e == 0:
        return ("h", i, j)
    if e == 1:
        return ("v", i + 1, j)
    if e == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def marching_squares(field: np.ndarray, xs: np.ndarray, ys: np.ndarray, level: float = 0.0):
    """Contours of ``field[i, j]`` sampled at ``(xs[i], ys[j])``.

    Returns ``(closed, open)``: lists of complex vertex arrays.  Open chains
    end on the grid boundary.
    """
    F = np.asarray(field, dtype=np.float64)
    inside = F < level
    nx, ny = F.shape
    case = (inside[:-1, :-1].astype(np.int8)
            | (inside[1:, :-1].astype(np.int8) << 1)
            | (inside[1:, 1:].astype(np.int8) << 2)
            | (inside[:-1, 1:].astype(np.int8) << 3))
    adj: dict[tuple, list[tuple]] = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    ci, cj = np.nonzero((case != 0) & (case != 15))
    for i, j in zip(ci.tolist(), cj.tolist()):
        c = int(case[i, j])
        if c in (5, 10):
            centre_in = 0.25 * (F[i, j] + F[i + 1, j] + F[i + 1, j + 1] + F[i, j + 1]) < level
            if (c == 5) == centre_in:
                pairs = ((0, 1), (2, 3))
            else:
                pairs = ((3, 0), (1, 2))
        else:
            pairs = (_SINGLE[c],)
        for a, b in pairs:
            link(_edge_key(i, j, a), _edge_key(i, j, b))

    def point(key) -> complex:
        kind, i, j = key
        if kind == "h":
            f0, f1 = F[i, j], F[i + 1, j]
            t = (level - f0) / (f1 - f0)
            return complex(xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
        f0, f1 = F[i, j], F[i, j + 1]
        t = (level - f0) / (f1 - f0)
        return complex(xs[i], ys[j] + t * (ys[j + 1] - ys[j]))

    seen: set = set()
    closed, opened = [], []
    # chains that start at a boundary edge first, then loops
    starts = [k for k, v in adj.items() if len(v) == 1] + list(adj.keys())
    for start in starts:
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        is_loop = False
        while True:
            nxt = [n for n in adj[cur] if n != prev]
            if not nxt:
                break
            n = nxt[0]
            if n == start:
                is_loop = True
                break
            if n in seen:
                break
            chain.append(n)
            seen.add(n)
            prev, cur = cur, n
        pts = np.array([point(k) for k in chain], dtype=np.complex128)
        (closed if is_loop else opened).append(pts)
    return closed, opened


__all__ = ["marching_squares"]
