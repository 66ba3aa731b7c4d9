"""Brute-force Graver-basis oracle over bounded integer boxes.

Everything here is exact and enumeration-based: kernel points come from a
depth-first scan with interval pruning, minimality is decided by searching
the conformal box under a candidate, and decompositions are greedy.  The
oracle is meant for desk-scale matrices; a node cap guards against runaway
boxes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .blockcore import as_matrix, as_vector, conformal_leq, mat_vec
from .errors import DomainError, IncompleteBasisError, ResourceCapError

DEFAULT_NODE_CAP = 10 ** 8


def _node_cap(node_cap):
    if node_cap is not None:
        return node_cap
    env = os.environ.get("GRAVER_BLOCKS_NODE_CAP")
    return int(env) if env else DEFAULT_NODE_CAP


@dataclass(frozen=True)
class GraverSet:
    """Conformally minimal nonzero kernel points found within a search box.

    `complete_within_radius` records that the set is exactly the minimal
    kernel points of max-norm <= radius; it equals the full Graver basis
    only when the true basis happens to lie inside that radius, which the
    oracle cannot certify on its own.
    """
    matrix: tuple
    radius: int
    elements: tuple
    complete_within_radius: bool = True

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)


def _scan_kernel(matrix, box, node_cap, visit, rhs=None):
    """Depth-first scan of the solutions of matrix . x = rhs in the box,
    calling visit(point) for each hit; a truthy return from visit stops the
    scan.  rhs defaults to zero (kernel points).

    Walks coordinates left to right.  For the current coordinate, every row
    it touches demands that the partial sum stay cancellable by the interval
    hull of the remaining columns; each such row therefore pins the value to
    an integer interval, and only the intersection of those intervals is
    scanned.  Rows not touched by a column keep both their partial sum and
    their remaining hull, so they never need re-checking.
    """
    num_rows = len(matrix)
    num_cols = len(box)
    cols = [[matrix[r][c] for r in range(num_rows)] for c in range(num_cols)]

    suff_lo = [[0] * num_rows for _ in range(num_cols + 1)]
    suff_hi = [[0] * num_rows for _ in range(num_cols + 1)]
    for c in range(num_cols - 1, -1, -1):
        lo, hi = box[c]
        for r in range(num_rows):
            a = cols[c][r]
            vals = (a * lo, a * hi)
            suff_lo[c][r] = suff_lo[c + 1][r] + min(vals)
            suff_hi[c][r] = suff_hi[c + 1][r] + max(vals)
    touched = [[(r, cols[c][r]) for r in range(num_rows) if cols[c][r] != 0]
               for c in range(num_cols)]

    point = [0] * num_cols
    partial = [0] * num_rows if rhs is None else [-int(v) for v in rhs]
    budget = [node_cap]

    def descend(c):
        if c == num_cols:
            return bool(visit(tuple(point)))
        vlo, vhi = box[c]
        rows = touched[c]
        nxt_lo, nxt_hi = suff_lo[c + 1], suff_hi[c + 1]
        # each touched row r wants partial[r] + a*v + [nxt_lo, nxt_hi] to
        # straddle 0, i.e. v inside an integer interval; intersect them all
        for r, a in rows:
            top = -nxt_lo[r] - partial[r]
            bot = -nxt_hi[r] - partial[r]
            if a > 0:
                vlo = max(vlo, -((-bot) // a))
                vhi = min(vhi, top // a)
            else:
                vlo = max(vlo, -((-top) // a))
                vhi = min(vhi, bot // a)
            if vlo > vhi:
                return False
        budget[0] -= vhi - vlo + 1
        if budget[0] < 0:
            raise ResourceCapError(
                f"enumeration exceeded the node cap of {node_cap}", cap=node_cap)
        for v in range(vlo, vhi + 1):
            point[c] = v
            for r, a in rows:
                partial[r] += a * v
            stop = descend(c + 1)
            for r, a in rows:
                partial[r] -= a * v
            if stop:
                return True
        point[c] = 0
        return False

    if num_cols == 0:
        if num_rows == 0 or all(p == 0 for p in partial):
            visit(())
        return
    # rows with no nonzero coefficient anywhere are never re-checked below
    if all(suff_lo[0][r] + partial[r] <= 0 <= suff_hi[0][r] + partial[r]
           for r in range(num_rows)):
        descend(0)


def _checked_box(matrix, box):
    box = [(int(lo), int(hi)) for lo, hi in box]
    if matrix and len(matrix[0]) != len(box):
        raise DomainError("box arity does not match matrix width")
    for lo, hi in box:
        if lo > hi:
            raise DomainError("empty box interval")
    return box


def kernel_points(matrix, box, node_cap=None) -> list:
    """All lattice points x with matrix . x = 0 inside the finite box.

    `box` is a per-coordinate sequence of (lo, hi) integer intervals.
    Output order is lexicographic.
    """
    matrix = as_matrix(matrix)
    box = _checked_box(matrix, box)
    found = []
    _scan_kernel(matrix, box, _node_cap(node_cap), found.append)
    return found


def _kernel_point_exists(matrix, box, exclude, node_cap=None) -> bool:
    """Whether the box holds a kernel point outside `exclude` (early exit)."""
    matrix = as_matrix(matrix)
    box = _checked_box(matrix, box)
    hit = []

    def visit(point):
        if point not in exclude:
            hit.append(point)
            return True
        return False

    _scan_kernel(matrix, box, _node_cap(node_cap), visit)
    return bool(hit)


def graver_within(matrix, radius: int, node_cap=None) -> GraverSet:
    """All conformally minimal nonzero kernel points of max-norm <= radius.

    Minimality inside the radius is exact: any dominated competitor of a
    candidate lies in the same box and is therefore enumerated too.
    """
    if radius < 1:
        raise DomainError("radius must be a positive integer")
    matrix = as_matrix(matrix)
    width = len(matrix[0]) if matrix else 0
    points = kernel_points(matrix, [(-radius, radius)] * width, node_cap=node_cap)
    nonzero = [p for p in points if any(p)]
    # a strict dominator always has strictly smaller 1-norm, so scanning in
    # 1-norm order lets each candidate be tested against minimal ones only
    nonzero.sort(key=lambda p: (sum(abs(v) for v in p), p))
    minimal = []
    for cand in nonzero:
        if not any(conformal_leq(m, cand) for m in minimal):
            minimal.append(cand)
    minimal.sort(key=lambda p: (max(abs(v) for v in p), p))
    return GraverSet(matrix=matrix, radius=radius, elements=tuple(minimal))


def conformal_box(g):
    """The box {eta : eta conformally below g}."""
    return [(min(0, v), max(0, v)) for v in g]


def is_graver_element(matrix, g, node_cap=None) -> bool:
    """Exact minimality check: no nonzero kernel point other than g fits
    conformally under g.  The conformal box bounds the search, so this is
    exact for any g regardless of enumeration radii used elsewhere."""
    matrix = as_matrix(matrix)
    g = as_vector(g)
    if not any(g):
        raise DomainError("the zero vector is never a Graver element")
    if any(mat_vec(matrix, g)):
        raise DomainError("candidate is not in the kernel")
    zero = (0,) * len(g)
    return not _kernel_point_exists(matrix, conformal_box(g), {zero, g},
                                    node_cap=node_cap)


def sign_decompose(matrix, x, basis: GraverSet) -> list:
    """Write x as a sign-compatible sum of basis elements (with repetition).

    Greedy: repeatedly subtract the first basis element that fits under the
    remaining residual.  Succeeds whenever the basis holds every minimal
    kernel point of the conformal box of x; each subtraction shrinks that
    box, so progress is monotone.
    """
    matrix = as_matrix(matrix)
    x = as_vector(x)
    if any(mat_vec(matrix, x)):
        raise DomainError("vector to decompose is not in the kernel")
    parts = []
    residual = x
    while any(residual):
        for g in basis.elements:
            if conformal_leq(g, residual):
                parts.append(g)
                residual = tuple(r - v for r, v in zip(residual, g))
                break
        else:
            raise IncompleteBasisError(
                "no basis element fits under the remaining residual "
                f"{residual}; the supplied basis is incomplete for this vector")
    return parts
