"""Vector rearrangement constructions: bounded-prefix permutations, the
merging partition, and the color-proportional zero-sum window.

The permutation builder follows the classic basis-exchange argument with
exact rational arithmetic: coefficient vectors shrink level by level, each
level pushing the coefficients to a boundary point that frees one index.
The achieved prefix bound is re-checked post hoc; a violation is a hard
internal error, never silently accepted.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from ..errors import DomainError, InternalCheckError


@dataclass(frozen=True)
class ColoredVector:
    vec: tuple
    color: int

    def __post_init__(self):
        object.__setattr__(self, "vec", tuple(int(v) for v in self.vec))
        if self.color < 0:
            raise DomainError("color indices start at 0")


def _norm_inf(v):
    return max((abs(a) for a in v), default=0)


def _check_norms(vectors, zeta):
    if zeta < 0:
        raise DomainError("the norm bound must be nonnegative")
    for v in vectors:
        if _norm_inf(v) > zeta:
            raise DomainError(
                f"vector {v} exceeds the declared norm bound {zeta}")


def _kernel_direction(rows):
    """A nonzero exact-rational kernel vector of the given row system, or
    None when the columns are independent.  Deterministic."""
    num_rows = len(rows)
    num_cols = len(rows[0])
    work = [[Fraction(v) for v in row] for row in rows]
    pivot_col = [-1] * num_rows
    r = 0
    for c in range(num_cols):
        pr = next((i for i in range(r, num_rows) if work[i][c] != 0), None)
        if pr is None:
            continue
        work[r], work[pr] = work[pr], work[r]
        inv = 1 / work[r][c]
        work[r] = [v * inv for v in work[r]]
        for i in range(num_rows):
            if i != r and work[i][c] != 0:
                f = work[i][c]
                work[i] = [a - f * b for a, b in zip(work[i], work[r])]
        pivot_col[r] = c
        r += 1
        if r == num_rows:
            break
    pivots = set(pivot_col[:r])
    free = next((c for c in range(num_cols) if c not in pivots), None)
    if free is None:
        return None
    direction = [Fraction(0)] * num_cols
    direction[free] = Fraction(1)
    for i in range(r):
        direction[pivot_col[i]] = -work[i][free]
    return direction


def _push_to_boundary(indices, coeff, vectors, d):
    """Move the coefficient point inside [0,1]^k along kernel directions of
    (vectors, all-ones) until at most d+1 coordinates stay strictly
    fractional.  Equalities (coefficient total and weighted vector sum) are
    preserved exactly."""
    while True:
        frac = [i for i in indices if 0 < coeff[i] < 1]
        if len(frac) <= d + 1:
            return
        rows = [[Fraction(vectors[i][r]) for i in frac] for r in range(d)]
        rows.append([Fraction(1)] * len(frac))
        w = _kernel_direction(rows)
        if w is None:
            raise InternalCheckError("no exchange direction found despite "
                                     "excess fractional coordinates")
        steps = []
        for i, wi in zip(frac, w):
            if wi > 0:
                steps.append((1 - coeff[i]) / wi)
            elif wi < 0:
                steps.append(coeff[i] / -wi)
        t = min(steps)
        for i, wi in zip(frac, w):
            coeff[i] += t * wi


def steinitz_permutation(vectors, zeta) -> tuple:
    """A permutation pi with every prefix close to its proportional share:

        || sum_{i<=l} x_pi(i) - ((l-d)/m) * x ||_inf <= d * zeta

    for all l, where x is the total sum.  Returned as a tuple of indices.
    """
    vectors = [tuple(int(a) for a in v) for v in vectors]
    m = len(vectors)
    if m == 0:
        return ()
    d = len(vectors[0])
    _check_norms(vectors, zeta)

    if m <= d:
        order = tuple(range(m))
    else:
        active = list(range(m))
        coeff = {i: Fraction(m - d, m) for i in active}
        removed = []
        for level in range(m, d, -1):
            # shrink onto the next level's polytope, then free one index
            factor = Fraction(level - 1 - d, level - d)
            for i in active:
                coeff[i] *= factor
            _push_to_boundary(active, coeff, vectors, d)
            izero = next(i for i in active if coeff[i] == 0)
            active.remove(izero)
            del coeff[izero]
            removed.append(izero)
        order = tuple(active) + tuple(reversed(removed))

    # post-hoc certificate of the prefix bound
    total = [0] * d
    for v in vectors:
        total = [a + b for a, b in zip(total, v)]
    prefix = [0] * d
    for l, idx in enumerate(order, start=1):
        prefix = [a + b for a, b in zip(prefix, vectors[idx])]
        for r in range(d):
            dev = Fraction(prefix[r]) - Fraction(l - d, m) * total[r]
            if abs(dev) > d * zeta:
                raise InternalCheckError(
                    f"prefix bound violated at position {l}: |{dev}| > {d * zeta}")
    return order


# ---------------------------------------------------------------------------
# merging partition

def _one_dim_parts(values, zeta):
    """Partition index/value pairs summing to zero into zero-sum chunks of
    at most 2*zeta + 1 entries, by cutting at repeated prefix sums of a
    sign-balancing order."""
    parts = []
    pos = deque()
    neg = deque()
    for item in values:
        v = item[1]
        if v == 0:
            parts.append([item])
        elif v > 0:
            pos.append(item)
        else:
            neg.append(item)
    chunk = []
    seen = {0: 0}
    p = 0
    while pos or neg:
        if p > 0:
            item = neg.popleft()
        elif p < 0:
            item = pos.popleft()
        else:
            item = pos.popleft() if pos else neg.popleft()
        chunk.append(item)
        p += item[1]
        if p in seen:
            cut = seen[p]
            parts.append(chunk[cut:])
            chunk = chunk[:cut]
            seen = {val: at for val, at in seen.items() if at <= cut}
        else:
            seen[p] = len(chunk)
    if chunk:
        raise InternalCheckError("sign-balancing scan left a nonzero prefix")
    return parts


def _merge_one_coordinate(groups, sums, coord):
    """Refine the grouping so every union has a coordinate-`coord` sum that
    is sign-compatible with and dominated by the total.  The total of any
    later-merged coordinate stays conformal automatically because all its
    group values already share the total's sign."""
    total = sum(s[coord] for s in sums)
    flip = -1 if total < 0 else 1
    items = [(g, flip * s[coord]) for g, s in zip(groups, sums)]
    virtual = flip * total
    tagged = [(("real", i), v) for i, (_, v) in enumerate(items)]
    tagged += [(("virtual", k), -1) for k in range(virtual)]
    zeta = max((abs(v) for _, v in tagged), default=0)
    raw_parts = _one_dim_parts(tagged, zeta)
    new_groups = []
    new_sums = []
    for part in raw_parts:
        member_ids = [tag[1] for tag, _ in part if tag[0] == "real"]
        if not member_ids:
            continue
        merged = []
        acc = None
        for i in member_ids:
            merged.extend(groups[i])
            acc = sums[i] if acc is None else tuple(
                a + b for a, b in zip(acc, sums[i]))
        new_groups.append(merged)
        new_sums.append(acc)
    return new_groups, new_sums


def merge_partition(vectors, zeta, size_cap=None) -> list:
    """Partition indices so every part's vector sum is conformally below the
    total sum x.  For d = 1 part sizes obey |T_j| <= 6*zeta + 2 (verified);
    for d > 1 sizes are only certified against size_cap when one is given.

    Coordinates are processed last to first; each pass groups by one
    coordinate with the one-dimensional construction, and already-processed
    coordinates stay conformal because their group sums share the total's
    sign, so any union of groups remains dominated.
    """
    vectors = [tuple(int(a) for a in v) for v in vectors]
    if not vectors:
        return []
    d = len(vectors[0])
    _check_norms(vectors, zeta)
    groups = [[i] for i in range(len(vectors))]
    sums = list(vectors)
    for coord in range(d - 1, -1, -1):
        groups, sums = _merge_one_coordinate(groups, sums, coord)
    parts = [tuple(sorted(g)) for g in groups]
    if d == 1:
        bound = 6 * zeta + 2
        for part in parts:
            if len(part) > bound:
                raise InternalCheckError(
                    f"one-dimensional part size {len(part)} exceeds {bound}")
    elif size_cap is not None:
        for part in parts:
            if len(part) > size_cap:
                raise InternalCheckError(
                    f"part size {len(part)} exceeds the configured cap {size_cap}")
    total = [0] * d
    for v in vectors:
        total = [a + b for a, b in zip(total, v)]
    for part in parts:
        s = [0] * d
        for i in part:
            s = [a + b for a, b in zip(s, vectors[i])]
        if not all(a * b >= 0 and abs(a) <= abs(b) for a, b in zip(s, total)):
            raise InternalCheckError(f"part sum {s} not conformal to total {total}")
    return parts


# ---------------------------------------------------------------------------
# color-proportional zero-sum window

def colorful_subset(colored, alphas, node_cap=None):
    """A subset holding alpha_j * m vectors of each color j that sums to
    zero, found as a window between repeated prefix residuals of a
    rearranged lifted sequence.  Returns (sorted indices, m).

    Color counts must be proportional to alphas (count_j = alpha_j * mbar
    for one common mbar) and the whole family must sum to zero.  A repeated
    residual is guaranteed once the family is large enough; on smaller
    families the window is still searched for and its absence is reported
    as a domain error rather than an internal one.
    """
    if not colored:
        raise DomainError("need at least one colored vector")
    mu = len(alphas)
    if any(a < 1 for a in alphas):
        raise DomainError("color weights must be positive")
    d = len(colored[0].vec)
    counts = [0] * mu
    total = [0] * d
    for cv in colored:
        if cv.color >= mu:
            raise DomainError(f"color {cv.color} out of range for {mu} colors")
        counts[cv.color] += 1
        total = [a + b for a, b in zip(total, cv.vec)]
    if any(total):
        raise DomainError("colored family must sum to zero")
    mbars = {c // a for c, a in zip(counts, alphas)}
    if len(mbars) != 1 or any(c % a for c, a in zip(counts, alphas)):
        raise DomainError("color counts are not proportional to the weights")

    zeta = max(1, max(_norm_inf(cv.vec) for cv in colored))
    alpha = sum(alphas)
    big_m = len(colored)
    lifted = []
    for cv in colored:
        unit = [0] * mu
        unit[cv.color] = 1
        lifted.append(tuple(cv.vec) + tuple(unit))
    order = steinitz_permutation(lifted, zeta)

    # prefix residuals at positions l_k = k*alpha + d + mu are integral
    dim = d + mu
    lifted_total = [0] * dim
    for v in lifted:
        lifted_total = [a + b for a, b in zip(lifted_total, v)]
    prefix = [0] * dim
    residual_at = {}
    window = None
    pos = 0
    k = 0
    guaranteed = big_m > (2 * d * zeta + 2 * mu * zeta + 1) ** dim * alpha + alpha + d + mu
    while True:
        nxt = (k + 1) * alpha + d + mu
        if nxt > big_m:
            break
        while pos < nxt:
            prefix = [a + b for a, b in zip(prefix, lifted[order[pos]])]
            pos += 1
        k += 1
        share = [0] * d + [k * a for a in alphas]
        residual = tuple(p - s for p, s in zip(prefix, share))
        if residual in residual_at:
            window = (residual_at[residual], k)
            break
        residual_at[residual] = k
    if window is None:
        if guaranteed:
            raise InternalCheckError(
                "no repeated prefix residual despite the pigeonhole guarantee")
        raise DomainError(
            "family too small to pin a proportional zero-sum window; no "
            "repeated prefix residual found")

    k1, k2 = window
    m = k2 - k1
    lo = k1 * alpha + d + mu
    hi = k2 * alpha + d + mu
    chosen = sorted(order[i] for i in range(lo, hi))

    # certify the window
    check_counts = [0] * mu
    check_sum = [0] * d
    for i in chosen:
        check_counts[colored[i].color] += 1
        check_sum = [a + b for a, b in zip(check_sum, colored[i].vec)]
    if any(check_sum) or any(c != a * m for c, a in zip(check_counts, alphas)):
        raise InternalCheckError("extracted window fails its own contract")
    bound = (2 * d * zeta + 2 * mu * zeta + 1) ** dim
    if m > bound:
        raise InternalCheckError(f"window multiplicity {m} exceeds {bound}")
    return chosen, m
