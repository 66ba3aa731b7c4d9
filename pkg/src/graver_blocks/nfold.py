"""Exact solver for generalized n-fold integer programs over bricks.

A generalized n-fold instance is an ordered list of bricks, each carrying a
top block (rows shared across bricks), optional local rows with their own
right-hand side, finite bounds, and per-coordinate objective terms:

    ( T_1  T_2 ... T_k ) x = top_rhs
    ( L_1              ) x^1 = local_rhs_1
    (      L_2         ) x^2 = local_rhs_2
            ...

Brick widths may differ, which is what lets a 4-block instance drop into
this shape (brick 0 has width tB, the rest width tA).  The solver is a
dynamic program over bricks whose state is the accumulated top-row partial
sum; states are pruned against the interval hull reachable from the bricks
still to come, so no feasible completion is ever discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blockcore import (
    BlockInstance,
    BlockVector,
    LinearObjective,
    LinearTerm,
    QuadraticTerm,
    SeparableConvexObjective,
    TableTerm,
    as_matrix,
    as_vector,
    mat_vec,
)
from .errors import DomainError, ResourceCapError, StructuralError, UnsupportedStructureError
from .graverlab import _node_cap, _scan_kernel

DEFAULT_STATE_CAP = 2_000_000


@dataclass(frozen=True)
class NFoldBrick:
    top: tuple           # s_top x width
    local: tuple         # zero or more local rows, each of the brick width
    local_rhs: tuple
    lower: tuple
    upper: tuple
    terms: tuple         # one objective term per coordinate

    def __post_init__(self):
        object.__setattr__(self, "top", as_matrix(self.top))
        object.__setattr__(self, "local", as_matrix(self.local))
        object.__setattr__(self, "local_rhs", as_vector(self.local_rhs))
        object.__setattr__(self, "lower", as_vector(self.lower))
        object.__setattr__(self, "upper", as_vector(self.upper))
        w = self.width
        if any(len(r) != w for r in self.top) or any(len(r) != w for r in self.local):
            raise StructuralError("brick row width mismatch")
        if len(self.local_rhs) != len(self.local):
            raise StructuralError("local rhs length mismatch")
        if len(self.lower) != w or len(self.upper) != w or len(self.terms) != w:
            raise StructuralError("brick bound/term arity mismatch")
        if any(l > u for l, u in zip(self.lower, self.upper)):
            raise StructuralError("brick lower bound exceeds upper bound")

    @property
    def width(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class NFoldInstance:
    bricks: tuple
    top_rhs: tuple

    def __post_init__(self):
        object.__setattr__(self, "bricks", tuple(self.bricks))
        object.__setattr__(self, "top_rhs", as_vector(self.top_rhs))
        if not self.bricks:
            raise StructuralError("an n-fold instance needs at least one brick")
        s_top = len(self.top_rhs)
        if any(len(b.top) != s_top for b in self.bricks):
            raise StructuralError("all bricks must have the same top row count")


def enumerate_brick_solutions(brick: NFoldBrick, node_cap=None) -> list:
    """All locally feasible vectors of one brick, in lexicographic order.

    Returns (y, top_contribution, cost) triples.
    """
    out = []

    def visit(point):
        out.append((point, mat_vec(brick.top, point),
                    sum(t.value(v) for t, v in zip(brick.terms, point))))

    _scan_kernel(brick.local, list(zip(brick.lower, brick.upper)),
                 _node_cap(node_cap), visit, rhs=brick.local_rhs)
    return out


def dp_minimize(candidate_lists, top_rhs, state_cap=None):
    """Minimum-cost pick of one candidate per brick with top sums hitting
    top_rhs; ties go to the lexicographically smallest concatenation.

    candidate_lists holds per-brick (y, top_contribution, cost) triples.
    Returns (cost, choices) or None when infeasible.
    """
    state_cap = state_cap if state_cap is not None else DEFAULT_STATE_CAP
    top_rhs = as_vector(top_rhs)
    num_rows = len(top_rhs)
    if any(not lst for lst in candidate_lists):
        return None

    # interval hull of what bricks i.. can still add, per top row
    k = len(candidate_lists)
    suff_lo = [[0] * num_rows for _ in range(k + 1)]
    suff_hi = [[0] * num_rows for _ in range(k + 1)]
    for i in range(k - 1, -1, -1):
        for r in range(num_rows):
            contribs = [cand[1][r] for cand in candidate_lists[i]]
            suff_lo[i][r] = suff_lo[i + 1][r] + min(contribs)
            suff_hi[i][r] = suff_hi[i + 1][r] + max(contribs)

    states = {(0,) * num_rows: (0, ())}
    for i, cands in enumerate(candidate_lists):
        nxt_lo, nxt_hi = suff_lo[i + 1], suff_hi[i + 1]
        new_states = {}
        for acc, (cost, prefix) in states.items():
            for y, contrib, ccost in cands:
                key = tuple(a + c for a, c in zip(acc, contrib))
                ok = True
                for r in range(num_rows):
                    rest = top_rhs[r] - key[r]
                    if not nxt_lo[r] <= rest <= nxt_hi[r]:
                        ok = False
                        break
                if not ok:
                    continue
                value = (cost + ccost, prefix + (y,))
                old = new_states.get(key)
                if old is None:
                    if len(new_states) >= state_cap:
                        raise ResourceCapError(
                            f"n-fold DP exceeded the state cap of {state_cap} "
                            f"after brick {i}", cap=state_cap, reached=len(new_states))
                    new_states[key] = value
                elif value < old:
                    new_states[key] = value
        states = new_states
        if not states:
            return None
    best = states.get(top_rhs)
    if best is None:
        return None
    return best


def solve_nfold_exact(instance: NFoldInstance, node_cap=None, state_cap=None):
    """True optimum of the instance, or None when infeasible.

    Cost is additive across bricks, which is exactly separability of the
    objective; any returned solution satisfies every top and local row.
    """
    candidate_lists = [enumerate_brick_solutions(b, node_cap=node_cap)
                       for b in instance.bricks]
    hit = dp_minimize(candidate_lists, instance.top_rhs, state_cap=state_cap)
    if hit is None:
        return None
    cost, choices = hit
    return cost, tuple(choices)


def brute_force_nfold(instance: NFoldInstance, node_cap=None):
    """Reference optimum by full cartesian enumeration (test oracle)."""
    candidate_lists = [enumerate_brick_solutions(b, node_cap=node_cap)
                       for b in instance.bricks]
    if any(not lst for lst in candidate_lists):
        return None
    best = None
    top_rhs = instance.top_rhs

    def walk(i, acc, cost, chosen):
        nonlocal best
        if i == len(candidate_lists):
            if acc == top_rhs:
                key = (cost, tuple(chosen))
                if best is None or key < best:
                    best = key
            return
        for y, contrib, ccost in candidate_lists[i]:
            chosen.append(y)
            walk(i + 1, tuple(a + c for a, c in zip(acc, contrib)), cost + ccost,
                 chosen)
            chosen.pop()

    walk(0, (0,) * len(top_rhs), 0, [])
    return best


# ---------------------------------------------------------------------------
# the per-step subproblem of the outer augmentation loop

def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _floor_div(a: int, b: int) -> int:
    return a // b


def _require_normal_form_b(instance: BlockInstance):
    if any(any(v != 0 for v in row) for row in instance.B[1:]):
        raise UnsupportedStructureError(
            "coupling rows below the first must be zero here; normalize the "
            "rank-1 B block first (see solver4b.normalize_coupling)")


def shifted_term(term, base: int, rho: int):
    """The objective term y -> f(base + rho*y) - f(base), exactly."""
    if isinstance(term, LinearTerm):
        return LinearTerm(term.slope * rho)
    if isinstance(term, QuadraticTerm):
        # a(b+ry)^2 + c(b+ry) - (ab^2 + cb) = ar^2 y^2 + (2abr + cr) y
        return QuadraticTerm(term.quad * rho * rho,
                             2 * term.quad * base * rho + term.lin * rho)
    if isinstance(term, TableTerm):
        lo_idx = _ceil_div(term.lower - base, rho)
        hi_idx = _floor_div(term.lower + len(term.values) - 1 - base, rho)
        if lo_idx > hi_idx:
            raise DomainError("table term has no representable step range")
        base_val = term.value(base)
        vals = tuple(term.value(base + rho * y) - base_val
                     for y in range(lo_idx, hi_idx + 1))
        return TableTerm(lo_idx, vals)
    raise DomainError(f"unsupported term type {type(term).__name__}")


def build_ip_rho_phi(instance: BlockInstance, x0: BlockVector, rho: int,
                     phi: int, convex: bool = None) -> NFoldInstance:
    """The fixed-step subproblem: minimize the step cost over directions y
    with H y = 0, bounds l <= x0 + rho*y <= u, and first coupling row of
    B y^0 pinned to phi.

    Brick 0 gets top block C and local rows B = (phi, 0, ...); brick i gets
    top block D_i and local rows A_i = (-phi, 0, ...).  In linear mode the
    cost of y is w . y; in convex mode it is f(x0 + rho*y) - f(x0) expanded
    per coordinate.
    """
    if rho <= 0:
        raise DomainError("step length rho must be positive")
    instance.check_vector(x0)
    _require_normal_form_b(instance)
    d = instance.dims
    obj = instance.objective
    if convex is None:
        convex = isinstance(obj, SeparableConvexObjective)

    flat0 = x0.flatten()
    lo = [_ceil_div(l - v, rho) for l, v in zip(instance.lower, flat0)]
    hi = [_floor_div(u - v, rho) for u, v in zip(instance.upper, flat0)]

    def terms_for(offset, width):
        if convex:
            return tuple(shifted_term(obj.terms[offset + j], flat0[offset + j], rho)
                         for j in range(width))
        return tuple(LinearTerm(obj.coefficients[offset + j]) for j in range(width))

    bricks = [NFoldBrick(
        top=instance.C, local=instance.B,
        local_rhs=(phi,) + (0,) * (d.sB - 1),
        lower=lo[:d.tB], upper=hi[:d.tB], terms=terms_for(0, d.tB))]
    for i in range(d.n):
        off = d.tB + i * d.tA
        bricks.append(NFoldBrick(
            top=instance.D[i], local=instance.A[i],
            local_rhs=(-phi,) + (0,) * (d.sA - 1),
            lower=lo[off:off + d.tA], upper=hi[off:off + d.tA],
            terms=terms_for(off, d.tA)))
    return NFoldInstance(bricks=tuple(bricks), top_rhs=(0,) * d.sC)
