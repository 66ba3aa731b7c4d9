"""Outer solver: steepest augmentation over fixed-step subproblems.

The loop starts from a feasible point (found by a two-phase construction
when none is supplied), then repeatedly solves the subproblem grid over
step lengths rho = 1, 2, 4, ... and coupling values phi, taking the step
that improves the objective most.  Every kernel direction that fits the
bounds at some step length has its coupling value inside the scanned phi
set, so the grid covers every conformally minimal direction; with an exact
inner solver the loop therefore terminates only at a global optimum.

`solve_exact_oracle` is the independent check: it enumerates the whole
brick-0 box and solves the decoupled remainder per point.  It shares no
search logic with the augmentation path beyond the brick DP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .blockcore import (
    BlockInstance,
    BlockVector,
    LinearObjective,
    LinearTerm,
    SeparableConvexObjective,
    apply_matrix,
    mat_vec,
    vec_sub,
)
from .errors import (
    DomainError,
    GraverBlocksError,
    ResourceCapError,
    UnsupportedStructureError,
)
from .nfold import (
    NFoldBrick,
    build_ip_rho_phi,
    dp_minimize,
    enumerate_brick_solutions,
    solve_nfold_exact,
)

DEFAULT_ORACLE_BOX_CAP = 2_000_000


@dataclass(frozen=True)
class AugmentationConfig:
    """Knobs of the outer loop.  phi_policy is either "derived-sound" (scan
    the coupling values reachable by brick 0 inside the sound interval
    |phi| <= tB * Delta * max brick-0 step bound, which provably contains
    the coupling value of every feasible direction) or an explicit list of
    phi values to scan instead."""
    phi_policy: object = "derived-sound"
    max_outer_iterations: int = 10_000
    node_cap: int = None
    state_cap: int = None

    def __post_init__(self):
        if self.max_outer_iterations < 1:
            raise DomainError("max_outer_iterations must be at least 1")


@dataclass
class SolveReport:
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    steps: list = field(default_factory=list)        # chosen (rho, phi) per round
    subproblems_solved: int = 0
    phase1_iterations: int = 0
    wall_time_s: float = 0.0

    def to_json(self, include_timing=True) -> dict:
        out = {
            "iterations": self.iterations,
            "objective_trace": list(self.objective_trace),
            "steps": [list(s) for s in self.steps],
            "subproblems_solved": self.subproblems_solved,
            "phase1_iterations": self.phase1_iterations,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out


class AugmentationLimitError(GraverBlocksError):
    """The outer loop hit its iteration cap; carries the partial report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# rank-1 coupling normalization

def normalize_coupling(instance: BlockInstance) -> BlockInstance:
    """Equivalent instance whose B has one leading nonzero row, rest zero.

    Row operations stay inside each brick's row block and are applied
    uniformly (the same B serves every brick), so the 4-block shape, the
    variables, the bounds and the objective are untouched; solution sets
    are identical.  Requires rank(B) <= 1.
    """
    B = instance.B
    nonzero_rows = [r for r, row in enumerate(B) if any(row)]
    if not nonzero_rows or nonzero_rows == [0]:
        return instance
    if not instance.almost_combinatorial:
        raise UnsupportedStructureError(
            "the coupling block B must have rank at most 1")

    pivot = nonzero_rows[0]
    d = instance.dims
    b_rows = [list(r) for r in B]
    b_rows[0], b_rows[pivot] = b_rows[pivot], b_rows[0]
    # each remaining nonzero row is a rational multiple of the pivot row
    multipliers = []
    for j in range(1, d.sB):
        if not any(b_rows[j]):
            multipliers.append(None)
            continue
        ratio = next(Fraction(a, p) for a, p in zip(b_rows[j], b_rows[0]) if p != 0)
        multipliers.append((ratio.numerator, ratio.denominator))
        b_rows[j] = [ratio.denominator * a - ratio.numerator * p
                     for a, p in zip(b_rows[j], b_rows[0])]

    def transform(rows, rhs_rows):
        rows = [list(r) for r in rows]
        rhs_rows = list(rhs_rows)
        rows[0], rows[pivot] = rows[pivot], rows[0]
        rhs_rows[0], rhs_rows[pivot] = rhs_rows[pivot], rhs_rows[0]
        for j, mult in enumerate(multipliers, start=1):
            if mult is None:
                continue
            num, den = mult
            rows[j] = [den * a - num * p for a, p in zip(rows[j], rows[0])]
            rhs_rows[j] = den * rhs_rows[j] - num * rhs_rows[0]
        return tuple(tuple(r) for r in rows), rhs_rows

    new_A = []
    new_rhs = list(instance.rhs[:d.sC])
    for i in range(d.n):
        base = d.sC + i * d.sA
        rows, rhs_rows = transform(instance.A[i], instance.rhs[base:base + d.sA])
        new_A.append(rows)
        new_rhs.extend(rhs_rows)
    return BlockInstance.from_blocks(
        instance.C, tuple(tuple(r) for r in b_rows), new_A, instance.D, new_rhs,
        instance.lower, instance.upper, instance.objective, sense=instance.sense)


# ---------------------------------------------------------------------------
# feasibility (two-phase)

def _clamp_to_bounds(instance: BlockInstance) -> BlockVector:
    d = instance.dims
    flat = tuple(min(max(0, l), u) for l, u in zip(instance.lower, instance.upper))
    return BlockVector.from_flat(flat, d.tB, d.tA, d.n)


def _phase1_instance(instance: BlockInstance, start: BlockVector):
    """Append one artificial column per row (top rows extend brick 0, brick
    rows extend every brick) whose sign absorbs the start residual; the
    artificial block keeps the 4-block shape and the rank-1 coupling."""
    d = instance.dims
    res = vec_sub(instance.rhs, apply_matrix(instance, start))
    top_res = res[:d.sC]
    brick_res = [res[d.sC + i * d.sA: d.sC + (i + 1) * d.sA] for i in range(d.n)]

    def sign(v):
        return 1 if v >= 0 else -1

    C = tuple(tuple(list(row) + [sign(top_res[r]) if j == r else 0
                                 for j in range(d.sC)])
              for r, row in enumerate(instance.C))
    B = tuple(tuple(list(row) + [0] * d.sC) for row in instance.B)
    A, D = [], []
    for i in range(d.n):
        A.append(tuple(tuple(list(row) + [sign(brick_res[i][r]) if j == r else 0
                                          for j in range(d.sA)])
                       for r, row in enumerate(instance.A[i])))
        D.append(tuple(tuple(list(row) + [0] * d.sA) for row in instance.D[i]))

    lower = list(instance.lower[:d.tB]) + [0] * d.sC
    upper = list(instance.upper[:d.tB]) + [abs(v) for v in top_res]
    coeffs = [0] * d.tB + [1] * d.sC
    start0 = tuple(list(start.brick0) + [abs(v) for v in top_res])
    start_bricks = []
    for i in range(d.n):
        base = d.tB + i * d.tA
        lower.extend(list(instance.lower[base:base + d.tA]) + [0] * d.sA)
        upper.extend(list(instance.upper[base:base + d.tA])
                     + [abs(v) for v in brick_res[i]])
        coeffs.extend([0] * d.tA + [1] * d.sA)
        start_bricks.append(tuple(list(start.bricks[i])
                                  + [abs(v) for v in brick_res[i]]))

    aux = BlockInstance.from_blocks(
        C, B, A, D, instance.rhs, lower, upper,
        LinearObjective(tuple(coeffs)), sense="eq")
    return aux, BlockVector(start0, tuple(start_bricks))


def _find_initial(instance: BlockInstance, config: AugmentationConfig):
    """(feasible point or None, phase-1 round count)."""
    start = _clamp_to_bounds(instance)
    res = vec_sub(instance.rhs, apply_matrix(instance, start))
    if all(v == 0 for v in res):
        return start, 0
    aux, aux_start = _phase1_instance(instance, start)
    value, point, report = _augment_to_optimum(aux, aux_start, config)
    if value != 0:
        return None, report.iterations
    d = instance.dims
    x0 = BlockVector(point.brick0[:d.tB], tuple(b[:d.tA] for b in point.bricks))
    if any(vec_sub(instance.rhs, apply_matrix(instance, x0))):
        raise GraverBlocksError("phase-1 produced a non-feasible projection")
    return x0, report.iterations


def find_initial_feasible(instance: BlockInstance,
                          config: AugmentationConfig = None):
    """A feasible point, or None when the instance is infeasible.

    Clamps zero into the box; if that already satisfies the constraints it
    is returned directly, otherwise artificial variables absorb the residual
    and their sum is driven to zero by the main loop (feasible iff the
    phase-1 optimum is 0).
    """
    work = normalize_coupling(instance)
    x0, _ = _find_initial(work, config or AugmentationConfig())
    return x0


# ---------------------------------------------------------------------------
# one augmentation round

def _reachable_couplings(row, lo, hi):
    """All values row . y over the box [lo, hi], by a running-sum set DP."""
    sums = {0}
    for a, l, u in zip(row, lo, hi):
        if a == 0 or l > u:
            continue
        sums = {s + a * v for s in sums for v in range(l, u + 1)}
    return sums


def _phi_values(instance: BlockInstance, lo, hi, config: AugmentationConfig):
    """Coupling values to scan for one step length.

    The sound interval is |phi| <= tB * Delta * m where m bounds the brick-0
    coordinates of the step box: any in-box direction y has |B y^0| below
    that.  Values brick 0 cannot reach at all are skipped (no direction
    exists for them), which keeps the scan complete.
    """
    d = instance.dims
    if config.phi_policy != "derived-sound":
        return list(config.phi_policy)
    if any(l > u for l, u in zip(lo[:d.tB], hi[:d.tB])):
        return []
    m = max(max(abs(l), abs(u)) for l, u in zip(lo[:d.tB], hi[:d.tB]))
    bound = d.tB * d.delta * m
    reachable = _reachable_couplings(instance.B[0], lo[:d.tB], hi[:d.tB])
    return sorted(v for v in reachable if abs(v) <= bound)


def _best_step(instance: BlockInstance, x0: BlockVector,
               config: AugmentationConfig):
    """((rho, y) or None, subproblem count) for the best improving step."""
    instance.check_vector(x0)
    convex = isinstance(instance.objective, SeparableConvexObjective)
    d = instance.dims
    flat0 = x0.flatten()
    spread = max(u - l for l, u in zip(instance.lower, instance.upper))
    best = None
    best_key = None
    subproblems = 0
    rho = 1
    while True:
        lo = [-((v - l) // rho) for l, v in zip(instance.lower, flat0)]
        hi = [(u - v) // rho for u, v in zip(instance.upper, flat0)]
        for phi in _phi_values(instance, lo, hi, config):
            sub = build_ip_rho_phi(instance, x0, rho, phi, convex=convex)
            hit = solve_nfold_exact(sub, node_cap=config.node_cap,
                                    state_cap=config.state_cap)
            subproblems += 1
            if hit is None:
                continue
            value, choices = hit
            improvement = value if convex else rho * value
            if improvement >= 0:
                continue
            flat = tuple(v for brick in choices for v in brick)
            key = (improvement, rho, phi, flat)
            if best_key is None or key < best_key:
                best_key = key
                best = (rho, BlockVector.from_flat(flat, d.tB, d.tA, d.n))
        if rho > spread:
            break
        rho *= 2
    return best, subproblems


def best_augmentation(instance: BlockInstance, x0: BlockVector,
                      config: AugmentationConfig = None):
    """The best strictly improving step (rho, y) at the feasible point x0,
    or None when x0 is already optimal.

    Steps are compared by true objective change (for a linear objective the
    subproblem value is per unit step, so it is scaled by rho); ties fall
    to smaller (rho, phi, y).
    """
    step, _ = _best_step(instance, x0, config or AugmentationConfig())
    return step


def _augment_to_optimum(instance: BlockInstance, x0: BlockVector,
                        config: AugmentationConfig):
    report = SolveReport()
    current = x0
    value = instance.objective_value(current)
    report.objective_trace.append(value)
    d = instance.dims
    while True:
        if report.iterations >= config.max_outer_iterations:
            raise AugmentationLimitError(
                f"no convergence within {config.max_outer_iterations} "
                "augmentation rounds", report)
        step, subproblems = _best_step(instance, current, config)
        report.subproblems_solved += subproblems
        if step is None:
            break
        rho, y = step
        stepped = tuple(v + rho * w for v, w in zip(current.flatten(), y.flatten()))
        current = BlockVector.from_flat(stepped, d.tB, d.tA, d.n)
        new_value = instance.objective_value(current)
        if new_value >= value:
            raise GraverBlocksError("augmentation step failed to improve")
        value = new_value
        report.iterations += 1
        report.objective_trace.append(value)
        report.steps.append((rho, _coupling_value(instance, y)))
    return value, current, report


def _coupling_value(instance: BlockInstance, y: BlockVector) -> int:
    return sum(a * v for a, v in zip(instance.B[0], y.brick0))


def solve(instance: BlockInstance, config: AugmentationConfig = None):
    """Global optimum as (value, solution, report), or None when infeasible.

    Normalizes a rank-1 coupling block first, finds a feasible point, then
    augments until no subproblem improves the objective.
    """
    config = config or AugmentationConfig()
    if instance.sense != "eq":
        raise DomainError("solve expects an equality instance; apply "
                          "to_equality first")
    t0 = time.perf_counter()
    work = normalize_coupling(instance)
    found = _find_initial(work, config)
    x0, phase1_rounds = found
    if x0 is None:
        return None
    value, point, report = _augment_to_optimum(work, x0, config)
    report.phase1_iterations = phase1_rounds
    report.wall_time_s = time.perf_counter() - t0
    return value, point, report


# ---------------------------------------------------------------------------
# the independent exact oracle

def solve_exact_oracle(instance: BlockInstance, box_cap=None, node_cap=None,
                       state_cap=None):
    """Optimum as (value, solution) by exhaustive brick-0 enumeration, or
    None when infeasible.

    Fixing x^0 decouples the bricks: brick rows become A_i x^i = b^i - B x^0
    and the top rows form a generalized n-fold with rhs b^0 - C x^0, solved
    by the brick DP.  Ties across brick-0 points resolve to the smaller
    point, matching the solver's lexicographic rule.
    """
    if instance.sense != "eq":
        raise DomainError("the oracle expects an equality instance")
    box_cap = box_cap if box_cap is not None else DEFAULT_ORACLE_BOX_CAP
    d = instance.dims
    size = 1
    for l, u in zip(instance.lower[:d.tB], instance.upper[:d.tB]):
        size *= (u - l + 1)
        if size > box_cap:
            raise ResourceCapError(
                f"brick-0 box exceeds the oracle cap of {box_cap}",
                cap=box_cap, reached=size)

    obj = instance.objective
    if isinstance(obj, LinearObjective):
        def brick_terms(offset, width):
            return tuple(LinearTerm(obj.coefficients[offset + j])
                         for j in range(width))

        def brick0_cost(x0_flat):
            return sum(c * v for c, v in zip(obj.coefficients[:d.tB], x0_flat))
    else:
        def brick_terms(offset, width):
            return tuple(obj.terms[offset + j] for j in range(width))

        def brick0_cost(x0_flat):
            return sum(t.value(v) for t, v in zip(obj.terms[:d.tB], x0_flat))

    # one unconstrained enumeration per brick, bucketed by the local value
    buckets = []
    for i in range(d.n):
        off = d.tB + i * d.tA
        brick = NFoldBrick(
            top=instance.D[i], local=(), local_rhs=(),
            lower=instance.lower[off:off + d.tA],
            upper=instance.upper[off:off + d.tA],
            terms=brick_terms(off, d.tA))
        bucket = {}
        for y, contrib, cost in enumerate_brick_solutions(brick, node_cap=node_cap):
            key = tuple(mat_vec(instance.A[i], y))
            bucket.setdefault(key, []).append((y, contrib, cost))
        buckets.append(bucket)

    top_rhs = instance.rhs[:d.sC]
    brick_rhs = [instance.rhs[d.sC + i * d.sA: d.sC + (i + 1) * d.sA]
                 for i in range(d.n)]
    best = None
    ranges = [range(l, u + 1)
              for l, u in zip(instance.lower[:d.tB], instance.upper[:d.tB])]
    for x0 in product(*ranges):
        Bx0 = mat_vec(instance.B, x0)
        candidate_lists = []
        for i in range(d.n):
            need = tuple(b - v for b, v in zip(brick_rhs[i], Bx0))
            lst = buckets[i].get(need)
            if not lst:
                candidate_lists = None
                break
            candidate_lists.append(lst)
        if candidate_lists is None:
            continue
        target = vec_sub(top_rhs, mat_vec(instance.C, x0))
        hit = dp_minimize(candidate_lists, target, state_cap=state_cap)
        if hit is None:
            continue
        cost, choices = hit
        total = brick0_cost(x0) + cost + obj.constant
        if best is None or total < best[0]:
            best = (total, BlockVector(x0, tuple(choices)))
    return best
