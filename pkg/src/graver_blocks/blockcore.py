"""Data model for (almost) combinatorial 4-block n-fold integer programs.

An instance couples small integer submatrices C, B, {A_i}, {D_i} into one
constraint matrix of shape (sC + n*sA) x (tB + n*tA):

    ( C  D_1  D_2 ... D_n )
    ( B  A_1              )
    ( B       A_2         )
    ( ...          ...    )
    ( B            A_n    )

Solutions are kept as bricks: x = (x^0, x^1, ..., x^n) with x^0 of width tB
and each x^i of width tA.  All arithmetic is exact (Python integers); there
is no floating point anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, InputError, StructuralError, UnsupportedStructureError


# ---------------------------------------------------------------------------
# small exact-integer linear algebra helpers (tuples in, tuples out)

def as_vector(values) -> tuple:
    out = tuple(int(v) for v in values)
    for v, raw in zip(out, values):
        if v != raw:
            raise DomainError(f"non-integer vector entry {raw!r}")
    return out


def as_matrix(rows) -> tuple:
    mat = tuple(as_vector(r) for r in rows)
    if mat and any(len(r) != len(mat[0]) for r in mat):
        raise StructuralError("ragged matrix rows")
    return mat


def dot(row, x) -> int:
    return sum(a * b for a, b in zip(row, x))


def mat_vec(mat, x) -> tuple:
    if mat and len(mat[0]) != len(x):
        raise StructuralError(
            f"matrix width {len(mat[0])} does not match vector length {len(x)}")
    return tuple(dot(row, x) for row in mat)


def vec_add(x, y) -> tuple:
    return tuple(a + b for a, b in zip(x, y))


def vec_sub(x, y) -> tuple:
    return tuple(a - b for a, b in zip(x, y))


def vec_scale(c, x) -> tuple:
    return tuple(c * a for a in x)


def matrix_rank(mat) -> int:
    """Exact rank of an integer matrix via rational Gaussian elimination."""
    work = [[Fraction(v) for v in row] for row in mat]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        pivot = next((r for r in range(rank, len(work)) if work[r][col] != 0), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = 1 / work[rank][col]
        work[rank] = [v * inv for v in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][col] != 0:
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[rank])]
        rank += 1
    return rank


def conformal_leq(x, y) -> bool:
    """True iff x is sign-compatible with y and |x_i| <= |y_i| everywhere."""
    if len(x) != len(y):
        raise DomainError(f"conformal_leq: lengths differ ({len(x)} vs {len(y)})")
    return all(a * b >= 0 and abs(a) <= abs(b) for a, b in zip(x, y))


# ---------------------------------------------------------------------------
# objectives

@dataclass(frozen=True)
class LinearTerm:
    slope: int

    def value(self, x: int) -> int:
        return self.slope * x


@dataclass(frozen=True)
class QuadraticTerm:
    """a*x^2 + b*x with a >= 0 (convexity)."""
    quad: int
    lin: int

    def __post_init__(self):
        if self.quad < 0:
            raise DomainError("quadratic term needs a nonnegative square coefficient")

    def value(self, x: int) -> int:
        return self.quad * x * x + self.lin * x


@dataclass(frozen=True)
class TableTerm:
    """Tabulated convex function on the integer range [lower, lower+len-1]."""
    lower: int
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise DomainError("empty table term")
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if any(d2 < d1 for d1, d2 in zip(diffs, diffs[1:])):
            raise DomainError("table term is not discretely convex")

    def value(self, x: int) -> int:
        idx = x - self.lower
        if not 0 <= idx < len(self.values):
            raise DomainError(f"table term evaluated outside its domain at {x}")
        return self.values[idx]


@dataclass(frozen=True)
class LinearObjective:
    coefficients: tuple
    constant: int = 0

    def evaluate(self, x) -> int:
        if len(x) != len(self.coefficients):
            raise StructuralError("objective length mismatch")
        return dot(self.coefficients, x) + self.constant


@dataclass(frozen=True)
class SeparableConvexObjective:
    """One convex term per coordinate, evaluated exactly over the integers."""
    terms: tuple
    constant: int = 0

    def evaluate(self, x) -> int:
        if len(x) != len(self.terms):
            raise StructuralError("objective length mismatch")
        return sum(t.value(v) for t, v in zip(self.terms, x)) + self.constant


# ---------------------------------------------------------------------------
# dimensions, bricks, instances

@dataclass(frozen=True)
class BlockDims:
    sA: int
    sB: int
    sC: int
    sD: int
    tA: int
    tB: int
    tC: int
    tD: int
    n: int
    delta: int

    def __post_init__(self):
        for name in ("sA", "sB", "sC", "sD", "tA", "tB", "tC", "tD", "n"):
            if getattr(self, name) < 1:
                raise StructuralError(f"dimension {name} must be positive")
        if self.delta < 0:
            raise StructuralError("delta must be nonnegative")
        # structural coupling forced by the block layout
        if self.sC != self.sD or self.sA != self.sB:
            raise StructuralError("require sC == sD and sA == sB")
        if self.tB != self.tC or self.tA != self.tD:
            raise StructuralError("require tB == tC and tA == tD")

    @property
    def num_rows(self) -> int:
        return self.sC + self.n * self.sA

    @property
    def num_cols(self) -> int:
        return self.tB + self.n * self.tA


@dataclass(frozen=True)
class BlockVector:
    """A solution split into bricks; flattening order is brick0 first."""
    brick0: tuple
    bricks: tuple

    def __post_init__(self):
        object.__setattr__(self, "brick0", as_vector(self.brick0))
        object.__setattr__(self, "bricks", tuple(as_vector(b) for b in self.bricks))

    @property
    def n(self) -> int:
        return len(self.bricks)

    def flatten(self) -> tuple:
        flat = list(self.brick0)
        for b in self.bricks:
            flat.extend(b)
        return tuple(flat)

    @classmethod
    def from_flat(cls, flat, tB: int, tA: int, n: int) -> "BlockVector":
        flat = as_vector(flat)
        if len(flat) != tB + n * tA:
            raise StructuralError(
                f"flat vector length {len(flat)} does not match tB + n*tA = {tB + n * tA}")
        bricks = tuple(flat[tB + i * tA: tB + (i + 1) * tA] for i in range(n))
        return cls(flat[:tB], bricks)

    @classmethod
    def zero(cls, tB: int, tA: int, n: int) -> "BlockVector":
        return cls((0,) * tB, tuple((0,) * tA for _ in range(n)))


def _max_abs(mat) -> int:
    return max((abs(v) for row in mat for v in row), default=0)


@dataclass(frozen=True)
class BlockInstance:
    dims: BlockDims
    C: tuple
    B: tuple
    A: tuple            # n matrices, each sA x tA
    D: tuple            # n matrices, each sD x tD
    rhs: tuple
    lower: tuple
    upper: tuple
    objective: object
    sense: str = "eq"   # "eq" for H x = rhs, "leq" for H x <= rhs

    def __post_init__(self):
        d = self.dims
        object.__setattr__(self, "C", as_matrix(self.C))
        object.__setattr__(self, "B", as_matrix(self.B))
        object.__setattr__(self, "A", tuple(as_matrix(m) for m in self.A))
        object.__setattr__(self, "D", tuple(as_matrix(m) for m in self.D))
        object.__setattr__(self, "rhs", as_vector(self.rhs))
        object.__setattr__(self, "lower", as_vector(self.lower))
        object.__setattr__(self, "upper", as_vector(self.upper))
        _check_shape(self.C, d.sC, d.tC, "C")
        _check_shape(self.B, d.sB, d.tB, "B")
        if len(self.A) != d.n or len(self.D) != d.n:
            raise StructuralError("need exactly n matrices A_i and n matrices D_i")
        for i, (Ai, Di) in enumerate(zip(self.A, self.D)):
            _check_shape(Ai, d.sA, d.tA, f"A[{i}]")
            _check_shape(Di, d.sD, d.tD, f"D[{i}]")
        if len(self.rhs) != d.num_rows:
            raise StructuralError(f"rhs length {len(self.rhs)} != {d.num_rows}")
        if len(self.lower) != d.num_cols or len(self.upper) != d.num_cols:
            raise StructuralError("bound vectors must have length tB + n*tA")
        if any(l > u for l, u in zip(self.lower, self.upper)):
            raise StructuralError("lower bound exceeds upper bound")
        if self.sense not in ("eq", "leq"):
            raise StructuralError(f"unknown constraint sense {self.sense!r}")
        delta = max(_max_abs(self.C), _max_abs(self.B),
                    max((_max_abs(m) for m in self.A), default=0),
                    max((_max_abs(m) for m in self.D), default=0))
        if delta != d.delta:
            raise StructuralError(
                f"declared delta {d.delta} != true max absolute entry {delta}")

    @classmethod
    def from_blocks(cls, C, B, A, D, rhs, lower, upper, objective,
                    sense: str = "eq") -> "BlockInstance":
        """Build an instance, deriving BlockDims from the submatrix shapes."""
        C = as_matrix(C)
        B = as_matrix(B)
        A = tuple(as_matrix(m) for m in A)
        D = tuple(as_matrix(m) for m in D)
        if not A or len(A) != len(D):
            raise StructuralError("need n >= 1 and equally many A_i and D_i")
        delta = max(_max_abs(C), _max_abs(B),
                    max(_max_abs(m) for m in A), max(_max_abs(m) for m in D))
        dims = BlockDims(sA=len(A[0]), sB=len(B), sC=len(C), sD=len(D[0]),
                         tA=len(A[0][0]), tB=len(B[0]), tC=len(C[0]),
                         tD=len(D[0][0]), n=len(A), delta=delta)
        return cls(dims, C, B, A, D, rhs, lower, upper, objective, sense)

    # -- structure predicates ------------------------------------------------

    @property
    def combinatorial(self) -> bool:
        return self.dims.sA == 1 and self.dims.sB == 1

    @property
    def almost_combinatorial(self) -> bool:
        return matrix_rank(self.B) == 1

    # -- convenience ---------------------------------------------------------

    def check_vector(self, x: BlockVector):
        d = self.dims
        if len(x.brick0) != d.tB or x.n != d.n or any(len(b) != d.tA for b in x.bricks):
            raise StructuralError("brick widths do not match instance dimensions")

    def objective_value(self, x: BlockVector) -> int:
        return self.objective.evaluate(x.flatten())

    def within_bounds(self, x: BlockVector) -> bool:
        flat = x.flatten()
        return all(l <= v <= u for l, v, u in zip(self.lower, flat, self.upper))


def _check_shape(mat, rows, cols, name):
    if len(mat) != rows or any(len(r) != cols for r in mat):
        raise StructuralError(f"{name} must be {rows}x{cols}")


# ---------------------------------------------------------------------------
# operations

def assemble_full(instance: BlockInstance) -> tuple:
    """Materialize the full constraint matrix in the standard block layout."""
    d = instance.dims
    rows = []
    for r in range(d.sC):
        row = list(instance.C[r])
        for i in range(d.n):
            row.extend(instance.D[i][r])
        rows.append(tuple(row))
    for i in range(d.n):
        for r in range(d.sA):
            row = list(instance.B[r])
            row.extend([0] * (d.tA * i))
            row.extend(instance.A[i][r])
            row.extend([0] * (d.tA * (d.n - 1 - i)))
            rows.append(tuple(row))
    return tuple(rows)


def apply_matrix(instance: BlockInstance, x: BlockVector) -> tuple:
    """H x, computed brick by brick (the full matrix is never built)."""
    instance.check_vector(x)
    top = mat_vec(instance.C, x.brick0)
    for Di, xi in zip(instance.D, x.bricks):
        top = vec_add(top, mat_vec(Di, xi))
    out = list(top)
    Bx0 = mat_vec(instance.B, x.brick0)
    for Ai, xi in zip(instance.A, x.bricks):
        out.extend(vec_add(Bx0, mat_vec(Ai, xi)))
    return tuple(out)


def residual(instance: BlockInstance, x: BlockVector) -> tuple:
    """H x - rhs."""
    return vec_sub(apply_matrix(instance, x), instance.rhs)


def in_kernel(instance: BlockInstance, x: BlockVector) -> bool:
    """True iff H x = 0 (the instance rhs is ignored)."""
    return all(v == 0 for v in apply_matrix(instance, x))


def max_abs_entry(instance: BlockInstance) -> int:
    return instance.dims.delta


def assemble_two_stage(instance: BlockInstance) -> tuple:
    """The submatrix of brick rows only: ( B A_1 / B . A_2 / ... )."""
    return assemble_full(instance)[instance.dims.sC:]


def row_value_range(row, lower, upper):
    """Interval hull of row . x over the box [lower, upper], exact."""
    lo = hi = 0
    for c, l, u in zip(row, lower, upper):
        if c >= 0:
            lo += c * l
            hi += c * u
        else:
            lo += c * u
            hi += c * l
    return lo, hi


def to_equality(instance: BlockInstance) -> BlockInstance:
    """Turn a combinatorial <=-instance into an equality instance by slacks.

    Each brick gains 1 + sD slack columns: one for its own brick row, then
    one per top row (those land in the identity tail of the widened D_i).
    Adds n*(sD+1) slack variables in total.  Slack bounds are derived by
    interval arithmetic over each row, so every feasible point of the
    original system extends to exactly one feasible point here.
    """
    if instance.sense != "leq":
        raise DomainError("to_equality expects an instance with sense 'leq'")
    if not instance.combinatorial:
        raise UnsupportedStructureError(
            "slack conversion is only defined for combinatorial instances (sA = sB = 1)")
    d = instance.dims
    full = assemble_full(instance)

    def slack_upper(row_idx):
        lo, _ = row_value_range(full[row_idx], instance.lower, instance.upper)
        return max(0, instance.rhs[row_idx] - lo)

    new_tA = d.tA + 1 + d.sD
    new_D = []
    new_A = []
    for i in range(d.n):
        rows = []
        for r in range(d.sD):
            ident = [0] * d.sD
            ident[r] = 1
            rows.append(tuple(list(instance.D[i][r]) + [0] + ident))
        new_D.append(tuple(rows))
        new_A.append((tuple(list(instance.A[i][0]) + [1] + [0] * d.sD),))

    lower = list(instance.lower[:d.tB])
    upper = list(instance.upper[:d.tB])
    for i in range(d.n):
        base = d.tB + i * d.tA
        lower.extend(instance.lower[base:base + d.tA])
        upper.extend(instance.upper[base:base + d.tA])
        lower.append(0)
        upper.append(slack_upper(d.sC + i))
        for r in range(d.sD):
            lower.append(0)
            upper.append(slack_upper(r))

    objective = _extend_objective(instance.objective, d, new_tA)
    return BlockInstance.from_blocks(
        instance.C, instance.B, new_A, new_D, instance.rhs, lower, upper,
        objective, sense="eq")


def _extend_objective(objective, dims, new_tA):
    """Give every added slack coordinate a zero objective term."""
    pad = new_tA - dims.tA
    if isinstance(objective, LinearObjective):
        coeffs = list(objective.coefficients[:dims.tB])
        for i in range(dims.n):
            base = dims.tB + i * dims.tA
            coeffs.extend(objective.coefficients[base:base + dims.tA])
            coeffs.extend([0] * pad)
        return LinearObjective(tuple(coeffs), objective.constant)
    if isinstance(objective, SeparableConvexObjective):
        terms = list(objective.terms[:dims.tB])
        for i in range(dims.n):
            base = dims.tB + i * dims.tA
            terms.extend(objective.terms[base:base + dims.tA])
            terms.extend([LinearTerm(0)] * pad)
        return SeparableConvexObjective(tuple(terms), objective.constant)
    raise DomainError(f"unsupported objective type {type(objective).__name__}")


def project_from_equality(instance: BlockInstance, equality_solution: BlockVector,
                          original_tA: int) -> BlockVector:
    """Drop the slack coordinates appended by to_equality."""
    bricks = tuple(b[:original_tA] for b in equality_solution.bricks)
    return BlockVector(equality_solution.brick0, bricks)


# ---------------------------------------------------------------------------
# JSON instance schema

def objective_to_json(objective) -> dict:
    if isinstance(objective, LinearObjective):
        return {"kind": "linear",
                "coefficients": list(objective.coefficients),
                "constant": objective.constant}
    if isinstance(objective, SeparableConvexObjective):
        any_table = any(isinstance(t, TableTerm) for t in objective.terms)
        if any_table:
            tables = []
            for t in objective.terms:
                if isinstance(t, TableTerm):
                    tables.append({"lower": t.lower, "values": list(t.values)})
                elif isinstance(t, LinearTerm):
                    tables.append({"slope": t.slope})
                else:
                    tables.append({"a": t.quad, "b": t.lin})
            return {"kind": "table", "terms": tables, "constant": objective.constant}
        terms = []
        for t in objective.terms:
            if isinstance(t, LinearTerm):
                terms.append({"a": 0, "b": t.slope})
            else:
                terms.append({"a": t.quad, "b": t.lin})
        return {"kind": "quadratic", "terms": terms, "constant": objective.constant}
    raise DomainError(f"unsupported objective type {type(objective).__name__}")


def objective_from_json(data, num_cols: int):
    try:
        kind = data["kind"]
        constant = int(data.get("constant", 0))
        if kind == "linear":
            coeffs = as_vector(data["coefficients"])
            if len(coeffs) != num_cols:
                raise InputError("objective coefficient count mismatch")
            return LinearObjective(coeffs, constant)
        if kind == "quadratic":
            terms = tuple(QuadraticTerm(int(t["a"]), int(t["b"])) if int(t["a"]) != 0
                          else LinearTerm(int(t["b"])) for t in data["terms"])
        elif kind == "table":
            terms = []
            for t in data["terms"]:
                if "values" in t:
                    terms.append(TableTerm(int(t["lower"]), tuple(int(v) for v in t["values"])))
                elif "slope" in t:
                    terms.append(LinearTerm(int(t["slope"])))
                else:
                    terms.append(QuadraticTerm(int(t["a"]), int(t["b"])))
            terms = tuple(terms)
        else:
            raise InputError(f"unknown objective kind {kind!r}")
        if len(terms) != num_cols:
            raise InputError("objective term count mismatch")
        return SeparableConvexObjective(terms, constant)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed objective: {exc}") from exc


def instance_to_json(instance: BlockInstance) -> dict:
    d = instance.dims
    return {
        "dims": {"sA": d.sA, "sB": d.sB, "sC": d.sC, "sD": d.sD,
                 "tA": d.tA, "tB": d.tB, "tC": d.tC, "tD": d.tD,
                 "n": d.n, "delta": d.delta},
        "C": [list(r) for r in instance.C],
        "B": [list(r) for r in instance.B],
        "A": [[list(r) for r in m] for m in instance.A],
        "D": [[list(r) for r in m] for m in instance.D],
        "rhs": list(instance.rhs),
        "lower": list(instance.lower),
        "upper": list(instance.upper),
        "objective": objective_to_json(instance.objective),
        "constraint_sense": instance.sense,
    }


def instance_from_json(data) -> BlockInstance:
    try:
        sense = data.get("constraint_sense", "eq")
        C, B = data["C"], data["B"]
        A, D = data["A"], data["D"]
        n = len(A)
        tB = len(B[0])
        tA = len(A[0][0])
        objective = objective_from_json(data["objective"], tB + n * tA)
        instance = BlockInstance.from_blocks(
            C, B, A, D, data["rhs"], data["lower"], data["upper"],
            objective, sense=sense)
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise InputError(f"malformed instance: {exc}") from exc
    except StructuralError as exc:
        raise InputError(f"inconsistent instance: {exc}") from exc
    if "dims" in data:
        declared = data["dims"]
        actual = instance.dims
        for key in ("sA", "sB", "sC", "sD", "tA", "tB", "tC", "tD", "n", "delta"):
            if key in declared and int(declared[key]) != getattr(actual, key):
                raise InputError(
                    f"declared dims.{key} = {declared[key]} but actual is "
                    f"{getattr(actual, key)}")
    return instance
