"""Built-in witness family with linearly growing minimal kernel elements.

The family fixes C = (-1,-1,-1), D_i = (5,3), B = (0,-1,1), A_i = (3,4) and
scales only the brick count n.  Its kernel contains

    g = (1, n-1, n, 1, -1, 1, -1, ..., 1, -1)

which is conformally minimal (no smaller nonzero kernel element fits under
it), so the max-norm of minimal kernel elements grows like n for this
family.  11*g, however, splits into n+1 kernel elements that all fit under
it conformally; `scaled_decomposition` builds that split explicitly.
"""

from __future__ import annotations

from .blockcore import BlockInstance, BlockVector, LinearObjective


def witness_instance(n: int, lower=None, upper=None, objective=None,
                     rhs=None) -> BlockInstance:
    """The fixed 3x2-block family at brick count n (wide symmetric bounds
    by default; callers override bounds/objective/rhs for specific uses)."""
    if n < 1:
        raise ValueError("n must be positive")
    num_cols = 3 + 2 * n
    big = 20 * max(n, 11)
    if lower is None:
        lower = (-big,) * num_cols
    if upper is None:
        upper = (big,) * num_cols
    if objective is None:
        objective = LinearObjective((0,) * num_cols)
    if rhs is None:
        rhs = (0,) * (1 + n)
    return BlockInstance.from_blocks(
        C=((-1, -1, -1),),
        B=((0, -1, 1),),
        A=tuple(((3, 4),) for _ in range(n)),
        D=tuple(((5, 3),) for _ in range(n)),
        rhs=rhs, lower=lower, upper=upper, objective=objective)


def witness_vector(n: int) -> BlockVector:
    """g = (1, n-1, n | 1,-1 | ... | 1,-1)."""
    return BlockVector((1, n - 1, n), tuple((1, -1) for _ in range(n)))


def scaled_decomposition(n: int) -> tuple:
    """The n+1 kernel elements summing to 11 * witness_vector(n).

    Part 1 carries (0,0,11) with n-1 bricks (3,-5) and a final brick (7,-8);
    parts 2..n carry (0,11,11) with a single brick (8,-6); the last part
    carries (11,0,0) with a single final brick (4,-3).
    """
    if n < 2:
        raise ValueError("the split needs n >= 2")
    parts = []
    bricks = tuple((3, -5) for _ in range(n - 1)) + ((7, -8),)
    parts.append(BlockVector((0, 0, 11), bricks))
    for j in range(1, n):
        bricks = tuple((8, -6) if i == j - 1 else (0, 0) for i in range(n))
        parts.append(BlockVector((0, 11, 11), bricks))
    bricks = tuple((4, -3) if i == n - 1 else (0, 0) for i in range(n))
    parts.append(BlockVector((11, 0, 0), bricks))
    return tuple(parts)
