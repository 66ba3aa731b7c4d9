"""Exact toolkit for (almost) combinatorial 4-block n-fold integer programs."""

from .blockcore import (
    BlockDims,
    BlockInstance,
    BlockVector,
    LinearObjective,
    LinearTerm,
    QuadraticTerm,
    SeparableConvexObjective,
    TableTerm,
    assemble_full,
    conformal_leq,
    in_kernel,
    instance_from_json,
    instance_to_json,
    max_abs_entry,
    residual,
    to_equality,
)
from .graverlab import GraverSet, graver_within, is_graver_element, kernel_points, sign_decompose

__version__ = "0.1.0"

__all__ = [
    "BlockDims",
    "BlockInstance",
    "BlockVector",
    "GraverSet",
    "LinearObjective",
    "LinearTerm",
    "QuadraticTerm",
    "SeparableConvexObjective",
    "TableTerm",
    "assemble_full",
    "conformal_leq",
    "graver_within",
    "in_kernel",
    "instance_from_json",
    "instance_to_json",
    "is_graver_element",
    "kernel_points",
    "max_abs_entry",
    "residual",
    "sign_decompose",
    "to_equality",
]
