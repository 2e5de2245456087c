"""Self-contained bounded-variable primal simplex with warm starts and presolve."""

from .kernel import IS_COMPILED, get_kernel
from .model import AT_HI, AT_LO, BASIC, EQ, FREE, GE, LE, Basis, LinearProgram, LpSolution, dump_lp
from .presolve import PresolveTransform, presolve
from .simplex import SolveLimits, solve

__all__ = [
    "LinearProgram",
    "Basis",
    "LpSolution",
    "SolveLimits",
    "solve",
    "presolve",
    "PresolveTransform",
    "dump_lp",
    "IS_COMPILED",
    "get_kernel",
    "LE",
    "EQ",
    "GE",
    "AT_LO",
    "AT_HI",
    "BASIC",
    "FREE",
]
