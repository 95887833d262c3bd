"""Linear-programming layer: model container, solver backends, dualization."""
from .model import (
    EQ, GE, INF, LE, CompiledLP, LinearProgram, LpSolution, LPValidationError, SolverError, Status,
)
from .backends import available_backends, register_backend, solve
from .duality import DualBlock, dualize_max
from .lpformat import dumps_lp, write_lp

__all__ = [
    "EQ", "GE", "INF", "LE", "CompiledLP", "LinearProgram", "LpSolution", "LPValidationError",
    "SolverError", "Status", "available_backends", "register_backend", "solve", "DualBlock",
    "dualize_max", "dumps_lp", "write_lp",
]
