"""Nonholonomic mechanics: constrained dynamics, Hamilton-Jacobi checks and symmetry reduction."""

from . import constraints, diffcalc, dynamics, errors, hamjac, mechanics, reduction, report, systems
from .report import CheckReport

__all__ = [
    "CheckReport",
    "constraints",
    "diffcalc",
    "dynamics",
    "errors",
    "hamjac",
    "mechanics",
    "reduction",
    "report",
    "systems",
]
