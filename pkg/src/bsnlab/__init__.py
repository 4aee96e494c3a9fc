"""Spectral laboratory for biharmonic Steklov problems on differential forms."""

from .discretization import DEFAULT_PENALTY, assemble_operators, build_space
from .harmonic import harmonic_basis, harmonic_field_quotient
from .mesh import DomainName, build_named_domain, parse_domain, refine
from .pencils import KINDS, assemble_pencil, solve_kind, solve_problem

__all__ = ["DEFAULT_PENALTY", "DomainName", "KINDS", "assemble_operators", "assemble_pencil",
           "build_named_domain", "build_space", "harmonic_basis", "harmonic_field_quotient",
           "parse_domain", "refine", "solve_kind", "solve_problem"]
__version__ = "0.1.0"
