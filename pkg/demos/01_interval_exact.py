"""Interval spectra: the biharmonic Steklov problems on a segment.

On (a, b) every biharmonic eigenfunction is a cubic, so Hermite cubic
elements reproduce the spectra to rounding.  This script compares the
pencil solver with the exact rational oracle and then dilates the interval
to show the scaling laws.
"""

import math

from bsnlab import assemble_operators, build_named_domain, build_space, harmonic_basis, parse_domain
from bsnlab.oracles import interval_closed_form
from bsnlab.pencils import assemble_pencil, solve_problem


def pencil(domain, kind, n=8):
    name = parse_domain(domain)
    ops = assemble_operators(build_space(build_named_domain(name, n), 0, "Hermite3"))
    return solve_problem(assemble_pencil(ops.space, ops, kind, harmonic_basis(ops))).eigenvalues


print("kind      domain         oracle (exact)          pencil")
for domain in ("interval:0,1", "interval:-1,1", "interval:0,2"):
    a, b = parse_domain(domain).params
    for kind in ("Steklov", "BSD", "BSN3"):
        cf = interval_closed_form(kind, a, b)
        exact = ", ".join(str(x) for x in cf.exact) if cf.exact else "-"
        vals = ", ".join(f"{v:.10g}" for v in pencil(domain, kind))
        print(f"{kind:9s} {domain:14s} {{{exact}}}".ljust(48) + f"{{{vals}}}")

# BSN1, BSN2 and BSN3 coincide for functions
for k in ("BSN1", "BSN2", "BSN3"):
    print(f"\n{k} on (0,1):", pencil("interval:0,1", k).round(9).tolist(), end="")
print()

# Dirichlet converges at fourth order in h
print("\nDirichlet lambda_1 on (0,1) against pi^2:")
for n in (2, 4, 8, 16):
    err = abs(pencil("interval:0,1", "Dirichlet", n)[0] - math.pi ** 2)
    print(f"  n={n:2d}  error {err:.3e}")
