"""Unit disk: pencils against the separation-of-variables oracle.

The oracle finds Bessel zeros from a 50-digit power series, so it is
independent of the finite element code.  Quadratic elements on polygonal
disk meshes converge at second order.
"""

from bsnlab.harness import DomainRun, SuiteConfig, convergence_report, run_spectral_suite
from bsnlab.oracles import disk_spectrum

cfg = SuiteConfig(domains=(DomainRun("disk", (0,), (2, 4, 8)),), k_max=3, quotients=True)
suite = run_spectral_suite(cfg)

print("oracle spectra (modes m >= 1 counted twice):")
for kind in ("Dirichlet", "Neumann", "Steklov", "BSD", "BSN"):
    print(f"  {kind:9s}", ", ".join(f"{v:.6f}" for v in disk_spectrum(kind, 4)))

print("\nrelative error of the first positive eigenvalue and observed rate:")
for row in convergence_report(suite, kinds=("Dirichlet", "Neumann", "Steklov", "BSD", "BSN3")):
    errs = "  ".join(f"{e:.2e}" for e in row.errors)
    rates = "  ".join(f"{r:.2f}" for r in row.rates)
    print(f"  {row.kind:9s} n={row.levels}  {errs}   rates {rates}")

print("\nharmonic-field quotient against the pencil:")
(domain, p), = suite.pairs()
for r in suite.levels(domain, p):
    line = "  ".join(f"{k} {r.quotients[k]:.4f}/{float(r.positive(k)[0]):.4f}" for k in r.quotients)
    print(f"  n={r.n}  {line}")
