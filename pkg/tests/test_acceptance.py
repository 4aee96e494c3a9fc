"""Acceptance criteria 1-11.

Each test prints one ``criterion N: PASS|FAIL`` line, and the lines are
repeated in the terminal summary.  Runs shared between criteria are cached
per module.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from bsnlab.harmonic import harmonic_basis
from bsnlab.harness import SuiteConfig, SuiteResult, run_case, verify_kuttler_sigillito
from bsnlab.mesh import parse_domain
from bsnlab.oracles import disk_spectrum, interval_closed_form
from bsnlab.pencils import KERNEL_KINDS, assemble_pencil, solve_problem
from bsnlab.symbolcheck import PROBLEMS, check_isomorphism, random_frame, symbol_phi

from conftest import make_ops

BASE = SuiteConfig(k_max=5)
KERNEL_ONLY = SuiteConfig(k_max=2, kinds=KERNEL_KINDS)
WITH_QUOTIENTS = SuiteConfig(k_max=2, kinds=("BSD", "BSN1", "BSN3"), quotients=True)


@lru_cache(maxsize=None)
def run(domain: str, p: int, n: int, config: SuiteConfig = BASE):
    return run_case(parse_domain(domain), p, n, config)


def first(run_, kind):
    return float(run_.positive(kind)[0])


def test_criterion_01_interval_bsn_exact(criterion):
    t0 = time.perf_counter()
    errs = {}
    for n in (4, 8):
        ops = make_ops("interval:0,1", 0, n)
        harm = harmonic_basis(ops)
        for kind in ("BSN1", "BSN2", "BSN3"):
            s = solve_problem(assemble_pencil(ops.space, ops, kind, harm))
            ok_shape = len(s.eigenvalues) == 2
            errs[(kind, n)] = (np.abs(s.eigenvalues - [0.0, 24.0]).max() if ok_shape else math.inf)
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst <= 1e-8 and elapsed < 1.0
    assert criterion(1, ok, f"BSN1/2/3 on (0,1) n=4,8 -> {{0, 24}}, max error {worst:.1e}, "
                            f"{elapsed:.2f} s"), errs


def test_criterion_02_interval_bsd_exact(criterion):
    errs = []
    for n in (4, 8):
        ops = make_ops("interval:-1,1", 0, n)
        s = solve_problem(assemble_pencil(ops.space, ops, "BSD"))
        errs.append(np.abs(s.eigenvalues - [1.0, 3.0]).max() if len(s.eigenvalues) == 2 else math.inf)
    ok = max(errs) <= 1e-8
    assert criterion(2, ok, f"BSD on (-1,1) -> {{1, 3}}, max error {max(errs):.1e}")


def test_criterion_03_p0_reduction(criterion):
    worst_matrix, worst_spec = 0.0, 0.0
    meshes = [("interval:0,1", 4), ("interval:0,1", 8), ("square", 2), ("square", 4),
              ("disk", 2), ("disk", 4), ("annulus", 2), ("annulus", 4)]
    for domain, n in meshes:
        ops = make_ops(domain, 0, n)
        harm = harmonic_basis(ops)
        specs = [assemble_pencil(ops.space, ops, k, harm) for k in ("BSN1", "BSN2", "BSN3")]
        vals = [solve_problem(s).eigenvalues for s in specs]
        for s, v in zip(specs[1:], vals[1:]):
            for a, b in ((s.A, specs[0].A), (s.B, specs[0].B), (s.C, specs[0].C)):
                worst_matrix = max(worst_matrix, abs(a - b).max() if a.shape == b.shape else math.inf)
            scale = max(1.0, np.abs(vals[0]).max())
            diff = np.abs(v - vals[0]).max() / scale if v.shape == vals[0].shape else math.inf
            worst_spec = max(worst_spec, diff)
    ok = worst_matrix == 0.0 and worst_spec <= 1e-12
    assert criterion(3, ok, f"p=0 BSN1/2/3 pencils identical on {len(meshes)} meshes "
                            f"(matrix diff {worst_matrix:.1e}, spectrum diff {worst_spec:.1e})")


def test_criterion_04_top_degree(criterion):
    worst, trivial = 0.0, True
    for n in (2, 4):
        ops = make_ops("square", 2, n)
        s = {k: solve_problem(assemble_pencil(ops.space, ops, k, harmonic_basis(ops)))
             for k in ("BSD", "BSN1", "BSN2", "BSN3")}
        trivial &= s["BSN2"].trivial and s["BSN3"].trivial
        a, b = s["BSN1"].eigenvalues, s["BSD"].eigenvalues
        worst = max(worst, np.abs(a - b).max() / np.abs(b).max() if a.shape == b.shape else math.inf)
    ok = trivial and worst <= 1e-10
    assert criterion(4, ok, f"square p=2: BSN2/BSN3 trivial={trivial}, "
                            f"BSN1 vs BSD relative diff {worst:.1e}")


@pytest.mark.slow
def test_criterion_05_kernel_identification(criterion):
    expect = {("interval:0,1", 0): (1, (4, 8)), ("square", 0): (1, (2, 4)),
              ("disk", 0): (1, (2, 4)), ("annulus", 0): (1, (2, 4)),
              ("square", 1): (0, (2, 4)), ("disk", 1): (0, (2, 4)),
              ("annulus", 1): (1, (4, 8))}
    bad = []
    for (domain, p), (dim, levels) in expect.items():
        for n in levels:
            r = run(domain, p, n, KERNEL_ONLY)
            if r.harmonic_dim != dim:
                bad.append(f"{domain} p={p} n={n}: dim H = {r.harmonic_dim}")
            for kind, s in r.spectra.items():
                if not s.trivial and s.kernel_dim != r.harmonic_dim:
                    bad.append(f"{domain} p={p} n={n} {kind}: kernel {s.kernel_dim}")
    ok = not bad
    assert criterion(5, ok, "kernel_dim = dim H_A^p on all runs (1 at p=0; 0 square/disk p=1; "
                            "1 annulus p=1; two levels each)" if ok else "; ".join(bad))


def test_criterion_06_monotonicity(criterion):
    bad, count = [], 0
    for domain, p, n in (("square", 0, 4), ("square", 1, 4), ("annulus", 0, 4), ("annulus", 1, 4)):
        r = run(domain, p, n)
        ell, l, bl = r.positive("BSN1"), r.positive("BSN3"), r.positive("BSN2")
        m = min(5, len(ell), len(l), len(bl))
        slack = 1e-8 * bl[m - 1]
        for k in range(m):
            count += 2
            if not ell[k] <= l[k] + slack:
                bad.append(f"{domain} p={p}: ell_{k + 1}={ell[k]:.6g} > l_{k + 1}={l[k]:.6g}")
            if not l[k] <= bl[k] + slack:
                bad.append(f"{domain} p={p}: l_{k + 1}={l[k]:.6g} > bl_{k + 1}={bl[k]:.6g}")
        if m < 5:
            bad.append(f"{domain} p={p}: only {m} eigenvalues")
    ok = not bad
    assert criterion(6, ok, f"ell_k <= l_k <= bl_k, k <= 5, {count} comparisons on square and "
                            "annulus p=0,1 (n=4)" if ok else "; ".join(bad))


# annulus p=1 is analysed in the decisions ledger: the pencil l_1 converges
# too slowly for the (q_1 l_1)^(-1/2) bound at any dense-solver resolution
KNOWN_RED = ("annulus:0.5,1", 1, "1/mu_1 < 1/lambda_1 + (q_1*l_1)^(-1/2)")


@lru_cache(maxsize=None)
def ks_report():
    cfg = SuiteConfig(k_max=5)
    runs = (run("interval:0,1", 0, 16), run("square", 0, 8), run("square", 1, 8),
            run("annulus", 0, 8), run("annulus", 1, 4))
    return verify_kuttler_sigillito(SuiteResult(cfg, runs))


def test_criterion_07_kuttler_sigillito(criterion):
    rep = ks_report()
    enforced = [c for c in rep.checks if c.enforced]
    fails = rep.failures()
    q8 = next(c for c in rep.checks if c.domain.startswith("interval") and c.name.startswith("q_1"))
    detail = (f"{len(enforced) - len(fails)}/{len(enforced)} enforced checks pass; "
              f"interval q_1 sigma_1^2 = {q8.lhs:.6g} < l_1 = {q8.rhs:.6g}")
    if fails:
        detail += "; failing: " + "; ".join(f"{c.domain} p={c.p} n={c.n} {c.name} "
                                            f"(margin {c.margin:.3g})" for c in fails)
    assert criterion(7, rep.passed, detail)


def test_kuttler_sigillito_outside_known_red():
    """Everything in criterion 7 except the ledgered annulus p=1 bound holds."""
    rep = ks_report()
    other = [c for c in rep.failures() if (c.domain, c.p, c.name) != KNOWN_RED]
    assert not other, other
    q8 = next(c for c in rep.checks if c.domain.startswith("interval") and c.name.startswith("q_1"))
    assert (q8.lhs, q8.rhs) == pytest.approx((8.0, 24.0), rel=1e-9)


def test_criterion_08_disk_oracle_convergence(criterion):
    bad, finals = [], {}
    for kind in ("Dirichlet", "Neumann", "Steklov"):
        ref = [v for v in disk_spectrum(kind, 3) if v > 0][0]
        errs = [abs(first(run("disk", 0, n), kind) - ref) / ref for n in (2, 4, 8)]
        finals[kind] = errs[-1]
        if not (errs[0] > errs[1] > errs[2] and errs[2] <= 1e-2):
            bad.append(f"{kind}: errors {[f'{e:.2e}' for e in errs]}")
    ok = not bad
    lam = disk_spectrum("Dirichlet", 1)[0]
    detail = (f"oracle lambda_1 = {lam:.6f}, sigma_1 = 1; final relative errors "
              + ", ".join(f"{k} {v:.1e}" for k, v in finals.items()))
    assert criterion(8, ok, detail if ok else "; ".join(bad))


def test_criterion_09_quotient_agreement(criterion):
    cases = [("disk", 0, "BSD"), ("disk", 0, "BSN1"), ("disk", 0, "BSN3"),
             ("disk", 1, "BSN1"), ("disk", 1, "BSN3"),
             ("interval:0,1", 0, "BSD"), ("interval:0,1", 0, "BSN3")]
    bad, finals = [], []
    for domain, p, kind in cases:
        levels = (4, 8, 16) if domain.startswith("interval") else (2, 4, 8)
        gaps = []
        for n in levels:
            r = run(domain, p, n, WITH_QUOTIENTS)
            pencil, quot = first(r, kind), r.quotients[kind]
            gaps.append(abs(quot - pencil) / pencil)
        finals.append(gaps[-1])
        exact = gaps[0] < 1e-9     # exact on the interval at every level
        if gaps[-1] > 0.02 or not (exact or gaps[0] > gaps[1] > gaps[2]):
            bad.append(f"{domain} p={p} {kind}: gaps {[f'{g:.2e}' for g in gaps]}")
    ok = not bad
    assert criterion(9, ok, f"harmonic-field quotient vs pencil within 2% on {len(cases)} cases, "
                            f"max final gap {max(finals):.2e}" if ok else "; ".join(bad))


def test_criterion_10_symbol_sweep(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    bad, worst, total = [], math.inf, 0
    for n in (2, 3, 4):
        for p in range(n + 1):
            for _ in range(100):
                frame = random_frame(rng, n, p, 0.1, 10.0)
                phis = {prob: symbol_phi(prob, frame) for prob in PROBLEMS}
                if not np.array_equal(phis["BSN1"].matrix, phis["BSN3"].matrix):
                    bad.append(f"BSN3 != BSN1 at n={n} p={p}")
                for prob, phi in phis.items():
                    total += 1
                    rep = check_isomorphism(phi, 1e-10)
                    worst = min(worst, rep.min_singular_value / rep.max_singular_value)
                    order = 2 if prob != "DeltaNeu" else 1
                    if not rep.injective:
                        bad.append(f"{prob} n={n} p={p} not injective")
                    if phi.source_dim != order * math.comb(n, p):
                        bad.append(f"{prob} n={n} p={p} dim M+ = {phi.source_dim}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10.0
    assert criterion(10, ok, f"{total} symbol checks injective, min sv/max sv {worst:.2e}, "
                             f"BSN3 = BSN1, {elapsed:.2f} s" if ok else "; ".join(bad[:5]))


def test_criterion_11_scaling_laws(criterion):
    oracle = {
        "BSN": (interval_closed_form("BSN", 0, 2).values[1], 3.0),
        "Steklov": (interval_closed_form("Steklov", 0, 2).values[1], 1.0),
        "Dirichlet": (interval_closed_form("Dirichlet", 0, 2, 1).values[0], math.pi ** 2 / 4),
    }
    oracle_err = max(abs(a - b) for a, b in oracle.values())
    unit, wide = run("interval:0,1", 0, 16), run("interval:0,2", 0, 16)
    ratios = {"BSN3": (first(wide, "BSN3"), first(unit, "BSN3") / 8),
              "Steklov": (first(wide, "Steklov"), first(unit, "Steklov") / 2),
              "BSD": (first(wide, "BSD"), first(unit, "BSD") / 2),
              "Dirichlet": (first(wide, "Dirichlet"), first(unit, "Dirichlet") / 4),
              "Neumann": (first(wide, "Neumann"), first(unit, "Neumann") / 4)}
    pencil_law = max(abs(a - b) / b for a, b in ratios.values())
    pencil_vs_oracle = max(abs(first(wide, "BSN3") - 3.0), abs(first(wide, "Steklov") - 1.0),
                           abs(first(wide, "Dirichlet") - math.pi ** 2 / 4) / (math.pi ** 2 / 4))
    ok = oracle_err <= 1e-8 and pencil_law <= 1e-8 and pencil_vs_oracle <= 1e-6
    assert criterion(11, ok, f"(0,1) -> (0,2): BSN 24 -> 3, Steklov 2 -> 1, Dirichlet pi^2 -> "
                             f"pi^2/4; oracle error {oracle_err:.1e}, pencil scaling error "
                             f"{pencil_law:.1e}, pencil vs oracle {pencil_vs_oracle:.1e}")
