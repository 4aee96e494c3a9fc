"""Command-line entry point: solve, suite, verify, symbols, oracle.

Exit codes: 0 success (for ``verify``: every enforced check passed),
1 solver failure or failed verification, 2 invalid flags or config.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import oracles, symbolcheck
from .discretization import DEFAULT_PENALTY, DiscretizationError, assemble_operators, build_space
from .harmonic import harmonic_basis
from .harness import (DEFAULT_CONFIG, ConfigError, SuiteConfig, SuiteError, load_config,
                      run_spectral_suite, verify_kuttler_sigillito)
from .mesh import MeshError, build_named_domain, parse_domain
from .pencils import KERNEL_KINDS, PencilError, assemble_pencil, normalize_kind, solve_problem

TRIVIAL_MESSAGE = "trivial problem (admissible space is zero)"


class UsageError(Exception):
    pass


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _scheme_for(name, scheme: str | None) -> str:
    if scheme in (None, "auto"):
        return "Hermite3" if name.dim == 1 else "P2"
    return scheme


def cmd_solve(args) -> int:
    try:
        name = parse_domain(args.domain)
        kind = normalize_kind(args.problem)
        mesh = build_named_domain(name, args.n)
        space = build_space(mesh, args.p, _scheme_for(name, args.scheme))
        ops = assemble_operators(space, args.penalty)
    except (MeshError, PencilError, DiscretizationError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        harm = harmonic_basis(ops) if kind in KERNEL_KINDS else None
        spec = assemble_pencil(space, ops, kind, harm)
        s = solve_problem(spec, k=None if args.k is None else args.k + (harm.dim if harm else 0))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if s.trivial:
        print(TRIVIAL_MESSAGE)
    else:
        print(f"# {kind} p={args.p} on {name.label()} n={args.n} ({space.scheme}, "
              f"{space.n_dofs} dofs, kernel {s.kernel_dim})")
        print(f"{'index':>5}  {'eigenvalue':>22}  {'residual':>10}")
        for i, (v, r) in enumerate(zip(s.eigenvalues, s.residuals)):
            print(f"{i:>5}  {v:>22.12g}  {r:>10.2e}")
    if args.out:
        write_atomic(args.out, s.to_json() + "\n")
    return 0


def _config(args) -> SuiteConfig:
    if not args.config:
        return DEFAULT_CONFIG
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    try:
        return load_config(text)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def cmd_suite(args) -> int:
    cfg = _config(args)
    try:
        suite = run_spectral_suite(cfg)
    except (SuiteError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for r in suite.runs:
        first = {k: (None if s.trivial else (float(s.positive()[0]) if len(s.positive()) else None))
                 for k, s in r.spectra.items()}
        print(f"{r.domain} p={r.p} n={r.n} dim H={r.harmonic_dim} "
              + " ".join(f"{k}={'trivial' if v is None else f'{v:.6g}'}" for k, v in first.items()))
    if args.out:
        write_atomic(args.out, suite.to_json() + "\n")
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    try:
        suite = run_spectral_suite(cfg)
        report = verify_kuttler_sigillito(suite)
    except (SuiteError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for c in report.checks:
        tag = "PASS" if c.passed else ("FAIL" if c.enforced else "info")
        print(f"[{tag}] {c.domain} p={c.p} n={c.n}: {c.name}  "
              f"lhs={c.lhs:.6g} rhs={c.rhs:.6g} margin={c.margin:.3e}")
    for s in report.skipped:
        print(f"[skip] {s}")
    print("all enforced checks pass" if report.passed
          else f"{len(report.failures())} enforced check(s) failed")
    if args.out:
        write_atomic(args.out, report.to_json() + "\n")
    if args.csv:
        write_atomic(args.csv, report.to_csv())
    return 0 if report.passed else 1


def cmd_symbols(args) -> int:
    try:
        dims, degs, samples = symbolcheck.parse_sweep(args.sweep)
    except symbolcheck.SymbolError as exc:
        raise UsageError(str(exc)) from exc
    recs = symbolcheck.sweep(dims, degs, samples, seed=args.seed)
    ok = True
    for prob in symbolcheck.PROBLEMS:
        rs = [r for r in recs if r["problem"] == prob]
        good = all(r["injective"] and r["dim_ok"] for r in rs)
        ok &= good
        print(f"{prob:8s} samples={len(rs):5d} min_sv={min(r['min_sv'] for r in rs):.3e} "
              f"{'injective' if good else 'NOT injective'}")
    if args.out:
        write_atomic(args.out, symbolcheck.sweep_json(recs) + "\n")
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    try:
        name = parse_domain(args.domain)
        if name.kind == "interval":
            a, b = name.params
            rows = oracles.interval_closed_form(args.kind, a, b, args.count).as_rows()
        elif name.kind == "unit_disk":
            rows = []
            for m in range(args.modes):
                rows += oracles.disk_scalar_eigs(args.kind, m, args.count, name.params[0]).as_rows()
        else:
            raise UsageError(f"no oracle for domain {args.domain!r}")
    except (MeshError, oracles.OracleError) as exc:
        raise UsageError(str(exc)) from exc
    text = oracles.oracle_table_csv(rows)
    if args.out:
        write_atomic(args.out, text)
    vals = ", ".join(f"{r['eigenvalue']:.12g}" for r in rows)
    print(f"{{{vals}}}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsnlab", description="Spectral laboratory for "
                                 "Steklov-type and biharmonic Steklov problems on forms.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="seed for all sampled quantities")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve one eigenvalue problem")
    s.add_argument("--domain", required=True, help="interval:a,b | square | disk[:R] | annulus[:ri,ro]")
    s.add_argument("--p", type=int, default=0)
    s.add_argument("--problem", required=True)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--scheme", default="auto")
    s.add_argument("--penalty", type=float, default=DEFAULT_PENALTY)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    for nm, fn, hlp in (("suite", cmd_suite, "run a spectral suite"),
                        ("verify", cmd_verify, "verify the inequalities on a suite")):
        c = sub.add_parser(nm, parents=[common], help=hlp)
        c.add_argument("--config", help="JSON config file (default: built-in config)")
        c.add_argument("--out")
        if nm == "verify":
            c.add_argument("--csv")
        c.set_defaults(func=fn)

    y = sub.add_parser("symbols", parents=[common], help="sample Shapiro-Lopatinskij maps")
    y.add_argument("--sweep", default="2..4,all,100", help="dims,degrees,samples e.g. 2..4,all,100")
    y.add_argument("--out")
    y.set_defaults(func=cmd_symbols)

    o = sub.add_parser("oracle", parents=[common], help="print a reference spectrum")
    o.add_argument("--kind", required=True)
    o.add_argument("--domain", required=True)
    o.add_argument("--count", type=int, default=5)
    o.add_argument("--modes", type=int, default=4)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "p", 0) is not None and getattr(args, "p", 0) < 0:
        parser.error("--p must be nonnegative")
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        parser.error("--n must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
