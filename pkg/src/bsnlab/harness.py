"""Spectral suites over domains, degrees and refinement levels, and the
inequality and convergence reports built from them."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .discretization import DEFAULT_PENALTY, assemble_operators, build_space
from .harmonic import QUOTIENT_KINDS, harmonic_basis, harmonic_field_quotient
from .mesh import DomainName, build_named_domain, parse_domain
from .oracles import OracleError, disk_spectrum, interval_closed_form
from .pencils import KINDS, PencilError, Spectrum, assemble_pencil, solve_problem


class SuiteError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DomainRun:
    """One domain of a suite: which degrees and resolutions to run."""

    domain: str
    degrees: tuple[int, ...] | None = None
    levels: tuple[int, ...] | None = None


@dataclass(frozen=True)
class SuiteConfig:
    domains: tuple[DomainRun, ...] = (DomainRun("interval:0,1"),)
    degrees: tuple[int, ...] | None = None
    levels: tuple[int, ...] = (4,)
    k_max: int = 5
    penalty: float = DEFAULT_PENALTY
    tol_slack: float = 1e-8
    strict_margin: float = 1e-4
    seed: int = 42
    kinds: tuple[str, ...] = KINDS
    quotients: bool = False

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        if not self.levels or min(self.levels) < 1:
            raise ConfigError("levels must be a nonempty list of positive resolutions")
        if self.penalty <= 0:
            raise ConfigError("penalty must be positive")
        if self.tol_slack < 0 or not self.strict_margin > self.tol_slack:
            raise ConfigError("need 0 <= tol_slack < strict_margin so strict passes are never vacuous")
        for d in self.domains:
            if d.levels is not None and (not d.levels or min(d.levels) < 1):
                raise ConfigError(f"{d.domain}: levels must be positive")

    def plan(self):
        """(DomainName, p, levels) triples in run order."""
        out = []
        for d in self.domains:
            name = parse_domain(d.domain)
            degs = d.degrees if d.degrees is not None else self.degrees
            degs = tuple(range(name.dim + 1)) if degs is None else tuple(q for q in degs if q <= name.dim)
            for p in degs:
                out.append((name, p, tuple(d.levels or self.levels)))
        return out


_CONFIG_KEYS = {"domains", "degrees", "levels", "k_max", "penalty", "tol_slack",
                "strict_margin", "seed", "kinds", "quotients"}


def config_from_dict(data: Any) -> SuiteConfig:
    """Validate a parsed JSON config; errors name the offending field."""
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    extra = set(data) - _CONFIG_KEYS
    if extra:
        raise ConfigError(f"config: unknown field(s) {sorted(extra)}")

    def ints(key, value, where):
        if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                                  for x in value):
            raise ConfigError(f"{where}.{key}: expected a list of integers")
        return tuple(value)

    doms = []
    for i, d in enumerate(data.get("domains", ["interval:0,1"])):
        where = f"domains[{i}]"
        if isinstance(d, str):
            d = {"domain": d}
        if not isinstance(d, dict) or not isinstance(d.get("domain"), str):
            raise ConfigError(f"{where}: expected a string or an object with 'domain'")
        bad = set(d) - {"domain", "degrees", "levels"}
        if bad:
            raise ConfigError(f"{where}: unknown field(s) {sorted(bad)}")
        try:
            parse_domain(d["domain"])
        except ValueError as exc:
            raise ConfigError(f"{where}.domain: {exc}") from exc
        doms.append(DomainRun(d["domain"],
                              ints("degrees", d["degrees"], where) if "degrees" in d else None,
                              ints("levels", d["levels"], where) if "levels" in d else None))
    kw: dict[str, Any] = {"domains": tuple(doms)}
    if "degrees" in data:
        kw["degrees"] = ints("degrees", data["degrees"], "config")
    if "levels" in data:
        kw["levels"] = ints("levels", data["levels"], "config")
    for key, typ in (("k_max", int), ("seed", int), ("penalty", (int, float)),
                     ("tol_slack", (int, float)), ("strict_margin", (int, float)),
                     ("quotients", bool)):
        if key in data:
            if not isinstance(data[key], typ) or (typ is int and isinstance(data[key], bool)):
                raise ConfigError(f"config.{key}: wrong type {type(data[key]).__name__}")
            kw[key] = data[key]
    if "kinds" in data:
        if not isinstance(data["kinds"], list) or not set(data["kinds"]) <= set(KINDS):
            raise ConfigError(f"config.kinds: expected a subset of {list(KINDS)}")
        kw["kinds"] = tuple(k for k in KINDS if k in data["kinds"])
    return SuiteConfig(**kw)


def load_config(text: str) -> SuiteConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    return config_from_dict(data)


DEFAULT_CONFIG = SuiteConfig(
    domains=(DomainRun("interval:0,1", (0,), (4, 8, 16)),
             DomainRun("square", (0, 1, 2), (2, 4, 8))),
    k_max=5)


# suite


@dataclass(frozen=True, eq=False)
class RunRecord:
    domain: str
    p: int
    n: int
    h: float
    scheme: str
    harmonic_dim: int
    spectra: dict[str, Spectrum]
    oracle: dict[str, list[float]] = field(default_factory=dict)
    quotients: dict[str, float] = field(default_factory=dict)

    def positive(self, kind: str) -> np.ndarray:
        s = self.spectra.get(kind)
        return np.zeros(0) if s is None or s.trivial else s.positive()

    def to_dict(self) -> dict[str, Any]:
        return {"domain": self.domain, "p": self.p, "n": self.n, "h": self.h,
                "scheme": self.scheme, "harmonic_dim": self.harmonic_dim,
                "spectra": {k: s.to_dict() for k, s in self.spectra.items()},
                "oracle": self.oracle, "quotients": self.quotients}


@dataclass(frozen=True, eq=False)
class SuiteResult:
    config: SuiteConfig
    runs: tuple[RunRecord, ...]

    def levels(self, domain: str, p: int) -> list[RunRecord]:
        return sorted((r for r in self.runs if r.domain == domain and r.p == p), key=lambda r: r.n)

    def finest(self, domain: str, p: int) -> RunRecord:
        lv = self.levels(domain, p)
        if not lv:
            raise SuiteError(f"no runs for {domain} p={p}")
        return lv[-1]

    def pairs(self) -> list[tuple[str, int]]:
        seen: dict[tuple[str, int], None] = {}
        for r in self.runs:
            seen[(r.domain, r.p)] = None
        return list(seen)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.runs], indent=1)


def _scheme(name: DomainName) -> str:
    return "Hermite3" if name.dim == 1 else "P2"


def oracle_values(name: DomainName, p: int, kind: str, count: int) -> list[float] | None:
    """Reference eigenvalues, kernel first, for scalar problems on interval and disk."""
    if p != 0:
        return None
    try:
        if name.kind == "interval":
            a, b = name.params
            return list(interval_closed_form(kind, a, b, count).values)[:count]
        if name.kind == "unit_disk":
            return disk_spectrum(kind, count, name.params[0])
    except OracleError:
        return None
    return None


def _truncate(s: Spectrum, keep: int) -> Spectrum:
    if s.trivial:
        return s
    keep = s.kernel_dim + keep
    return replace(s, eigenvalues=s.eigenvalues[:keep], vectors=s.vectors[:, :0],
                   residuals=s.residuals[:keep])


def run_case(name: DomainName, p: int, n: int, config: SuiteConfig) -> RunRecord:
    """All configured kinds on one (domain, degree, resolution)."""
    label = name.label()
    scheme = _scheme(name)
    mesh = build_named_domain(name, n)
    space = build_space(mesh, p, scheme)
    ops = assemble_operators(space, config.penalty)
    try:
        harm = harmonic_basis(ops)
    except Exception as exc:
        raise SuiteError(f"{label} p={p} n={n} harmonic basis: {exc}") from exc
    spectra: dict[str, Spectrum] = {}
    oracle: dict[str, list[float]] = {}
    cache: dict = {}
    for kind in config.kinds:
        try:
            spec = assemble_pencil(space, ops, kind, harm, cache)
            s = solve_problem(spec, k=config.k_max + 2 + harm.dim)
        except (PencilError, ValueError, np.linalg.LinAlgError) as exc:
            raise SuiteError(f"{label} p={p} n={n} {kind}: {exc}") from exc
        spectra[kind] = _truncate(s, config.k_max + 2)
        ref = oracle_values(name, p, kind, config.k_max + 2)
        if ref is not None:
            oracle[kind] = ref
    quot: dict[str, float] = {}
    if config.quotients:
        for kind in QUOTIENT_KINDS:
            if kind in config.kinds and not spectra[kind].trivial:
                try:
                    quot[kind] = float(harmonic_field_quotient(ops, kind, harm)[0])
                except Exception as exc:
                    raise SuiteError(f"{label} p={p} n={n} {kind} quotient: {exc}") from exc
    return RunRecord(label, p, n, mesh.h(), scheme, harm.dim, spectra, oracle, quot)


def run_spectral_suite(config: SuiteConfig) -> SuiteResult:
    runs = []
    for name, p, levels in config.plan():
        for n in sorted(levels):
            runs.append(run_case(name, p, n, config))
    return SuiteResult(config, tuple(runs))


# inequalities


@dataclass(frozen=True)
class Check:
    domain: str
    p: int
    n: int
    name: str
    lhs: float
    rhs: float
    strict: bool
    enforced: bool
    margin: float
    passed: bool


@dataclass(frozen=True, eq=False)
class InequalityReport:
    checks: tuple[Check, ...]
    tables: dict[str, dict[str, list[float]]]
    skipped: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.enforced)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.enforced and not c.passed]

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed,
                           "checks": [c.__dict__ for c in self.checks],
                           "tables": self.tables, "skipped": list(self.skipped)},
                          indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["domain", "p", "n", "name", "lhs", "rhs", "strict", "enforced", "margin", "passed"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for c in self.checks:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in c.__dict__.items()})
        return buf.getvalue()


def compare(lhs: float, rhs: float, strict: bool, tol_slack: float, strict_margin: float):
    """Relative margin (rhs - lhs)/max(|lhs|, |rhs|) and the pass flag.

    A non-strict claim passes with margin ≥ -tol_slack; a strict one needs
    margin ≥ strict_margin, so a pass is never vacuous.
    """
    scale = max(abs(lhs), abs(rhs), 1e-300)
    margin = (rhs - lhs) / scale
    ok = margin >= strict_margin if strict else margin >= -tol_slack
    return float(margin), bool(ok)


def _first(v: np.ndarray) -> float:
    return float(v[0]) if len(v) else math.nan


def verify_kuttler_sigillito(suite: SuiteResult, tol_slack: float | None = None,
                             strict_margin: float | None = None) -> InequalityReport:
    """Evaluate every inequality at the finest level of each (domain, p)."""
    cfg = suite.config
    tol = cfg.tol_slack if tol_slack is None else tol_slack
    sm = cfg.strict_margin if strict_margin is None else strict_margin
    if not sm > tol >= 0:
        raise ConfigError("need 0 <= tol_slack < strict_margin")
    checks: list[Check] = []
    tables: dict[str, dict[str, list[float]]] = {}
    skipped: list[str] = []
    for domain, p in suite.pairs():
        run = suite.finest(domain, p)
        missing = [k for k in KINDS if k not in run.spectra]
        if missing:
            raise SuiteError(f"{domain} p={p}: missing spectra {missing}")
        ev = {k: run.positive(k) for k in KINDS}
        tables[f"{domain} p={p} n={run.n}"] = {k: [float(x) for x in v[:cfg.k_max]] for k, v in ev.items()}
        dim = parse_domain(domain).dim
        if p > dim - 1:
            skipped.append(f"{domain} p={p}: BSN2/BSN3 trivial at p = dim")
            continue
        lam, mu, sig, q = ev["Dirichlet"], ev["Neumann"], ev["Steklov"], ev["BSD"]
        ell, l, bl = ev["BSN1"], ev["BSN3"], ev["BSN2"]

        def add(name, lhs, rhs, strict=False, enforced=True):
            if math.isnan(lhs) or math.isnan(rhs):
                return
            margin, ok = compare(lhs, rhs, strict, tol, sm)
            checks.append(Check(domain, p, run.n, name, float(lhs), float(rhs), strict,
                                enforced, margin, ok))

        for k in range(1, cfg.k_max + 1):
            i = k - 1
            if i < min(len(l), len(mu)) and len(sig):
                add(f"mu_{k}*sigma_1 <= l_{k}", mu[i] * sig[0], l[i])
            if i < min(len(l), len(sig)) and len(mu):
                add(f"mu_1*sigma_{k} <= l_{k}", mu[0] * sig[i], l[i])
            if i < min(len(l), len(bl)):
                add(f"l_{k} <= bl_{k}", l[i], bl[i])
            if i < min(len(ell), len(l)):
                add(f"ell_{k} <= l_{k}", ell[i], l[i])
            if i < min(len(ell), len(mu)) and len(sig):
                add(f"mu_{k}*sigma_1 <= ell_{k}", mu[i] * sig[0], ell[i], enforced=False)
            if i < min(len(ell), len(sig)) and len(mu):
                add(f"mu_1*sigma_{k} <= ell_{k}", mu[0] * sig[i], ell[i], enforced=False)
        m1, s1, q1, l1, lam1 = _first(mu), _first(sig), _first(q), _first(l), _first(lam)
        add("mu_1*sigma_1 < l_1", m1 * s1, l1, strict=True)
        add("q_1*sigma_1^2 < l_1", q1 * s1 ** 2, l1, strict=True)
        add("1/mu_1 < 1/lambda_1 + (q_1*l_1)^(-1/2)", 1 / m1, 1 / lam1 + (q1 * l1) ** -0.5, strict=True)
        add("1/mu_1 < 1/lambda_1 + 1/(q_1*sigma_1)", 1 / m1, 1 / lam1 + 1 / (q1 * s1), strict=True)
        e1, b1 = _first(ell), _first(bl)
        add("mu_1*sigma_1 < ell_1", m1 * s1, e1, strict=True, enforced=False)
        add("q_1*sigma_1^2 < ell_1", q1 * s1 ** 2, e1, strict=True, enforced=False)
        add("1/mu_1 < 1/lambda_1 + (q_1*ell_1)^(-1/2)", 1 / m1, 1 / lam1 + (q1 * e1) ** -0.5,
            strict=True, enforced=False)
        add("1/mu_1 < 1/lambda_1 + (q_1*bl_1)^(-1/2)", 1 / m1, 1 / lam1 + (q1 * b1) ** -0.5,
            strict=True, enforced=False)
    return InequalityReport(tuple(checks), tables, tuple(skipped))


# convergence


@dataclass(frozen=True)
class ConvergenceRow:
    domain: str
    p: int
    kind: str
    index: int
    reference: str
    levels: tuple[int, ...]
    errors: tuple[float, ...]
    rates: tuple[float, ...]

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def convergence_report(suite: SuiteResult, kinds=None, count: int = 1) -> list[ConvergenceRow]:
    """Errors per level and rates log₂(e_i / e_{i+1}) for doubled resolutions.

    The reference is the oracle when one exists, else the finest level
    (self-convergence over the coarser levels).
    """
    rows = []
    for domain, p in suite.pairs():
        lv = suite.levels(domain, p)
        if len(lv) < 3:
            raise SuiteError(f"{domain} p={p}: convergence needs at least 3 levels, got {len(lv)}")
        for kind in kinds or suite.config.kinds:
            if any(r.spectra[kind].trivial for r in lv):
                continue
            for i in range(count):
                vals = [r.positive(kind) for r in lv]
                if any(len(v) <= i for v in vals):
                    continue
                ref_list = lv[-1].oracle.get(kind)
                kd = lv[-1].spectra[kind].kernel_dim
                if ref_list is not None and len(ref_list) > kd + i:
                    ref, source, used = ref_list[kd + i], "oracle", lv
                else:
                    ref, source, used = float(vals[-1][i]), "finest", lv[:-1]
                errs = tuple(abs(float(r.positive(kind)[i]) - ref) / max(abs(ref), 1e-300) for r in used)
                rates = tuple(math.log2(a / b) if a > 0 and b > 0 else math.inf
                              for a, b in zip(errs, errs[1:]))
                rows.append(ConvergenceRow(domain, p, kind, i + 1, source,
                                           tuple(r.n for r in used), errs, rates))
    return rows
