"""Independent reference spectra for scalar problems.

Interval spectra are roots of boundary determinants over the exact
polynomial solution space, computed in rational arithmetic.  Disk spectra
come from separation of variables: harmonic radial parts r^m, biharmonic
complements r^{m+2}, and Bessel power series for the Helmholtz kinds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .pencils import ProblemSpec, reduce_constraints


class OracleError(ValueError):
    pass


INTERVAL_KINDS = ("Dirichlet", "Neumann", "Steklov", "BSD", "BSN")
DISK_KINDS = ("Dirichlet", "Neumann", "Steklov", "BSD", "BSN")


def _oracle_kind(kind: str) -> str:
    key = kind.strip().lower()
    if key.startswith("bsn"):
        return "BSN"
    table = {"dirichlet": "Dirichlet", "neumann": "Neumann", "steklov": "Steklov", "bsd": "BSD"}
    if key not in table:
        raise OracleError(f"no scalar oracle for {kind!r}")
    return table[key]


# interval: exact determinants


@dataclass(frozen=True)
class IntervalClosedForm:
    kind: str
    a: float
    b: float
    values: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = None

    def as_rows(self) -> list[dict]:
        dom = f"interval:{self.a:g},{self.b:g}"
        return [{"kind": self.kind, "domain": dom, "mode": 0, "index": i, "eigenvalue": v}
                for i, v in enumerate(self.values)]


def _monomial_derivative(k: int, j: int, t: Fraction) -> Fraction:
    """j-th derivative of t^k."""
    if j > k:
        return Fraction(0)
    c = math.perm(k, j)
    return c * t ** (k - j)


def _row(degree: int, t: Fraction, j: int, scale: Fraction = Fraction(1)) -> list[Fraction]:
    return [scale * _monomial_derivative(k, j, t) for k in range(degree + 1)]


def _boundary_rows(kind: str, a: Fraction, b: Fraction):
    """Rows (R0, R1) with the eigenvalue problem det(R0 + θ R1) = 0.

    The inward derivative is +d/dt at a and -d/dt at b; Δ = -d²/dt².
    """
    zero = lambda deg: [Fraction(0)] * (deg + 1)
    if kind == "Steklov":
        # -∂_ν u = σ u
        return ([_row(1, a, 1, Fraction(-1)), _row(1, b, 1)],
                [_row(1, a, 0, Fraction(-1)), _row(1, b, 0, Fraction(-1))])
    if kind == "BSD":
        # u = 0 and Δu = q ∂_ν u
        return ([_row(3, a, 0), _row(3, b, 0), _row(3, a, 2, Fraction(-1)), _row(3, b, 2, Fraction(-1))],
                [zero(3), zero(3), _row(3, a, 1, Fraction(-1)), _row(3, b, 1)])
    if kind == "BSN":
        # ∂_ν u = 0 and ∂_ν Δu + ℓ u = 0
        return ([_row(3, a, 1), _row(3, b, 1), _row(3, a, 3, Fraction(-1)), _row(3, b, 3)],
                [zero(3), zero(3), _row(3, a, 0), _row(3, b, 0)])
    raise OracleError(f"no determinant for {kind}")


def fraction_det(rows: list[list[Fraction]]) -> Fraction:
    """Determinant by exact Gaussian elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return det


def determinant_polynomial(R0, R1) -> list[Fraction]:
    """Coefficients c₀, c₁, … of det(R0 + θ R1), exact."""
    deg = len(R0)
    vals = []
    for t in range(deg + 1):
        rows = [[x + t * y for x, y in zip(r0, r1)] for r0, r1 in zip(R0, R1)]
        vals.append(fraction_det(rows))
    # Newton divided differences on the nodes 0..deg, then expand
    coef = list(vals)
    for j in range(1, deg + 1):
        for i in range(deg, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / j
    poly = [Fraction(0)] * (deg + 1)
    basis = [Fraction(1)]
    for j in range(deg + 1):
        for i, c in enumerate(basis):
            poly[i] += coef[j] * c
        basis = [Fraction(0)] + basis
        for i in range(len(basis) - 1):
            basis[i] -= j * basis[i + 1]
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return poly


def _fraction_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


def _real_roots(poly: list[Fraction]) -> tuple[list[float], list[Fraction] | None]:
    if len(poly) > 3:
        raise OracleError("determinant of degree above two")
    if len(poly) == 1:
        raise OracleError("degenerate determinant")
    if len(poly) == 2:
        r = -poly[0] / poly[1]
        return [float(r)], [r]
    c0, c1, c2 = poly
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        raise OracleError("complex eigenvalues in a symmetric problem")
    s = _fraction_sqrt(disc)
    if s is not None:
        roots = sorted([(-c1 - s) / (2 * c2), (-c1 + s) / (2 * c2)])
        return [float(r) for r in roots], roots
    sd = math.sqrt(float(disc))
    return sorted([float((-c1 - sd) / (2 * c2)), float((-c1 + sd) / (2 * c2))]), None


def interval_closed_form(kind: str, a: float = 0.0, b: float = 1.0,
                         count: int = 5) -> IntervalClosedForm:
    """Spectrum of a scalar problem on (a, b).

    Steklov, BSD and BSN have finite spectra, returned exactly.  Dirichlet
    and Neumann return their first ``count`` eigenvalues, with the zero
    Neumann eigenvalue first.
    """
    kind = _oracle_kind(kind)
    fa, fb = Fraction(str(a)), Fraction(str(b))
    if fa >= fb:
        raise OracleError(f"empty interval ({a}, {b})")
    length = float(fb - fa)
    if kind == "Dirichlet":
        vals = tuple((j * math.pi / length) ** 2 for j in range(1, count + 1))
        return IntervalClosedForm(kind, float(a), float(b), vals)
    if kind == "Neumann":
        vals = tuple((j * math.pi / length) ** 2 for j in range(count))
        return IntervalClosedForm(kind, float(a), float(b), vals)
    R0, R1 = _boundary_rows(kind, fa, fb)
    floats, exact = _real_roots(determinant_polynomial(R0, R1))
    return IntervalClosedForm(kind, float(a), float(b), tuple(floats),
                              tuple(exact) if exact is not None else None)


# disk: separation of variables


@dataclass(frozen=True)
class DiskModeSpectrum:
    kind: str
    m: int
    radius: float
    indices: tuple[int, ...]
    eigenvalues: tuple[float, ...]

    def as_rows(self) -> list[dict]:
        dom = f"disk:{self.radius:g}"
        return [{"kind": self.kind, "domain": dom, "mode": self.m, "index": i, "eigenvalue": v}
                for i, v in zip(self.indices, self.eigenvalues)]


SERIES_DIGITS = 50
SCAN_STEP = 0.05
SCAN_LIMIT = 60.0
ROOT_TOL = 1e-13


def bessel_series(m: int, x: float, derivative: bool = False) -> float:
    """J_m(x) or J_m'(x) by the power series, in 50-digit decimal arithmetic.

    Summation stops once terms decrease and drop below 1e-30; the series
    alternates there, so the tail is bounded by the first omitted term.
    """
    if m < 0:
        raise OracleError("negative Bessel order")
    if x == 0:
        if derivative:
            return 0.5 if m == 1 else 0.0
        return 1.0 if m == 0 else 0.0
    with localcontext() as ctx:
        ctx.prec = SERIES_DIGITS
        half = Decimal(repr(float(x))) / 2
        h2 = half * half
        term = half ** m / math.factorial(m)
        total = Decimal(0)
        k = 0
        while True:
            total += term * (Decimal(2 * k + m) / (2 * half) if derivative else 1)
            k += 1
            term = -term * h2 / (k * (k + m))
            if k > float(half) + m and abs(term) * (k + m + 1) < Decimal("1e-30"):
                break
        return float(total)


def _bisect(f, lo: float, hi: float, flo: float) -> float:
    while hi - lo > ROOT_TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_zeros(m: int, count: int, derivative: bool = False) -> list[float]:
    """First ``count`` positive zeros of J_m (or J_m') by scan and bisection.

    Each bracket is certified by a strict sign change at its endpoints.
    """
    f = lambda x: bessel_series(m, x, derivative)
    roots: list[float] = []
    x0 = 1e-3
    f0 = f(x0)
    while len(roots) < count:
        x1 = x0 + SCAN_STEP
        if x1 > SCAN_LIMIT:
            raise OracleError(f"bracket not found for zero {len(roots) + 1} of J_{m}"
                              f"{chr(39) if derivative else ''} below x = {SCAN_LIMIT}")
        f1 = f(x1)
        if f0 == 0.0:
            roots.append(x0)
        elif f0 * f1 < 0:
            roots.append(_bisect(f, x0, x1, f0))
        x0, f0 = x1, f1
    return roots[:count]


def _two_by_two_roots(M0: np.ndarray, M1: np.ndarray) -> list[float]:
    """Real roots of det(M0 + θ M1) for 2×2 matrices."""
    c0 = M0[0, 0] * M0[1, 1] - M0[0, 1] * M0[1, 0]
    c2 = M1[0, 0] * M1[1, 1] - M1[0, 1] * M1[1, 0]
    c1 = M0[0, 0] * M1[1, 1] + M1[0, 0] * M0[1, 1] - M0[0, 1] * M1[1, 0] - M1[0, 1] * M0[1, 0]
    scale = max(abs(c0), abs(c1), abs(c2))
    if abs(c2) <= 1e-14 * scale:
        if abs(c1) <= 1e-14 * scale:
            raise OracleError("degenerate mode determinant")
        return [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        raise OracleError("complex mode eigenvalues")
    s = math.sqrt(disc)
    return sorted([(-c1 - s) / (2 * c2), (-c1 + s) / (2 * c2)])


def _biharmonic_mode(kind: str, m: int, R: float) -> float:
    """Mode-m eigenvalue on span{r^m, r^{m+2}}; ∂_ν = -∂_r at r = R.

    Δ(r^k e^{imθ}) = -(k² - m²) r^{k-2} e^{imθ}.
    """
    lap = -4.0 * (m + 1)  # Δ r^{m+2} = lap · r^m
    if kind == "BSD":
        # u(R) = 0; Δu - q ∂_ν u = 0
        M0 = np.array([[R ** m, R ** (m + 2)], [0.0, lap * R ** m]])
        M1 = np.array([[0.0, 0.0], [m * R ** (m - 1) if m else 0.0, (m + 2) * R ** (m + 1)]])
    else:
        # ∂_ν u = 0; ∂_ν Δu + ℓ u = 0
        M0 = np.array([[m * R ** (m - 1) if m else 0.0, (m + 2) * R ** (m + 1)],
                       [0.0, -lap * m * R ** (m - 1) if m else 0.0]])
        M1 = np.array([[0.0, 0.0], [R ** m, R ** (m + 2)]])
    roots = [r for r in _two_by_two_roots(M0, M1) if r > -1e-12]
    if len(roots) != 1:
        raise OracleError(f"{kind} mode {m}: expected one root, got {roots}")
    return float(max(roots[0], 0.0))


def disk_scalar_eigs(kind: str, m: int, count: int = 3, radius: float = 1.0) -> DiskModeSpectrum:
    """Mode-m eigenvalues of a scalar problem on the disk of given radius.

    Steklov, BSD and BSN have one eigenvalue per mode; Dirichlet and
    Neumann return ``count`` radial indices (Neumann mode 0 starts at 0).
    """
    kind = _oracle_kind(kind)
    if radius <= 0 or m < 0 or count < 1:
        raise OracleError("need radius > 0, m >= 0 and count >= 1")
    R = float(radius)
    if kind == "Steklov":
        vals = [m / R]
    elif kind in ("BSD", "BSN"):
        vals = [_biharmonic_mode(kind, m, R)]
    elif kind == "Dirichlet":
        vals = [(x / R) ** 2 for x in bessel_zeros(m, count)]
    else:
        zs = bessel_zeros(m, count - 1 if m == 0 else count, derivative=True)
        vals = ([0.0] if m == 0 else []) + [(x / R) ** 2 for x in zs]
    vals = vals[:count]
    return DiskModeSpectrum(kind, m, R, tuple(range(len(vals))), tuple(vals))


def disk_spectrum(kind: str, count: int = 5, radius: float = 1.0, modes: int = 8) -> list[float]:
    """Lowest ``count`` eigenvalues over modes 0..modes-1; modes m ≥ 1 doubled."""
    vals: list[float] = []
    for m in range(modes):
        spec = disk_scalar_eigs(kind, m, count, radius)
        for v in spec.eigenvalues:
            vals.extend([v] if m == 0 else [v, v])
    return sorted(vals)[:count]


def oracle_table_csv(rows: Iterable[dict]) -> str:
    """CSV with the fixed column order kind, domain, mode, index, eigenvalue."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["kind", "domain", "mode", "index", "eigenvalue"],
                       lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "eigenvalue": repr(float(r["eigenvalue"]))})
    return buf.getvalue()


# brute-force sandwich


@dataclass(frozen=True)
class Sandwich:
    lower: float
    upper: float
    samples: int

    def contains(self, value: float, eps: float = 1e-6) -> bool:
        return self.lower * (1 - eps) <= value <= self.upper * (1 + 1e-12)


def bruteforce_quotient_min(spec: ProblemSpec, trials: int = 1000,
                            rng: np.random.Generator | None = None, seed: int = 42) -> Sandwich:
    """Bounds on the first positive eigenvalue of a pencil.

    Upper: least Rayleigh quotient over random admissible vectors and the
    reduced coordinate directions, each made B-orthogonal to the kernel.
    Lower: the smallest finite eigenvalue past the kernel from a QZ solve
    of the unsymmetrized pencil, independent of the symmetric solvers.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    red = spec.metadata.get("reduced") or reduce_constraints(spec)
    A, B = red.A, red.B
    n = A.shape[0]
    if n == 0:
        return Sandwich(math.inf, math.inf, 0)
    Z = red.N.T @ spec.deflation if spec.deflation.shape[1] else np.zeros((n, 0))
    X = np.hstack([rng.standard_normal((n, trials)), np.eye(n)])
    if Z.shape[1]:
        G = Z.T @ B @ Z
        if np.linalg.eigvalsh(G).min() > 1e-12 * max(np.abs(B).max(), 1e-300):
            X = X - Z @ np.linalg.solve(G, Z.T @ (B @ X))
        else:
            Q = np.linalg.qr(Z)[0]
            X = X - Q @ (Q.T @ X)
    num = np.einsum("ij,ij->j", X, A @ X)
    den = np.einsum("ij,ij->j", X, B @ X)
    ok = den > 1e-12 * den.max(initial=0.0)
    upper = float(np.min(num[ok] / den[ok])) if ok.any() else math.inf
    alpha, beta = sla.eig(A, B, right=False, homogeneous_eigvals=True)
    finite = np.abs(beta) > 1e-10 * np.abs(alpha)
    theta = np.sort((alpha[finite] / beta[finite]).real)
    theta = theta[theta > -1e-8 * max(np.abs(theta).max(initial=1.0), 1.0)]
    kdim = Z.shape[1]
    lower = float(theta[kdim]) if len(theta) > kdim else math.inf
    return Sandwich(lower, upper, int(X.shape[1]))
