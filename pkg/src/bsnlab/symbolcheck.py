"""Shapiro–Lopatinskij maps Φ of the boundary problems, sampled numerically.

A boundary point carries an orthonormal frame e_0..e_{n-1} with inward
normal ν = e_{n-1}; the tangential covector v lies in span(e_0..e_{n-2}).
Bounded solutions of the symbol ODE are y(t) = e^{-|v|t}(tA + B) for the
bi-Laplacian and y(t) = e^{-|v|t}A for the Laplacian, with A, B ∈ Λ^p.
Φ maps (A, B) to the principal boundary symbols at t = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import exterior as ext

PROBLEMS = ("BSN1", "BSN2", "BSN3", "biLap1", "biLap2", "DeltaNeu")
ORDER = {"BSN1": 4, "BSN2": 4, "BSN3": 4, "biLap1": 4, "biLap2": 4, "DeltaNeu": 2}


class SymbolError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CovectorFrame:
    n: int
    p: int
    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=float)
        if self.n < 2 or not 0 <= self.p <= self.n:
            raise SymbolError(f"need n >= 2 and 0 <= p <= n, got n={self.n}, p={self.p}")
        if v.shape != (self.n,):
            raise SymbolError("v must have n frame components")
        if v[-1] != 0.0:
            raise SymbolError("v must be tangential (orthogonal to ν)")
        if not np.linalg.norm(v) > 0:
            raise SymbolError("v must be nonzero")
        object.__setattr__(self, "v", v)

    @property
    def nu(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[-1] = 1.0
        return e

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))


def random_frame(rng: np.random.Generator, n: int, p: int,
                 vmin: float = 0.1, vmax: float = 10.0) -> CovectorFrame:
    d = rng.standard_normal(n - 1)
    d /= np.linalg.norm(d)
    return CovectorFrame(n, p, np.append(d * rng.uniform(vmin, vmax), 0.0))


def ode_space_basis(frame: CovectorFrame, order: int) -> list[tuple[str, tuple[int, ...]]]:
    """Labels of a basis of M⁺: ('a' or 'b', frame subset) for order 4."""
    if order not in (2, 4):
        raise SymbolError("order must be 2 or 4")
    forms = ext.basis(frame.n, frame.p)
    parts = ("a", "b") if order == 4 else ("a",)
    return [(c, s) for c in parts for s in forms]


@dataclass(frozen=True, eq=False)
class SymbolMatrix:
    problem: str
    frame: CovectorFrame
    matrix: np.ndarray
    blocks: tuple[str, ...] = field(default=())

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]


def _pieces(frame: CovectorFrame):
    """Boundary symbol building blocks as matrices on ambient Λ^p."""
    n, p, v = frame.n, frame.p, frame.v
    tang = set(range(n - 1))
    rows_p = ext.subset_rows(n, p, tang)
    rows_q = ext.subset_rows(n, p - 1, tang)
    P = ext.tangential_projector(frame.nu, n, p)
    nor = ext.interior(frame.nu, n, p)[rows_q]
    tan = P[rows_p]
    v_wedge_nor = (ext.wedge(v, n, p - 1) @ ext.interior(frame.nu, n, p))[rows_p] if p >= 1 \
        else np.zeros((len(rows_p), P.shape[1]))
    v_int_tan = (ext.interior(v, n, p) @ P)[rows_q]
    return nor, tan, v_wedge_nor, v_int_tan


def symbol_phi(problem: str, frame: CovectorFrame) -> SymbolMatrix:
    """Assemble Φ for ``problem`` at ``frame``; columns are (A, B)."""
    if problem not in PROBLEMS:
        raise SymbolError(f"unknown problem {problem!r}")
    s = frame.speed
    nor, tan, vwn, vit = _pieces(frame)
    Zq, Zp = np.zeros_like(nor), np.zeros_like(tan)
    if problem == "DeltaNeu":
        M = np.vstack([nor, -s * tan + 1j * vwn])
        return SymbolMatrix(problem, frame, M.astype(complex), ("nor", "ndtan"))
    r1 = np.hstack([Zq, nor])                                   # ν⌟ω
    r2 = np.hstack([tan, -s * tan + 1j * vwn])                  # ν⌟dω
    r3_bsn = np.hstack([2 * s * (1j * vwn - s * tan), Zp])      # ν⌟dΔω
    r4_nlap = np.hstack([2 * s * nor, Zq])                      # ν⌟Δω
    r3_tan = np.hstack([Zp, tan])                               # ι*ω
    r4_tdel = np.hstack([-nor, s * nor + 1j * vit])             # ι*δω
    rows = {"BSN1": (r1, r2, r3_bsn, r4_nlap),
            "BSN3": (r1, r2, r3_bsn, r4_nlap),
            "BSN2": (r1, r2, r3_bsn, r4_tdel),
            "biLap1": (r1, r2, r3_tan, r4_tdel),
            "biLap2": (r1, r2, r3_tan, r4_nlap)}[problem]
    return SymbolMatrix(problem, frame, np.vstack(rows).astype(complex), ("B1", "B2", "B3", "B4"))


@dataclass(frozen=True)
class IsoReport:
    injective: bool
    min_singular_value: float
    max_singular_value: float
    square: bool

    @property
    def isomorphism(self) -> bool:
        return self.injective and self.square


def check_isomorphism(phi: SymbolMatrix | np.ndarray, tol: float = 1e-10) -> IsoReport:
    M = phi.matrix if isinstance(phi, SymbolMatrix) else np.asarray(phi)
    if M.size == 0:
        return IsoReport(M.shape[1] == 0, 0.0, 0.0, M.shape[0] == M.shape[1])
    s = np.linalg.svd(M, compute_uv=False)
    smin = float(s[-1]) if M.shape[0] >= M.shape[1] else 0.0
    smax = float(s[0])
    return IsoReport(bool(smin > tol * smax), smin, smax, M.shape[0] == M.shape[1])


def expected_dim(problem: str, n: int, p: int) -> int:
    return (2 if ORDER[problem] == 4 else 1) * comb(n, p)


def parse_sweep(text: str) -> tuple[list[int], list[int] | None, int]:
    """Parse ``2..4,all,100`` into (dims, degrees or None for all, samples)."""
    try:
        dims_s, deg_s, count_s = text.split(",")
        if ".." in dims_s:
            lo, hi = dims_s.split("..")
            dims = list(range(int(lo), int(hi) + 1))
        else:
            dims = [int(dims_s)]
        degs = None if deg_s.strip() == "all" else [int(x) for x in deg_s.split("/")]
        samples = int(count_s)
    except ValueError as exc:
        raise SymbolError(f"bad sweep {text!r}; expected like 2..4,all,100") from exc
    if min(dims) < 2 or samples < 1:
        raise SymbolError("sweep needs n >= 2 and at least one sample")
    return dims, degs, samples


def sweep(dims=(2, 3, 4), degrees=None, samples: int = 100, seed: int = 42,
          problems=PROBLEMS, tol: float = 1e-10) -> list[dict]:
    """Injectivity of Φ over random frames for every (n, p)."""
    rng = np.random.default_rng(seed)
    out = []
    for n in dims:
        for p in (range(n + 1) if degrees is None else [q for q in degrees if q <= n]):
            for _ in range(samples):
                frame = random_frame(rng, n, p)
                for prob in problems:
                    phi = symbol_phi(prob, frame)
                    rep = check_isomorphism(phi, tol)
                    out.append({"problem": prob, "n": n, "p": p, "speed": frame.speed,
                                "min_sv": rep.min_singular_value, "injective": rep.injective,
                                "square": rep.square,
                                "dim_ok": phi.source_dim == expected_dim(prob, n, p)})
    return out


def sweep_json(records: list[dict]) -> str:
    return json.dumps(records, indent=1, sort_keys=True)
