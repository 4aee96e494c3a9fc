"""The seven boundary eigenvalue problems as constrained symmetric pencils.

============  =========  ==========================  =====================
kind          A          B                           essential conditions
============  =========  ==========================  =====================
Dirichlet     K_hodge    M                           ω|∂ = 0
Neumann       K_hodge    M                           ν⌟ω = 0
Steklov       K_hodge    ‖ι*ω‖²_∂                    ν⌟ω = 0
BSD           A_bih      ‖ν⌟dω‖²_∂ + ‖ι*δω‖²_∂       ω|∂ = 0
BSN1          A_bih      ‖ι*ω‖²_∂ + ‖ι*δω‖²_∂        ν⌟ω = 0, ν⌟dω = 0
BSN2          A_bih      ‖ι*ω‖²_∂                    ν⌟ω = 0, ν⌟dω = 0, ι*δω = 0
BSN3          A_bih      ‖ι*ω‖²_∂                    ν⌟ω = 0, ν⌟dω = 0
============  =========  ==========================  =====================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .discretization import DofSpace, OperatorSet, constraint_matrix
from .eigensolve import (EigenError, cluster, constrained_basis, dense,
                         kernel_split, solve_definite, solve_semidefinite)
from .harmonic import TOL_KERNEL, HarmonicBasis

KINDS = ("Dirichlet", "Neumann", "Steklov", "BSD", "BSN1", "BSN2", "BSN3")
BIHARMONIC = ("BSD", "BSN1", "BSN2", "BSN3")
KERNEL_KINDS = ("Neumann", "Steklov", "BSN1", "BSN2", "BSN3")

_TABLE: dict[str, tuple[str, tuple[str, ...], tuple[str, ...]]] = {
    "Dirichlet": ("hodge", ("mass",), ("full",)),
    "Neumann": ("hodge", ("mass",), ("nor",)),
    "Steklov": ("hodge", ("tan",), ("nor",)),
    "BSD": ("bih", ("ndtan", "tdel"), ("full",)),
    "BSN1": ("bih", ("tan", "tdel"), ("nor", "ndtan")),
    "BSN2": ("bih", ("tan",), ("nor", "ndtan", "tdel")),
    "BSN3": ("bih", ("tan",), ("nor", "ndtan")),
}


class PencilError(RuntimeError):
    pass


def normalize_kind(kind: str) -> str:
    table = {k.lower(): k for k in KINDS}
    table.update({"bsn": "BSN3", "neu": "Neumann", "dir": "Dirichlet"})
    key = kind.strip().lower()
    if key not in table:
        raise PencilError(f"unknown problem kind {kind!r}")
    return table[key]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    kind: str
    p: int
    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    deflation: np.ndarray
    M: sp.csr_matrix
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def definite(self) -> bool:
        return self.kind in ("Dirichlet", "Neumann")


@dataclass(frozen=True, eq=False)
class ReducedPencil:
    N: sp.csr_matrix
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray


@dataclass(frozen=True, eq=False)
class Spectrum:
    kind: str
    p: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    kernel_dim: int
    finite_count: int
    trivial: bool = False
    metadata: dict[str, Any] = field(default_factory=dict)

    def positive(self) -> np.ndarray:
        """Eigenvalues after the kernel, indexed from the first positive one."""
        return self.eigenvalues[self.kernel_dim:]

    def multiplicities(self, rel_gap: float = 1e-6):
        return cluster(self.eigenvalues, rel_gap)

    def to_dict(self) -> dict[str, Any]:
        md = self.metadata
        return {"kind": self.kind, "p": self.p, "domain": md.get("domain", ""),
                "h": md.get("h"), "eigenvalues": [float(x) for x in self.eigenvalues],
                "residuals": [float(x) for x in self.residuals], "kernel_dim": self.kernel_dim,
                "trivial": self.trivial}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _bform(ops: OperatorSet, names) -> sp.csr_matrix:
    out = sp.csr_matrix((ops.space.n_dofs, ops.space.n_dofs))
    for name in names:
        out = out + (ops.M if name == "mass" else ops.boundary_form(name))
    return out.tocsr()


def constraints_for(space: DofSpace, kind: str) -> sp.csr_matrix:
    rows = [constraint_matrix(space, w) for w in _TABLE[kind][2]]
    return sp.vstack(rows, format="csr") if rows else sp.csr_matrix((0, space.n_dofs))


def reduce_constraints(spec: ProblemSpec, N: sp.csr_matrix | None = None) -> ReducedPencil:
    """Null-space elimination: (NᵀAN, NᵀBN) with N an orthonormal basis of ker C."""
    if N is None:
        N = constrained_basis(spec.C, spec.A.shape[0])
    A = dense(N.T @ spec.A @ N)
    B = dense(N.T @ spec.B @ N)
    M = dense(N.T @ spec.M @ N)
    return ReducedPencil(N, 0.5 * (A + A.T), 0.5 * (B + B.T), 0.5 * (M + M.T))


def assemble_pencil(space: DofSpace, ops: OperatorSet, kind: str,
                    harm: HarmonicBasis | None = None, cache: dict | None = None) -> ProblemSpec:
    """Assemble (A, B, C) and the kernel deflation basis for one kind.

    The deflation basis spans the lowest dim H_A^p modes of (A, M) inside
    the admissible space, so it satisfies C x = 0 by construction.  Neumann
    and Steklov share that space and A = K_hodge, so they use the harmonic
    basis itself.  ``cache`` shares the constrained basis, reduced A and M
    and the kernel basis between kinds with the same A and constraints
    (BSN1 and BSN3); B is always reduced per kind.
    """
    kind = normalize_kind(kind)
    if ops.space is not space:
        raise PencilError("operators were assembled on a different space")
    aform, bforms, cons = _TABLE[kind]
    if aform == "bih":
        if ops.A_bih is None:
            raise PencilError(f"{kind} needs a biharmonic form: use P2 or Hermite3")
        A = ops.A_bih
    else:
        A = ops.K_hodge
    B = _bform(ops, bforms)
    C = constraints_for(space, kind)
    meta = {"domain": space.mesh.label, "scheme": space.scheme, "penalty": ops.penalty,
            "h": space.mesh.h(), "n_dofs": space.n_dofs}
    d = harm.dim if (harm is not None and kind in KERNEL_KINDS) else 0
    if d and kind in ("Neumann", "Steklov"):
        return ProblemSpec(kind, space.p, A, B, C, harm.vectors, ops.M, meta)
    spec = ProblemSpec(kind, space.p, A, B, C, np.zeros((space.n_dofs, 0)), ops.M, meta)
    if not d:
        return spec
    key = (aform, cons, d)
    if cache is not None and key in cache:
        shared, Z = cache[key]
        Bn = dense(shared.N.T @ B @ shared.N)
        red = ReducedPencil(shared.N, shared.A, 0.5 * (Bn + Bn.T), shared.M)
    else:
        red = reduce_constraints(spec)
        Z = np.zeros((space.n_dofs, 0))
        if red.A.shape[0] >= d:
            _, V = sla.eigh(red.A, red.M, subset_by_index=[0, d - 1])
            Z = red.N @ V
        if cache is not None:
            cache[key] = (red, Z)
    if Z.shape[1] == 0:
        return spec
    return ProblemSpec(kind, space.p, A, B, C, Z, ops.M, {**meta, "reduced": red})


ZERO_TOL = 1e-10
KERNEL_SEARCH = 12


def _zero_count(values: np.ndarray) -> int:
    """Eigenvalues that are zero to rounding, relative to the largest."""
    scale = np.abs(values).max(initial=0.0)
    return int(np.sum(values < ZERO_TOL * scale)) if scale > 0 else len(values)


def solve_problem(spec: ProblemSpec, k: int | None = None, tol_kernel: float = TOL_KERNEL,
                  null_tol: float = 1e-6) -> Spectrum:
    """Solve the constrained pencil; kernel eigenvalues are reported first.

    ``k`` limits the solve to the lowest k pairs (at least 12 for definite
    pencils, so the kernel gap stays visible).
    """
    red = spec.metadata.get("reduced") or reduce_constraints(spec)
    meta = {key: v for key, v in spec.metadata.items() if key != "reduced"}
    n = red.A.shape[0]
    if n == 0 or (not spec.definite and spec.deflation.shape[1] == 0
                  and np.abs(red.B).max(initial=0.0) <= 1e-14 * max(np.abs(red.A).max(initial=0.0), 1.0)):
        return Spectrum(spec.kind, spec.p, np.zeros(0), np.zeros((spec.A.shape[0], 0)),
                        np.zeros(0), 0, 0, True, meta)
    try:
        if spec.definite:
            res = solve_definite(red.A, red.B, None if k is None else max(k, KERNEL_SEARCH))
            kdim = kernel_split(res.values, tol_kernel, search=KERNEL_SEARCH)
        else:
            Zr = red.N.T @ spec.deflation if spec.deflation.shape[1] else None
            res = solve_semidefinite(red.A, red.B, Zr, k=k, null_tol=null_tol)
            pos = res.values[res.deflated:]
            extra = _zero_count(pos) if len(pos) else 0
            kdim = res.deflated + extra
    except EigenError as exc:
        raise PencilError(f"{spec.kind} (p={spec.p}, {meta.get('domain')}): {exc}") from exc
    if res.values.min(initial=0.0) < -1e-8 * max(abs(res.values).max(initial=0.0), 1.0):
        raise PencilError(f"{spec.kind}: negative eigenvalue, A is indefinite")
    values, X, r = res.values, red.N @ res.vectors, res.residuals
    if k is not None:
        values, X, r = values[:k], X[:, :k], r[:k]
    return Spectrum(spec.kind, spec.p, values, X, r, kdim, res.finite_count, False, meta)


def solve_kind(ops: OperatorSet, kind: str, harm: HarmonicBasis | None = None,
               k: int | None = None) -> Spectrum:
    """Assemble and solve in one call."""
    return solve_problem(assemble_pencil(ops.space, ops, kind, harm), k)
