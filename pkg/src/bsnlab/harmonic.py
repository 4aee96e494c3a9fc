"""Absolute harmonic fields and harmonic-field eigenvalue characterizations.

The discretely harmonic subspace is parameterized by the boundary nodal
values through the Schur complement of the interior block of K_hodge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import exterior as ext
from .discretization import OperatorSet, constraint_matrix, _node_normals
from .eigensolve import EigenError, constrained_basis, dense, kernel_split, null_space

TOL_KERNEL = 1e-2


class HarmonicError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    p: int
    vectors: np.ndarray
    eigenvalues: np.ndarray
    threshold: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def to_json(self, ops: OperatorSet) -> str:
        res = []
        for v in self.vectors.T:
            res.append({"hodge_residual": float(np.linalg.norm(ops.K_hodge @ v)
                                                / max(np.linalg.norm(ops.M @ v), 1e-300)),
                        "normal_trace": float(np.linalg.norm(ops.traces["nor"] @ v))})
        return json.dumps({"p": self.p, "dim": self.dim, "threshold": self.threshold,
                           "coefficients": self.vectors.T.tolist(), "diagnostics": res})


def neumann_spectrum(ops: OperatorSet, count: int | None = None):
    """Lowest eigenpairs of (K_hodge, M) under ν⌟ω = 0, in full coordinates.

    ``count=None`` returns the whole spectrum.  Large systems use sparse
    shift-invert Lanczos for the lowest ``count`` pairs.
    """
    N = constrained_basis(constraint_matrix(ops.space, "nor"), ops.space.n_dofs)
    A = (N.T @ ops.K_hodge @ N).tocsc()
    B = (N.T @ ops.M @ N).tocsc()
    m = A.shape[0]
    if m == 0:
        return np.zeros(0), np.zeros((ops.space.n_dofs, 0))
    if count is None or m <= max(400, 4 * count):
        sub = None if count is None or count >= m else [0, count - 1]
        w, V = sla.eigh(dense(A), dense(B), subset_by_index=sub)
    else:
        ratio = float(A.diagonal().min() / B.diagonal().max())
        shift = -1e-3 * ratio if ratio > 0 else -1.0
        w, V = spla.eigsh(A, k=count, M=B, sigma=shift, which="LM")
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    return w, N @ V


def harmonic_basis(ops: OperatorSet, tol_kernel: float = TOL_KERNEL) -> HarmonicBasis:
    """Kernel of the Neumann pencil: closed, coclosed, normal trace zero.

    The kernel is the block of lowest eigenvalues ending at a spectral gap
    of ratio at most ``tol_kernel / 10``; conforming elements only
    approximate harmonic fields on curved domains, so the discrete kernel
    is small but not zero.  A gap ratio within a factor 10 of
    ``tol_kernel`` is ambiguous and raises.
    """
    w, X = neumann_spectrum(ops, count=12)
    if len(w) == 0:
        return HarmonicBasis(ops.space.p, np.zeros((ops.space.n_dofs, 0)), w, 0.0)
    try:
        d = kernel_split(w, tol_kernel)
    except EigenError as exc:
        raise HarmonicError(str(exc)) from exc
    thr = tol_kernel * w[d] if d < len(w) else float(w[-1])
    V = X[:, :d]
    if d:
        G = V.T @ (ops.M @ V)
        V = V @ np.linalg.inv(np.linalg.cholesky(0.5 * (G + G.T))).T
    return HarmonicBasis(ops.space.p, V, w, float(thr))


def _node_rows(ops: OperatorSet):
    """Global dofs of boundary nodal values, per component, and the rest."""
    sp_ = ops.space
    bnd = np.concatenate([c * sp_.n_scalar + sp_.boundary_value_dofs
                          for c in range(sp_.n_components)])
    inner = np.setdiff1d(np.arange(sp_.n_dofs), bnd)
    return bnd, inner


def harmonic_extension_operator(ops: OperatorSet) -> np.ndarray:
    """E with ω = E b harmonic in the interior and nodal boundary values b."""
    bnd, inner = _node_rows(ops)
    K = ops.K_hodge.tocsr()
    E = np.zeros((ops.space.n_dofs, len(bnd)))
    E[bnd, np.arange(len(bnd))] = 1.0
    if len(inner):
        Kii = K[inner][:, inner].tocsc()
        Kib = K[inner][:, bnd]
        E[inner] = -sp.linalg.splu(Kii).solve(dense(Kib))
    return E


@dataclass(frozen=True, eq=False)
class Extension:
    form: np.ndarray
    residual: float
    dropped_normal: float


def tangential_harmonic_extension(ops: OperatorSet, boundary_data) -> Extension:
    """Harmonic ω̂ with ι*ω̂ = data and ν⌟ω̂ = 0 on the boundary.

    ``boundary_data`` is a callable on points returning ambient components,
    or an array of shape (boundary nodes, components).  The normal part of
    the data at each node is removed and its size reported.
    """
    sp_ = ops.space
    n, p = sp_.dim, sp_.p
    nodes = sp_.boundary_value_dofs
    pts = sp_.node_coords[nodes]
    if callable(boundary_data):
        data = np.asarray(boundary_data(pts), dtype=float).reshape(len(nodes), -1)
    else:
        data = np.asarray(boundary_data, dtype=float).reshape(len(nodes), -1)
    normals = _node_normals(sp_)
    vals = data.copy()
    for k, dof in enumerate(nodes.tolist()):
        for nu in normals[dof]:
            vals[k] = ext.tangential_projector(nu, n, p) @ vals[k]
    dropped = float(np.linalg.norm(vals - data))
    b = vals.T.ravel()
    E = harmonic_extension_operator(ops)
    w = E @ b
    _, inner = _node_rows(ops)
    r = ops.K_hodge @ w
    scale = max(np.linalg.norm(ops.K_hodge.data) * np.linalg.norm(w), 1e-300)
    return Extension(w, float(np.linalg.norm(r[inner]) / scale), dropped)


QUOTIENT_KINDS = ("BSD", "BSN1", "BSN3")


def boundary_flux_operator(ops: OperatorSet, E: np.ndarray | None = None) -> np.ndarray:
    """Nodal boundary flux of harmonic extensions, F = M_∂⁻¹ (K E)_∂.

    For discretely harmonic ω the boundary rows of K ω pair test forms with
    the flux −ν⌟dω + ν∧ι*δω, so the tangential part of F approximates
    ν⌟dω and its normal part ι*δω, up to sign.
    """
    if E is None:
        E = harmonic_extension_operator(ops)
    bnd, _ = _node_rows(ops)
    Mb = dense(ops.boundary_form("full")[bnd][:, bnd])
    R = ops.K_hodge @ E
    return sla.cho_solve(sla.cho_factor(Mb), R[bnd])


def harmonic_field_quotient(ops: OperatorSet, kind: str, harm: HarmonicBasis | None = None,
                            orthogonality: str | None = None, count: int = 1) -> np.ndarray:
    """Smallest generalized eigenvalues of a harmonic-field characterization.

    BSD: ‖ω‖²_∂ / ‖ω‖²_M over harmonic ω.
    BSN1: (‖ν⌟ω‖²_∂ + ‖ν⌟dω‖²_∂) / ‖ω‖²_M over harmonic ω ⊥_M H_A^p.
    BSN3: ‖ν⌟dω‖²_∂ / ‖ω‖²_M over harmonic ω with ν⌟ω = 0, ⊥_∂ H_A^p
    (``orthogonality='interior'`` switches to ⊥_M).
    ν⌟dω is taken from the variational boundary flux, see
    ``boundary_flux_operator``.  Only the first value is a proven
    characterization; the rest are informational.
    """
    if kind not in QUOTIENT_KINDS:
        raise ValueError(f"no harmonic-field characterization for {kind!r}")
    if harm is None and kind != "BSD":
        harm = harmonic_basis(ops)
    E = harmonic_extension_operator(ops)
    if kind == "BSD":
        Nm = E.T @ (ops.boundary_form("full") @ E)
    else:
        bnd, _ = _node_rows(ops)
        F = boundary_flux_operator(ops, E)
        Nm = F.T @ (dense(ops.boundary_form("tan")[bnd][:, bnd]) @ F)
        if kind == "BSN1" and ops.space.p >= 1:
            Nm = Nm + E.T @ (ops.boundary_form("nor") @ E)
    Dn = E.T @ (ops.M @ E)
    rows = []
    if kind == "BSN3" and ops.space.p >= 1:
        rows.append(dense(constraint_matrix(ops.space, "nor")) @ E)
    if kind != "BSD" and harm.dim:
        orth = orthogonality or ("boundary" if kind == "BSN3" else "interior")
        G = ops.boundary_form("full") if orth == "boundary" else ops.M
        rows.append(harm.vectors.T @ (G @ E))
    Q = null_space(np.vstack(rows)) if rows else np.eye(E.shape[1])
    if Q.shape[1] == 0:
        raise HarmonicError("empty admissible harmonic space")
    a = Q.T @ Nm @ Q
    b = Q.T @ Dn @ Q
    try:
        w = sla.eigh(0.5 * (a + a.T), 0.5 * (b + b.T), eigvals_only=True,
                     subset_by_index=[0, min(count, len(a)) - 1])
    except np.linalg.LinAlgError as exc:
        raise EigenError("harmonic quotient pencil failed") from exc
    return w
