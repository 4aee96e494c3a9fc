"""Dense symmetric generalized eigensolvers, with kernel deflation.

Rank-deficient ``B`` (boundary forms) is handled by the reciprocal pencil
``B v = χ A v`` on a complement of ker A, whose nonzero χ are 1/θ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class EigenError(RuntimeError):
    pass


SYM_TOL = 1e-13
CHI_TOL = 1e-10
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    finite_count: int
    deflated: int = 0


def dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


def check_symmetric(a: np.ndarray, name: str = "matrix") -> None:
    scale = max(np.abs(a).max(initial=0.0), 1e-300)
    if np.abs(a - a.T).max(initial=0.0) > SYM_TOL * scale * 10:
        raise EigenError(f"{name} is not symmetric")


def residuals(A: np.ndarray, B: np.ndarray, values, vectors) -> np.ndarray:
    """‖Av − θBv‖ / ((‖A‖ + |θ|‖B‖)‖v‖) with Frobenius matrix norms."""
    if vectors.shape[1] == 0:
        return np.zeros(0)
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    R = A @ vectors - (B @ vectors) * values[None, :]
    den = (na + np.abs(values) * nb) * np.linalg.norm(vectors, axis=0)
    return np.linalg.norm(R, axis=0) / np.where(den > 0, den, 1.0)


def solve_definite(A, B, k: int | None = None) -> EigenResult:
    """Eigenpairs of A v = θ B v with B positive definite, ascending."""
    A, B = dense(A), dense(B)
    check_symmetric(A, "A")
    check_symmetric(B, "B")
    if A.shape[0] == 0:
        return EigenResult(np.zeros(0), np.zeros((0, 0)), np.zeros(0), 0)
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise EigenError("B is not positive definite") from exc
    subset = None if k is None or k >= A.shape[0] else [0, k - 1]
    w, V = sla.eigh(A, B, subset_by_index=subset)
    return EigenResult(w, V, residuals(A, B, w, V), len(w))


def null_space(C: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ker C by SVD of the row-normalized matrix.

    Raises if a singular value sits within two decades of the cutoff.
    """
    n = C.shape[1]
    if C.shape[0] == 0:
        return np.eye(n)
    norms = np.linalg.norm(C, axis=1)
    C = C[norms > 0] / norms[norms > 0, None]
    if C.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(C, full_matrices=True)
    cut = rtol * s[0]
    if np.any((s > cut / 100) & (s < cut * 100)):
        raise EigenError("ambiguous rank: singular value near the cutoff")
    r = int(np.sum(s > cut))
    return Vt[r:].T


def _reflectors(Y: np.ndarray) -> list[np.ndarray]:
    """Householder vectors u_j with H = H_{d-1}⋯H_0 mapping Y to [R; 0]."""
    Y = np.array(Y, dtype=float)
    n, d = Y.shape
    us = []
    for j in range(d):
        x = Y[j:, j]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            raise EigenError("deflation basis is rank deficient")
        u = np.zeros(n)
        u[j:] = x
        u[j] += np.copysign(nx, x[0]) if x[0] != 0 else nx
        u /= np.linalg.norm(u)
        Y -= 2.0 * np.outer(u, u @ Y)
        us.append(u)
    return us


def _reflect_both(S: np.ndarray, us: list[np.ndarray]) -> np.ndarray:
    """H S Hᵀ for symmetric S, in O(n²) per reflector."""
    S = S.copy()
    for u in us:
        w = S @ u
        S += 4.0 * (u @ w) * np.outer(u, u) - 2.0 * (np.outer(u, w) + np.outer(w, u))
    return S


def _unreflect(V: np.ndarray, us: list[np.ndarray]) -> np.ndarray:
    """Hᵀ [0; V]: complement coordinates back to the full space."""
    X = np.vstack([np.zeros((len(us), V.shape[1])), V])
    for u in reversed(us):
        X -= 2.0 * np.outer(u, u @ X)
    return X


def solve_semidefinite(A, B, deflation: np.ndarray | None = None, k: int | None = None,
                       null_tol: float = 1e-8, chi_tol: float = CHI_TOL) -> EigenResult:
    """Finite eigenvalues of A v = θ B v with B PSD and A PSD.

    ``deflation`` must span ker A; those directions are reported as θ = 0.
    The rest is solved on the B-orthogonal complement of the deflation
    space through the reciprocal pencil B v = χ A v.  With ``k`` given only
    the largest χ are computed, and ``finite_count`` comes from the rank of
    B on the complement instead of the full χ spectrum.
    """
    A, B = dense(A), dense(B)
    check_symmetric(A, "A")
    check_symmetric(B, "B")
    n = A.shape[0]
    Z = np.zeros((n, 0)) if deflation is None else np.asarray(deflation, dtype=float).reshape(n, -1)
    na = max(np.linalg.norm(A), 1e-300)
    us: list[np.ndarray] = []
    if Z.shape[1]:
        Z = np.linalg.qr(Z)[0]
        if np.linalg.norm(A @ Z, axis=0).max() > null_tol * na:
            raise EigenError("deflation basis is not A-null within tolerance")
        BZ = B @ Z
        gram = Z.T @ BZ
        # complement of Z in the B inner product when Z has positive B-norm
        if np.linalg.eigvalsh(gram).min() > 1e-12 * max(np.linalg.norm(B), 1e-300):
            us = _reflectors(BZ)
        else:
            us = _reflectors(Z)
    d = len(us)
    Ac = _reflect_both(A, us)[d:, d:]
    Bc = _reflect_both(B, us)[d:, d:]
    Ac = 0.5 * (Ac + Ac.T)
    Bc = 0.5 * (Bc + Bc.T)
    m = Ac.shape[0]
    want = None if k is None else max(k - Z.shape[1], 0)
    if m and want != 0:
        try:
            np.linalg.cholesky(Ac)
        except np.linalg.LinAlgError as exc:
            raise EigenError("A is singular or indefinite on the deflated complement") from exc
        sub = None if want is None or want >= m else [m - want, m - 1]
        chi, V = sla.eigh(Bc, Ac, subset_by_index=sub)
    else:
        chi, V = np.zeros(0), np.zeros((m, 0))
    chi_max = chi.max(initial=0.0)
    keep = chi > chi_tol * chi_max if chi_max > 0 else np.zeros(len(chi), bool)
    if want is None or want >= m:
        finite = int(keep.sum())
    else:
        finite = _psd_rank(Bc, chi_tol)
    chi, V = chi[keep][::-1], V[:, keep][:, ::-1]
    theta = 1.0 / chi
    X = _unreflect(V, us)
    values = np.concatenate([np.zeros(Z.shape[1]), theta])
    vectors = np.hstack([Z, X])
    if k is not None:
        values, vectors = values[:k], vectors[:, :k]
    return EigenResult(values, vectors, residuals(A, B, values, vectors),
                       Z.shape[1] + finite, Z.shape[1])


def _psd_rank(S: np.ndarray, rtol: float) -> int:
    """Numerical rank of a PSD matrix, restricted to its nonzero rows."""
    support = np.nonzero(np.abs(S).max(axis=1) > 0)[0]
    if len(support) == 0:
        return 0
    w = np.linalg.eigvalsh(S[np.ix_(support, support)])
    return int(np.sum(w > rtol * w.max())) if w.max() > 0 else 0


def kernel_split(values, gap_tol: float, window: float = 10.0, search: int = 12) -> int:
    """Number of kernel eigenvalues, found from a spectral gap.

    Among the lowest ``search`` values, the kernel ends at the last index i
    with θ_{i-1} ≤ (gap_tol / window)·θ_i.  A consecutive ratio after that
    gap inside (gap_tol / window, gap_tol·window) is ambiguous and raises.
    """
    v = np.clip(np.sort(np.asarray(values, dtype=float))[:search], 0.0, None)
    if len(v) < 2:
        return 0
    ratios = np.array([v[i - 1] / v[i] if v[i] > 0 else 1.0 for i in range(1, len(v))])
    clean = np.nonzero(ratios <= gap_tol / window)[0]
    d = int(clean[-1]) + 1 if len(clean) else 0
    rest = ratios[d:]
    if np.any((rest > gap_tol / window) & (rest < gap_tol * window)):
        raise EigenError(f"ambiguous kernel: eigenvalue ratios {rest.round(6).tolist()} "
                         f"near the gap tolerance {gap_tol:g}")
    return d


def cluster(values, rel_gap: float = 1e-6) -> list[tuple[float, int]]:
    """Group sorted eigenvalues into (mean value, multiplicity)."""
    out: list[list[float]] = []
    for v in values:
        if out and abs(v - out[-1][-1]) <= rel_gap * max(abs(v), abs(out[-1][-1]), 1e-300):
            out[-1].append(v)
        else:
            out.append([v])
    return [(float(np.mean(g)), len(g)) for g in out]


def constrained_basis(C, n: int) -> sp.csr_matrix:
    """Orthonormal basis N of ker C as a sparse n × m matrix.

    Dofs untouched by any constraint keep identity columns; only the
    touched block goes through the rank-revealing SVD.
    """
    C = sp.csr_matrix(C, shape=(C.shape[0], n))
    C.eliminate_zeros()
    touched = np.unique(C.indices)
    free = np.setdiff1d(np.arange(n), touched)
    cols = [sp.csr_matrix((np.ones(len(free)), (free, np.arange(len(free)))),
                          shape=(n, len(free)))]
    if len(touched):
        K = null_space(C[:, touched].toarray())
        K[np.abs(K) < 1e-15] = 0.0
        blk = sp.coo_matrix(K)
        cols.append(sp.csr_matrix((blk.data, (touched[blk.row], blk.col)), shape=(n, K.shape[1])))
    return sp.hstack(cols, format="csr")
