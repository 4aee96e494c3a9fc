"""Degree-p form discretizations on flat 1D/2D meshes.

A p-form is stored component-wise over the frame basis ``dx_I`` (sorted
index subsets), each component a scalar finite element field.  Dofs are
ordered component-major.  The Laplacian is the positive one (Δu = −u″).

Supported scalar schemes: Lagrange ``P1`` and ``P2`` (1D and 2D) and the
cubic ``Hermite3`` element (1D only).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import exterior as ext
from .mesh import Mesh

SCHEMES = ("P1", "P2", "Hermite3")
TRACES = ("tan", "nor", "ndtan", "tdel", "nlap")
DEFAULT_PENALTY = 1.5
_TRACE_ALIASES = {
    "tan": "tan", "i*": "tan", "ι*": "tan",
    "nor": "nor", "nu": "nor", "ν⌟": "nor",
    "ndtan": "ndtan", "nud": "ndtan", "ν⌟d": "ndtan",
    "tdel": "tdel", "i*delta": "tdel", "ι*δ": "tdel",
    "nlap": "nlap", "nulap": "nlap", "ν⌟Δ": "nlap",
    "full": "full",
}
_CORNER_ANGLE = np.pi / 4


class DiscretizationError(ValueError):
    pass


def normalize_scheme(scheme: str) -> str:
    key = scheme.strip().lower().replace("lagrange-", "").replace("_", "")
    table = {"p1": "P1", "p2": "P2", "hermite3": "Hermite3", "hermite": "Hermite3"}
    if key not in table:
        raise DiscretizationError(f"unknown scheme {scheme!r}")
    return table[key]


@dataclass(frozen=True, eq=False)
class DofSpace:
    mesh: Mesh
    p: int
    scheme: str
    n_scalar: int
    cell_dofs: np.ndarray
    node_coords: np.ndarray
    is_value_dof: np.ndarray
    boundary_value_dofs: np.ndarray
    boundary_deriv_dofs: np.ndarray

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def components(self) -> tuple[tuple[int, ...], ...]:
        return ext.basis(self.dim, self.p)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_dofs(self) -> int:
        return self.n_components * self.n_scalar

    @property
    def degree(self) -> int:
        return {"P1": 1, "P2": 2, "Hermite3": 3}[self.scheme]

    def component_dofs(self, comp: int) -> np.ndarray:
        return comp * self.n_scalar + np.arange(self.n_scalar)

    def boundary_dofs(self) -> np.ndarray:
        """Global dofs of every component supported on the boundary."""
        scal = np.union1d(self.boundary_value_dofs, self.boundary_deriv_dofs)
        return np.concatenate([c * self.n_scalar + scal for c in range(self.n_components)])

    def interpolate(self, f: Callable, df: Callable | None = None) -> np.ndarray:
        """Nodal interpolant of a form given by ``f(points) -> (N, C)``.

        Hermite3 derivative dofs need ``df(points) -> (N, C)`` (1D only).
        """
        out = np.zeros((self.n_components, self.n_scalar))
        vals = np.asarray(f(self.node_coords[self.is_value_dof]), dtype=float)
        out[:, self.is_value_dof] = vals.reshape(int(self.is_value_dof.sum()), -1).T
        if not self.is_value_dof.all():
            if df is None:
                raise DiscretizationError("Hermite3 interpolation needs the derivative df")
            mask = ~self.is_value_dof
            dv = np.asarray(df(self.node_coords[mask]), dtype=float)
            out[:, mask] = dv.reshape(int(mask.sum()), -1).T
        return out.ravel()


def build_space(mesh: Mesh, p: int, scheme: str = "P2") -> DofSpace:
    scheme = normalize_scheme(scheme)
    if not 0 <= p <= mesh.dim:
        raise DiscretizationError(f"degree p={p} must satisfy 0 <= p <= dim={mesh.dim}")
    if scheme == "Hermite3" and mesh.dim != 1:
        raise DiscretizationError("Hermite3 is only available in 1D")
    nv = mesh.n_vertices
    bverts = np.unique(np.concatenate([f.vertices for f in mesh.boundary_facets]))
    deriv = np.array([], dtype=np.int64)
    if scheme == "P1":
        cell_dofs = mesh.cells.copy()
        coords = mesh.vertices.copy()
        is_val = np.ones(nv, bool)
        bvals = bverts
    elif scheme == "P2" and mesh.dim == 1:
        nc = mesh.n_cells
        cell_dofs = np.column_stack([mesh.cells, nv + np.arange(nc)])
        coords = np.concatenate([mesh.vertices, mesh.vertices[mesh.cells].mean(axis=1)])
        is_val = np.ones(nv + nc, bool)
        bvals = bverts
    elif scheme == "P2":
        edges = mesh.edges()
        eid = {tuple(e): nv + k for k, e in enumerate(edges.tolist())}
        c = mesh.cells
        loc_edges = [(1, 2), (0, 2), (0, 1)]
        cols = [c[:, 0], c[:, 1], c[:, 2]]
        for i, j in loc_edges:
            a, b = np.minimum(c[:, i], c[:, j]), np.maximum(c[:, i], c[:, j])
            cols.append(np.array([eid[(x, y)] for x, y in zip(a.tolist(), b.tolist())]))
        cell_dofs = np.column_stack(cols)
        coords = np.concatenate([mesh.vertices, mesh.vertices[edges].mean(axis=1)])
        is_val = np.ones(len(coords), bool)
        bedges = [eid[tuple(sorted(f.vertices))] for f in mesh.boundary_facets]
        bvals = np.union1d(bverts, bedges)
    else:
        # values 0..nv-1 then derivatives nv..2nv-1
        cell_dofs = np.column_stack([mesh.cells, nv + mesh.cells])
        coords = np.concatenate([mesh.vertices, mesh.vertices])
        is_val = np.concatenate([np.ones(nv, bool), np.zeros(nv, bool)])
        bvals = bverts
        deriv = nv + bverts
    for a in (cell_dofs, coords, is_val):
        a.setflags(write=False)
    return DofSpace(mesh, p, scheme, len(coords), cell_dofs, coords, is_val,
                    np.asarray(bvals, dtype=np.int64), np.asarray(deriv, dtype=np.int64))


# ---------------------------------------------------------------- tabulation

def _cell_geometry(mesh: Mesh, cells: np.ndarray):
    """Per-cell (gradients of barycentric coordinates, measure)."""
    x = mesh.vertices[mesh.cells[cells]]
    if mesh.dim == 1:
        h = x[:, 1, 0] - x[:, 0, 0]
        return h, h
    jac = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=2)
    inv = np.linalg.inv(jac)
    g12 = inv
    g0 = -inv.sum(axis=1, keepdims=True)
    grads = np.concatenate([g0, g12], axis=1)
    area = 0.5 * np.abs(np.linalg.det(jac))
    return grads, area


def tabulate(space: DofSpace, cells: np.ndarray, ref: np.ndarray):
    """Scalar basis jets at points given in cell reference coordinates.

    1D: ``ref`` has shape (m,) with s in [0, 1].  2D: barycentric (m, 3).
    Returns values (m, nloc), gradients (m, nloc, dim) and positive
    Laplacians (m, nloc).
    """
    cells = np.asarray(cells, dtype=np.int64)
    m = len(cells)
    geo, _ = _cell_geometry(space.mesh, cells)
    if space.dim == 1:
        h = geo
        s = np.asarray(ref, dtype=float).reshape(m)
        one = np.ones_like(s)
        if space.scheme == "P1":
            phi = np.stack([1 - s, s], 1)
            dphi = np.stack([-one, one], 1) / h[:, None]
            d2 = np.zeros_like(phi)
        elif space.scheme == "P2":
            phi = np.stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)], 1)
            dphi = np.stack([4 * s - 3, 4 * s - 1, 4 - 8 * s], 1) / h[:, None]
            d2 = np.stack([4 * one, 4 * one, -8 * one], 1) / h[:, None] ** 2
        else:
            phi = np.stack([1 - 3 * s**2 + 2 * s**3, 3 * s**2 - 2 * s**3,
                            h * (s - 2 * s**2 + s**3), h * (-s**2 + s**3)], 1)
            dphi = np.stack([(-6 * s + 6 * s**2) / h, (6 * s - 6 * s**2) / h,
                             1 - 4 * s + 3 * s**2, -2 * s + 3 * s**2], 1)
            d2 = np.stack([(-6 + 12 * s) / h**2, (6 - 12 * s) / h**2,
                           (-4 + 6 * s) / h, (-2 + 6 * s) / h], 1)
        return phi, dphi[:, :, None], -d2
    lam = np.asarray(ref, dtype=float).reshape(m, 3)
    g = geo  # (m, 3, 2)
    if space.scheme == "P1":
        return lam, g.copy(), np.zeros((m, 3))
    gg = np.einsum("mid,mjd->mij", g, g)
    vals, grads, laps = [], [], []
    for i in range(3):
        vals.append(lam[:, i] * (2 * lam[:, i] - 1))
        grads.append((4 * lam[:, i] - 1)[:, None] * g[:, i])
        laps.append(-4 * gg[:, i, i])
    for i, j in ((1, 2), (0, 2), (0, 1)):
        vals.append(4 * lam[:, i] * lam[:, j])
        grads.append(4 * (lam[:, j, None] * g[:, i] + lam[:, i, None] * g[:, j]))
        laps.append(-8 * gg[:, i, j])
    return np.stack(vals, 1), np.stack(grads, 1), np.stack(laps, 1)


def _gauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1), 0.5 * w


def _cell_rule(dim: int, degree: int):
    """Reference points and weights exact for polynomials of ``2*degree``."""
    if dim == 1:
        return _gauss(degree + 1)
    # collapsed tensor Gauss rule on the triangle
    x, w = _gauss(degree + 2)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    l1 = u.ravel()
    l2 = (v * (1 - u)).ravel()
    wt = (wu * wv * (1 - u)).ravel()
    return np.column_stack([1 - l1 - l2, l1, l2]), wt


def _scatter(space: DofSpace, rows_dofs, cols_dofs, vals, shape=None) -> sp.csr_matrix:
    n = shape or (space.n_scalar, space.n_scalar)
    r = np.broadcast_to(rows_dofs, vals.shape).ravel()
    c = np.broadcast_to(cols_dofs, vals.shape).ravel()
    return sp.coo_matrix((vals.ravel(), (r, c)), shape=n).tocsr()


def _cell_points(space: DofSpace):
    ref, w = _cell_rule(space.dim, space.degree)
    nc, nq = space.mesh.n_cells, len(w)
    cells = np.repeat(np.arange(nc), nq)
    refs = np.tile(ref, (nc, 1)) if space.dim == 2 else np.tile(ref, nc)
    _, meas = _cell_geometry(space.mesh, np.arange(nc))
    jac = meas * (2.0 if space.dim == 2 else 1.0)
    wq = (jac[:, None] * w[None, :])
    phi, dphi, lap = tabulate(space, cells, refs)
    nloc = phi.shape[1]
    return (wq, phi.reshape(nc, nq, nloc), dphi.reshape(nc, nq, nloc, space.dim),
            lap.reshape(nc, nq, nloc))


def _scalar_matrices(space: DofSpace):
    wq, phi, dphi, lap = _cell_points(space)
    cd = space.cell_dofs
    R, Cc = cd[:, :, None], cd[:, None, :]
    mass = _scatter(space, R, Cc, np.einsum("cq,cqa,cqb->cab", wq, phi, phi))
    D = [[_scatter(space, R, Cc, np.einsum("cq,cqa,cqb->cab", wq, dphi[..., j], dphi[..., k]))
          for k in range(space.dim)] for j in range(space.dim)]
    bih = _scatter(space, R, Cc, np.einsum("cq,cqa,cqb->cab", wq, lap, lap))
    return mass, D, bih


def _interior_facet_points(space: DofSpace):
    """Quadrature on interior facets with jets from both neighbours."""
    mesh = space.mesh
    facets = mesh.interior_facets()
    if not facets:
        return None
    if space.dim == 1:
        pts = []
        for (v,), c1, c2 in facets:
            s1 = 0.0 if mesh.cells[c1, 0] == v else 1.0
            s2 = 0.0 if mesh.cells[c2, 0] == v else 1.0
            pts.append((c1, s1, c2, s2))
        c1, s1, c2, s2 = (np.array(x) for x in zip(*pts))
        x = mesh.vertices[mesh.cells][:, :, 0]
        n1 = np.where(s1 == 1.0, 1.0, -1.0)[:, None]
        h = 0.5 * ((x[c1, 1] - x[c1, 0]) + (x[c2, 1] - x[c2, 0]))
        w = np.ones(len(c1))
        return c1, s1, c2, s2, n1, -n1, w, h
    t, wt = _gauss(space.degree + 1)
    C1, R1, C2, R2, N1, W, H = [], [], [], [], [], [], []
    for (a, b), c1, c2 in facets:
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.linalg.norm(pb - pa))
        nrm = np.array([pb[1] - pa[1], pa[0] - pb[0]]) / length
        cell1 = mesh.cells[c1].tolist()
        opp = [v for v in cell1 if v not in (a, b)][0]
        if np.dot(mesh.vertices[opp] - pa, nrm) > 0:
            nrm = -nrm
        for c, store in ((c1, R1), (c2, R2)):
            cl = mesh.cells[c].tolist()
            lam = np.zeros((len(t), 3))
            lam[:, cl.index(a)] = 1 - t
            lam[:, cl.index(b)] = t
            store.append(lam)
        C1 += [c1] * len(t)
        C2 += [c2] * len(t)
        N1 += [nrm] * len(t)
        W += list(wt * length)
        H += [length] * len(t)
    return (np.array(C1), np.concatenate(R1), np.array(C2), np.concatenate(R2),
            np.array(N1), -np.array(N1), np.array(W), np.array(H))


def _ipg_matrix(space: DofSpace, penalty: float) -> sp.csr_matrix:
    """Interior-facet terms of the C0 interior penalty biharmonic form."""
    data = _interior_facet_points(space)
    n = space.n_scalar
    if data is None:
        return sp.csr_matrix((n, n))
    c1, r1, c2, r2, n1, n2, w, h = data
    _, g1, l1 = tabulate(space, c1, r1)
    _, g2, l2 = tabulate(space, c2, r2)
    jump = np.concatenate([np.einsum("qad,qd->qa", g1, n1), np.einsum("qad,qd->qa", g2, n2)], 1)
    avg = 0.5 * np.concatenate([l1, l2], 1)
    dofs = np.concatenate([space.cell_dofs[c1], space.cell_dofs[c2]], 1)
    sigma = penalty * space.degree**2 / h
    loc = (np.einsum("qa,qb->qab", avg, jump) + np.einsum("qa,qb->qab", jump, avg)
           + sigma[:, None, None] * np.einsum("qa,qb->qab", jump, jump))
    loc *= w[:, None, None]
    return _scatter(space, dofs[:, :, None], dofs[:, None, :], loc)


# ---------------------------------------------------------------- boundary

@dataclass(frozen=True, eq=False)
class BoundaryPoints:
    cells: np.ndarray
    ref: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    facet: np.ndarray
    coords: np.ndarray


def _facet_ref(mesh: Mesh, f, t: np.ndarray) -> np.ndarray:
    cl = mesh.cells[f.cell].tolist()
    if mesh.dim == 1:
        return np.full(len(t), float(cl.index(f.vertices[0])))
    a, b = f.vertices
    lam = np.zeros((len(t), 3))
    lam[:, cl.index(a)] = 1 - t
    lam[:, cl.index(b)] = t
    return lam


def boundary_points(space: DofSpace, kind: str = "quadrature") -> BoundaryPoints:
    """Facet quadrature points, or constraint points (``kind='constraint'``).

    Constraint points determine a facet's derivative traces exactly: both
    endpoints for P2 (linear gradients) and the midpoint for P1.
    """
    mesh = space.mesh
    if mesh.dim == 1:
        t, wt = np.zeros(1), np.ones(1)
    elif kind == "quadrature":
        t, wt = _gauss(space.degree + 1)
    elif space.scheme == "P1":
        t, wt = np.array([0.5]), np.ones(1)
    else:
        t, wt = np.array([0.0, 1.0]), np.ones(2)
    cells, refs, nus, ws, fid, xs = [], [], [], [], [], []
    for k, f in enumerate(mesh.boundary_facets):
        cells += [f.cell] * len(t)
        refs.append(_facet_ref(mesh, f, t))
        nus += [f.normal] * len(t)
        ws += list(wt * f.measure)
        fid += [k] * len(t)
        pv = mesh.vertices[list(f.vertices)]
        xs.append(pv[0] if mesh.dim == 1 else (1 - t)[:, None] * pv[0] + t[:, None] * pv[1])
    ref = np.concatenate(refs)
    return BoundaryPoints(np.array(cells), ref, np.array(nus, dtype=float), np.array(ws),
                          np.array(fid), np.vstack(xs).reshape(-1, mesh.dim))


def _trace_coefficients(which: str, nu: np.ndarray, n: int, p: int):
    """(value, gradient-by-direction, laplacian) coefficient tensors."""
    C = ext.rank(n, p)
    if which == "full":
        return np.eye(C), None, None
    if which == "tan":
        return ext.tangential_projector(nu, n, p), None, None
    if which == "nor":
        return ext.interior(nu, n, p), None, None
    if which == "ndtan":
        inn = ext.interior(nu, n, p + 1)
        return None, np.stack([inn @ ext.wedge_unit(j, n, p) for j in range(n)]), None
    if which == "tdel":
        proj = ext.tangential_projector(nu, n, p - 1)
        return None, np.stack([-proj @ ext.interior_unit(j, n, p) for j in range(n)]), None
    if which == "nlap":
        return None, None, ext.interior(nu, n, p)
    raise DiscretizationError(f"unknown trace {which!r}")


def target_rank(which: str, n: int, p: int) -> int:
    return {"full": ext.rank(n, p), "tan": ext.rank(n, p), "nor": ext.rank(n, p - 1),
            "ndtan": ext.rank(n, p), "tdel": ext.rank(n, p - 1), "nlap": ext.rank(n, p - 1)}[which]


def trace_matrix(space: DofSpace, which: str, pts: BoundaryPoints) -> sp.csr_matrix:
    """Matrix mapping coefficients to trace components at boundary points.

    Rows are ordered point-major, then target component.
    """
    n, p, N = space.dim, space.p, space.n_scalar
    T = target_rank(which, n, p)
    m = len(pts.cells)
    if T == 0:
        return sp.csr_matrix((0, space.n_dofs))
    phi, dphi, lap = tabulate(space, pts.cells, pts.ref)
    nloc = phi.shape[1]
    C = space.n_components
    ent = np.zeros((m, T, C, nloc))
    for q in range(m):
        cv, cg, cl = _trace_coefficients(which, pts.normals[q], n, p)
        if cv is not None:
            ent[q] += cv[:, :, None] * phi[q][None, None, :]
        if cg is not None:
            ent[q] += np.einsum("jtc,aj->tca", cg, dphi[q])
        if cl is not None:
            ent[q] += cl[:, :, None] * lap[q][None, None, :]
    rows = (np.arange(m)[:, None, None, None] * T + np.arange(T)[None, :, None, None])
    cols = (np.arange(C)[None, None, :, None] * N + space.cell_dofs[pts.cells][:, None, None, :])
    out = _scatter(space, rows, cols, ent, shape=(m * T, space.n_dofs))
    out.eliminate_zeros()
    return out


def _circle_radius(mesh: Mesh, x: np.ndarray) -> float | None:
    """Radius of the boundary circle through ``x``, if any."""
    r = float(np.linalg.norm(x))
    for R in mesh.circles:
        if abs(r - R) <= 1e-9 * R:
            return R
    return None


def _radial_normal(x: np.ndarray, like: np.ndarray) -> np.ndarray:
    u = x / np.linalg.norm(x)
    return u if np.dot(u, like) > 0 else -u


def _boundary_edge_dofs(space: DofSpace) -> dict[int, int]:
    """Boundary facet index to its P2 midpoint dof (empty for other schemes)."""
    if space.scheme != "P2" or space.dim != 2:
        return {}
    mesh = space.mesh
    out = {}
    for k, f in enumerate(mesh.boundary_facets):
        cl = mesh.cells[f.cell].tolist()
        opp = [i for i in range(3) if cl[i] not in f.vertices][0]
        out[k] = int(space.cell_dofs[f.cell, 3 + opp])
    return out


def _vertex_normal(mesh: Mesh, v: int, nus: list[np.ndarray]) -> np.ndarray | None:
    """Normal at a smooth boundary vertex, or None at a corner.

    Vertices on a boundary circle get the exact radial normal; elsewhere
    the adjacent facet normals are averaged if they turn by less than
    45 degrees.
    """
    x = mesh.vertices[v]
    avg = np.sum(nus, axis=0)
    if _circle_radius(mesh, x) is not None:
        return _radial_normal(x, avg)
    ang = max(np.arccos(np.clip(np.dot(a, b), -1, 1)) for a in nus for b in nus)
    if ang < _CORNER_ANGLE:
        return avg / np.linalg.norm(avg)
    return None


def _node_normals(space: DofSpace) -> dict[int, list[np.ndarray]]:
    """Normals used for nodal constraints at each boundary value dof.

    Smooth vertices get a single normal (see ``_vertex_normal``); corners
    keep each facet normal separately.  Edge midpoints use the facet normal.
    """
    mesh = space.mesh
    adj: dict[int, list[np.ndarray]] = {}
    for f in mesh.boundary_facets:
        for v in f.vertices:
            adj.setdefault(int(v), []).append(np.asarray(f.normal))
    out = {}
    for v, nus in adj.items():
        nv = _vertex_normal(mesh, v, nus)
        out[v] = list(nus) if nv is None else [nv]
    for k, dof in _boundary_edge_dofs(space).items():
        out[dof] = [np.asarray(mesh.boundary_facets[k].normal)]
    return out


def _arc_rows(space: DofSpace) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Midpoint dof to (cell dofs, basis values) at its projection onto the arc.

    On a boundary circle the chord midpoint lies off the true boundary;
    the owning cell's polynomial is evaluated (or extended) at the arc
    point instead.
    """
    mesh = space.mesh
    out = {}
    for k, dof in _boundary_edge_dofs(space).items():
        f = mesh.boundary_facets[k]
        a, b = (mesh.vertices[v] for v in f.vertices)
        R = _circle_radius(mesh, a)
        if R is None or _circle_radius(mesh, b) is None:
            continue
        mid = 0.5 * (a + b)
        x = R * mid / np.linalg.norm(mid)
        P = mesh.vertices[mesh.cells[f.cell]]
        T = np.vstack([P.T, np.ones(3)])
        lam = np.linalg.solve(T, np.append(x, 1.0))
        phi, _, _ = tabulate(space, np.array([f.cell]), lam[None, :])
        out[dof] = (space.cell_dofs[f.cell], phi[0])
    return out


def _smoothed_constraint_points(space: DofSpace) -> BoundaryPoints:
    """Constraint points whose normal at a smooth boundary vertex is the node normal.

    Both cells meeting at a polygon vertex then constrain the same
    direction, which avoids locking on polygonal approximations of
    curved boundaries.
    """
    pts = boundary_points(space, "constraint")
    mesh = space.mesh
    if mesh.dim == 1 or space.scheme == "P1":
        return pts
    normals = _node_normals(space)
    nus = pts.normals.copy()
    for i, k in enumerate(pts.facet.tolist()):
        f = mesh.boundary_facets[k]
        d = np.linalg.norm(mesh.vertices[list(f.vertices)] - pts.coords[i], axis=1)
        v = int(f.vertices[int(np.argmin(d))])
        if len(normals[v]) == 1:
            nus[i] = normals[v][0]
    return replace(pts, normals=nus)


def constraint_matrix(space: DofSpace, which: str) -> sp.csr_matrix:
    """Essential-condition rows ``C x = 0`` for one boundary condition.

    ``full`` and ``nor`` are imposed at boundary nodes (edge midpoints on a
    circle are moved to the arc); the derivative conditions ``ndtan`` and
    ``tdel`` at facet constraint points using one-sided gradients of the
    owning cell.
    """
    n, p, N = space.dim, space.p, space.n_scalar
    if which in ("ndtan", "tdel"):
        return trace_matrix(space, which, _smoothed_constraint_points(space))
    if which not in ("full", "nor"):
        raise DiscretizationError(f"no constraint {which!r}")
    T = target_rank(which, n, p)
    rows, cols, vals = [], [], []
    r = 0
    normals = _node_normals(space)
    arcs = _arc_rows(space)
    for dof in space.boundary_value_dofs.tolist():
        sdofs, w = arcs.get(dof, (np.array([dof]), np.ones(1)))
        for nu in normals[dof]:
            coef = np.eye(ext.rank(n, p)) if which == "full" else ext.interior(nu, n, p)
            for t in range(T):
                for c in range(space.n_components):
                    if coef[t, c] != 0:
                        rows += [r + t] * len(sdofs)
                        cols += (c * N + sdofs).tolist()
                        vals += (coef[t, c] * w).tolist()
            r += T
            if which == "full":
                break
    C = sp.csr_matrix((vals, (rows, cols)), shape=(r, space.n_dofs))
    C.eliminate_zeros()
    return C


# ---------------------------------------------------------------- operators

@dataclass(frozen=True, eq=False)
class OperatorSet:
    space: DofSpace
    penalty: float
    M: sp.csr_matrix
    K_hodge: sp.csr_matrix
    A_bih: sp.csr_matrix | None
    traces: dict[str, sp.csr_matrix]
    points: BoundaryPoints
    boundary_mass: dict[str, sp.csr_matrix] = field(default_factory=dict)

    def boundary_form(self, which: str) -> sp.csr_matrix:
        """Gram matrix of the boundary L² norm of a trace."""
        T = self.traces[which]
        return (T.T @ self.boundary_mass[which] @ T).tocsr()

    @cached_property
    def scalar_stiffness(self) -> sp.csr_matrix:
        _, D, _ = _scalar_matrices(self.space)
        return sum(D[j][j] for j in range(self.space.dim)).tocsr()


def assemble_operators(space: DofSpace, penalty: float = DEFAULT_PENALTY) -> OperatorSet:
    if not penalty > 0:
        raise DiscretizationError(f"penalty must be positive, got {penalty}")
    n, p = space.dim, space.p
    C = space.n_components
    mass, D, bih = _scalar_matrices(space)
    M = sp.kron(sp.identity(C), mass, format="csr")
    K = sp.csr_matrix((space.n_dofs, space.n_dofs))
    for j in range(n):
        for k in range(n):
            coef = (ext.wedge_unit(j, n, p).T @ ext.wedge_unit(k, n, p)
                    + ext.interior_unit(j, n, p).T @ ext.interior_unit(k, n, p))
            if np.any(coef):
                K = K + sp.kron(sp.csr_matrix(coef.astype(float)), D[j][k], format="csr")
    A = None
    if space.scheme == "Hermite3":
        A = sp.kron(sp.identity(C), bih, format="csr")
    elif space.scheme == "P2":
        A = sp.kron(sp.identity(C), bih + _ipg_matrix(space, penalty), format="csr")
    pts = boundary_points(space)
    traces, bmass = {}, {}
    for which in ("full",) + TRACES:
        traces[which] = trace_matrix(space, which, pts)
        T = target_rank(which, n, p)
        bmass[which] = sp.kron(sp.diags(pts.weights), sp.identity(T), format="csr")
    return OperatorSet(space, float(penalty), _sym(M), _sym(K), None if A is None else _sym(A),
                       traces, pts, bmass)


def _sym(a: sp.spmatrix) -> sp.csr_matrix:
    a = sp.csr_matrix(a)
    out = (0.5 * (a + a.T)).tocsr()
    out.eliminate_zeros()
    return out


def trace_defined(which: str, p: int, dim: int) -> bool:
    if which in ("nor", "tdel", "nlap"):
        return p >= 1
    if which == "ndtan":
        return p < dim
    return True


def trace_apply(ops: OperatorSet, which: str, x: np.ndarray) -> np.ndarray:
    """Trace values at boundary quadrature points, shape (points, components)."""
    key = _TRACE_ALIASES.get(which)
    if key is None:
        raise DiscretizationError(f"unknown trace {which!r}")
    sp_ = ops.space
    if not trace_defined(key, sp_.p, sp_.dim):
        raise DiscretizationError(f"trace {which!r} vanishes identically for p={sp_.p}")
    T = target_rank(key, sp_.dim, sp_.p)
    return (ops.traces[key] @ np.asarray(x, dtype=float)).reshape(-1, T)


def laplacian_pairing(space: DofSpace) -> sp.csr_matrix:
    """Matrix of Σ_K ∫_K ⟨Δω, ω'⟩ with the broken (cellwise) Laplacian."""
    wq, phi, _, lap = _cell_points(space)
    cd = space.cell_dofs
    loc = np.einsum("cq,cqa,cqb->cab", wq, phi, lap)
    S = _scatter(space, cd[:, :, None], cd[:, None, :], loc)
    return sp.kron(sp.identity(space.n_components), S, format="csr")


def export_matrix_market(matrix: sp.spmatrix) -> str:
    """MatrixMarket text of a sparse matrix, for debugging."""
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, sp.coo_matrix(matrix))
    return buf.getvalue().decode()
