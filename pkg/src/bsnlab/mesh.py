"""Simplicial meshes of flat 1D/2D domains with inward boundary geometry.

Named domains are the interval, the unit square, the disk and the annulus.
Disk and annulus meshes are built from structured polar rings so that every
boundary vertex lies exactly on its circle; refinement projects new boundary
vertices back onto the circle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

_GEOM_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid domain parameters or malformed meshes."""


@dataclass(frozen=True)
class BoundaryFacet:
    """One boundary facet: a vertex in 1D, an edge in 2D."""

    vertices: tuple[int, ...]
    cell: int
    normal: tuple[float, ...]
    tangent: tuple[float, ...] | None
    measure: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "vertices": list(self.vertices),
            "cell": self.cell,
            "normal": list(self.normal),
            "tangent": None if self.tangent is None else list(self.tangent),
            "measure": self.measure,
        }


@dataclass(frozen=True)
class DomainName:
    """A named domain with its geometric parameters.

    ``kind`` is one of ``interval``, ``unit_square``, ``unit_disk`` or
    ``annulus``.  ``params`` holds ``(a, b)``, ``()``, ``(radius,)`` or
    ``(r_in, r_out)`` respectively.
    """

    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        k, prm = self.kind, self.params
        if k == "interval":
            if len(prm) != 2 or not prm[0] < prm[1]:
                raise MeshError(f"interval needs a < b, got {prm}")
        elif k == "unit_square":
            if prm:
                raise MeshError("unit_square takes no parameters")
        elif k == "unit_disk":
            if len(prm) != 1 or not prm[0] > 0:
                raise MeshError(f"disk needs a positive radius, got {prm}")
        elif k == "annulus":
            if len(prm) != 2 or not 0 < prm[0] < prm[1]:
                raise MeshError(f"annulus needs 0 < r_in < r_out, got {prm}")
        else:
            raise MeshError(f"unknown domain kind {k!r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def circles(self) -> tuple[float, ...]:
        if self.kind == "unit_disk":
            return (self.params[0],)
        if self.kind == "annulus":
            return tuple(self.params)
        return ()

    def label(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}:" + ",".join(f"{x:g}" for x in self.params)

    @staticmethod
    def interval(a: float = 0.0, b: float = 1.0) -> "DomainName":
        return DomainName("interval", (float(a), float(b)))

    @staticmethod
    def unit_square() -> "DomainName":
        return DomainName("unit_square")

    @staticmethod
    def unit_disk(radius: float = 1.0) -> "DomainName":
        return DomainName("unit_disk", (float(radius),))

    @staticmethod
    def annulus(r_in: float = 0.5, r_out: float = 1.0) -> "DomainName":
        return DomainName("annulus", (float(r_in), float(r_out)))


@dataclass(frozen=True)
class Mesh:
    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: tuple[BoundaryFacet, ...]
    circles: tuple[float, ...] = ()
    label: str = "mesh"
    level: int = 0
    _interior: tuple = field(default=(), repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def h(self) -> float:
        """Largest cell diameter."""
        if self.dim == 1:
            return float(np.max(np.abs(np.diff(self.vertices[self.cells, 0], axis=1))))
        p = self.vertices[self.cells]
        lens = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (0, 2))]
        return float(np.max(lens))

    def edges(self) -> np.ndarray:
        """Sorted unique edges (2D only), shape (E, 2)."""
        if self.dim != 2:
            raise MeshError("edges are defined for 2D meshes")
        return _unique_edges(self.cells)

    def interior_facets(self) -> list[tuple[tuple[int, ...], int, int]]:
        """Interior facets as (vertices, cell_a, cell_b)."""
        return _facet_table(self.dim, self.cells)[1]

    def euler_characteristic(self) -> int:
        if self.dim == 1:
            return self.n_vertices - self.n_cells
        return self.n_vertices - len(self.edges()) + self.n_cells

    def boundary_measure(self) -> float:
        return float(sum(f.measure for f in self.boundary_facets))

    def volume(self) -> float:
        return float(np.sum(_signed_volumes(self.vertices, self.cells)))

    def to_json(self) -> str:
        doc = {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
            "boundary_facets": [f.as_dict() for f in self.boundary_facets],
            "circles": list(self.circles),
            "label": self.label,
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "Mesh":
        doc = json.loads(text)
        for key in ("dim", "vertices", "cells", "boundary_facets"):
            if key not in doc:
                raise MeshError(f"missing field {key!r}")
        dim = int(doc["dim"])
        verts = np.asarray(doc["vertices"], dtype=float).reshape(-1, dim)
        cells = np.asarray(doc["cells"], dtype=np.int64).reshape(-1, dim + 1)
        facets = tuple(
            BoundaryFacet(
                vertices=tuple(int(v) for v in f["vertices"]),
                cell=int(f["cell"]),
                normal=tuple(float(x) for x in f["normal"]),
                tangent=None if f.get("tangent") is None else tuple(float(x) for x in f["tangent"]),
                measure=float(f["measure"]),
            )
            for f in doc["boundary_facets"]
        )
        mesh = Mesh(dim, _frozen(verts), _frozen(cells), facets,
                    tuple(doc.get("circles", ())), doc.get("label", "mesh"))
        validate(mesh)
        return mesh

    def permuted(self, perm: Sequence[int]) -> "Mesh":
        """Relabel vertices: new index of old vertex i is perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n_vertices)):
            raise MeshError("perm must be a permutation of the vertex indices")
        verts = np.empty_like(self.vertices)
        verts[perm] = self.vertices
        return _finalize(self.dim, verts, perm[self.cells], self.circles, self.label, self.level)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _signed_volumes(verts: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = verts[cells]
    if verts.shape[1] == 1:
        return p[:, 1, 0] - p[:, 0, 0]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _unique_edges(cells: np.ndarray) -> np.ndarray:
    e = np.concatenate([cells[:, [1, 2]], cells[:, [0, 2]], cells[:, [0, 1]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _facet_table(dim: int, cells: np.ndarray):
    """Map facets to owning cells; returns (boundary, interior) lists."""
    owners: dict[tuple[int, ...], list[int]] = {}
    for c, cell in enumerate(cells.tolist()):
        if dim == 1:
            facets = [(cell[0],), (cell[1],)]
        else:
            facets = [tuple(sorted((cell[i], cell[j]))) for i, j in ((1, 2), (0, 2), (0, 1))]
        for f in facets:
            owners.setdefault(f, []).append(c)
    boundary, interior = [], []
    for f, cs in owners.items():
        if len(cs) == 1:
            boundary.append((f, cs[0]))
        elif len(cs) == 2:
            interior.append((f, cs[0], cs[1]))
        else:
            raise MeshError(f"facet {f} shared by {len(cs)} cells")
    boundary.sort()
    interior.sort()
    return boundary, interior


def _boundary_facets(dim: int, verts: np.ndarray, cells: np.ndarray) -> tuple[BoundaryFacet, ...]:
    boundary, _ = _facet_table(dim, cells)
    out = []
    for f, c in boundary:
        cell = cells[c].tolist()
        opp = [v for v in cell if v not in f][0]
        if dim == 1:
            nu = 1.0 if verts[opp, 0] > verts[f[0], 0] else -1.0
            out.append(BoundaryFacet(f, c, (nu,), None, 1.0))
            continue
        a, b = verts[f[0]], verts[f[1]]
        t = b - a
        length = float(np.hypot(*t))
        if length <= _GEOM_TOL:
            raise MeshError(f"degenerate boundary facet {f}")
        nu = np.array([-t[1], t[0]]) / length
        if np.dot(verts[opp] - a, nu) < 0:
            nu = -nu
        tau = (float(nu[1]), float(-nu[0]))
        out.append(BoundaryFacet(f, c, (float(nu[0]), float(nu[1])), tau, length))
    return tuple(out)


def _finalize(dim, verts, cells, circles=(), label="mesh", level=0) -> Mesh:
    verts = np.asarray(verts, dtype=float).reshape(-1, dim)
    cells = np.asarray(cells, dtype=np.int64).copy()
    vol = _signed_volumes(verts, cells)
    flip = vol < 0
    if dim == 1:
        cells[flip] = cells[flip][:, ::-1]
    else:
        cells[flip] = cells[flip][:, [0, 2, 1]]
    facets = _boundary_facets(dim, verts, cells)
    mesh = Mesh(dim, _frozen(verts), _frozen(cells), facets, tuple(circles), label, level)
    validate(mesh)
    return mesh


def validate(mesh: Mesh) -> None:
    """Check every structural invariant; raise MeshError on failure."""
    dim = mesh.dim
    if dim not in (1, 2):
        raise MeshError("dim must be 1 or 2")
    if mesh.cells.min(initial=0) < 0 or mesh.cells.max(initial=0) >= mesh.n_vertices:
        raise MeshError("cell references a missing vertex")
    if np.any(_signed_volumes(mesh.vertices, mesh.cells) <= _GEOM_TOL):
        raise MeshError("cells must have positive signed volume")
    boundary, _ = _facet_table(dim, mesh.cells)
    expected = {f: c for f, c in boundary}
    got = {tuple(sorted(f.vertices)): f for f in mesh.boundary_facets}
    if set(expected) != set(got) or len(got) != len(mesh.boundary_facets):
        raise MeshError("boundary facet list does not match cell topology")
    for key, f in got.items():
        if f.cell != expected[key]:
            raise MeshError(f"facet {key} has wrong owning cell")
        nu = np.asarray(f.normal)
        if abs(np.linalg.norm(nu) - 1) > 1e-10:
            raise MeshError(f"normal of facet {key} is not unit")
        opp = [v for v in mesh.cells[f.cell] if v not in f.vertices][0]
        if np.dot(mesh.vertices[opp] - mesh.vertices[f.vertices[0]], nu) <= 0:
            raise MeshError(f"normal of facet {key} is not inward")
        if dim == 2:
            t = np.asarray(f.tangent)
            if abs(np.linalg.norm(t) - 1) > 1e-10 or abs(np.dot(t, nu)) > 1e-10:
                raise MeshError(f"tangent of facet {key} is invalid")
            if t[0] * nu[1] - t[1] * nu[0] < 0:
                raise MeshError(f"(tau, nu) of facet {key} is not right-handed")
            length = np.linalg.norm(mesh.vertices[f.vertices[1]] - mesh.vertices[f.vertices[0]])
            if abs(length - f.measure) > 1e-10 * max(1.0, length) or f.measure <= _GEOM_TOL:
                raise MeshError(f"measure of facet {key} is wrong")


def boundary_geometry(mesh: Mesh) -> list[dict[str, Any]]:
    """Per-facet inward normal, tangent and measure."""
    out = []
    for f in mesh.boundary_facets:
        if f.measure <= _GEOM_TOL:
            raise MeshError(f"degenerate facet {f.vertices}")
        out.append({"normal": np.asarray(f.normal), "tangent": None if f.tangent is None
                    else np.asarray(f.tangent), "measure": f.measure})
    return out


def _ring_counts(radii: Sequence[float], h: float) -> list[int]:
    return [max(6, 6 * int(round(r / h))) for r in radii]


def _zip_rings(inner: list[int], outer: list[int], verts: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the strip between two closed rings by angular merging."""

    def angles(ring):
        p = verts[ring]
        return np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * math.pi)

    ai, ao = angles(inner), angles(outer)
    ni, no = len(inner), len(outer)
    tris = []
    i = j = 0
    while i < ni or j < no:
        # unwrapped angle of the next vertex on each ring
        next_i = ai[(i + 1) % ni] + (2 * math.pi if i + 1 >= ni else 0.0)
        next_o = ao[(j + 1) % no] + (2 * math.pi if j + 1 >= no else 0.0)
        if j >= no or (i < ni and next_i <= next_o):
            tris.append((inner[i % ni], inner[(i + 1) % ni], outer[j % no]))
            i += 1
        else:
            tris.append((inner[i % ni], outer[(j + 1) % no], outer[j % no]))
            j += 1
    return tris


def _polar_mesh(radii: Sequence[float], with_center: bool, h: float):
    verts: list[tuple[float, float]] = []
    rings = []
    if with_center:
        verts.append((0.0, 0.0))
    counts = _ring_counts(radii, h)
    for k, (r, m) in enumerate(zip(radii, counts)):
        shift = 0.5 * (k % 2) * 2 * math.pi / m
        start = len(verts)
        for q in range(m):
            th = shift + 2 * math.pi * q / m
            verts.append((r * math.cos(th), r * math.sin(th)))
        rings.append(list(range(start, start + m)))
    v = np.asarray(verts)
    cells = []
    if with_center:
        ring = rings[0]
        cells += [(0, ring[q], ring[(q + 1) % len(ring)]) for q in range(len(ring))]
    for a, b in zip(rings[:-1], rings[1:]):
        cells += _zip_rings(a, b, v)
    return v, np.asarray(cells, dtype=np.int64)


def build_named_domain(name: DomainName, n: int) -> Mesh:
    """Build a mesh of a named domain at resolution ``n`` (n >= 1)."""
    if int(n) != n or n < 1:
        raise MeshError(f"resolution must be a positive integer, got {n}")
    n = int(n)
    kind = name.kind
    if kind == "interval":
        a, b = name.params
        verts = np.linspace(a, b, n + 1)[:, None]
        cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
        return _finalize(1, verts, cells, (), name.label())
    if kind == "unit_square":
        xs = np.linspace(0.0, 1.0, n + 1)
        X, Y = np.meshgrid(xs, xs, indexing="xy")
        verts = np.stack([X.ravel(), Y.ravel()], axis=1)
        idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
        cells = []
        for j in range(n):
            for i in range(n):
                v00, v10, v01, v11 = idx[j, i], idx[j, i + 1], idx[j + 1, i], idx[j + 1, i + 1]
                cells += [(v00, v10, v11), (v00, v11, v01)]
        return _finalize(2, verts, cells, (), name.label())
    if kind == "unit_disk":
        (radius,) = name.params
        h = radius / n
        radii = [radius * k / n for k in range(1, n + 1)]
        verts, cells = _polar_mesh(radii, True, h)
        return _finalize(2, verts, cells, name.circles, name.label())
    r_in, r_out = name.params
    h = (r_out - r_in) / n
    radii = [r_in + (r_out - r_in) * k / n for k in range(n + 1)]
    verts, cells = _polar_mesh(radii, False, h)
    return _finalize(2, verts, cells, name.circles, name.label())


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: split 1D cells in two and 2D cells in four."""
    if mesh.dim == 1:
        x = mesh.vertices[:, 0]
        mids = 0.5 * (x[mesh.cells[:, 0]] + x[mesh.cells[:, 1]])
        nv = mesh.n_vertices
        new = np.arange(nv, nv + mesh.n_cells)
        cells = np.concatenate([np.stack([mesh.cells[:, 0], new], 1),
                                np.stack([new, mesh.cells[:, 1]], 1)])
        verts = np.concatenate([x, mids])[:, None]
        return _finalize(1, verts, cells, (), mesh.label, mesh.level + 1)
    edges = mesh.edges()
    nv = mesh.n_vertices
    eid = {tuple(e): nv + k for k, e in enumerate(edges.tolist())}
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    for f in mesh.boundary_facets:
        k = eid[tuple(sorted(f.vertices))] - nv
        a, b = mesh.vertices[list(f.vertices)]
        for r in mesh.circles:
            if abs(np.linalg.norm(a) - r) < 1e-9 * r and abs(np.linalg.norm(b) - r) < 1e-9 * r:
                mids[k] *= r / np.linalg.norm(mids[k])
    verts = np.concatenate([mesh.vertices, mids])
    cells = []
    for v0, v1, v2 in mesh.cells.tolist():
        m01 = eid[(min(v0, v1), max(v0, v1))]
        m12 = eid[(min(v1, v2), max(v1, v2))]
        m02 = eid[(min(v0, v2), max(v0, v2))]
        cells += [(v0, m01, m02), (m01, v1, m12), (m02, m12, v2), (m01, m12, m02)]
    return _finalize(2, verts, cells, mesh.circles, mesh.label, mesh.level + 1)


def parse_domain(text: str) -> DomainName:
    """Parse ``interval:0,1``, ``square``, ``disk[:R]`` or ``annulus[:ri,ro]``."""
    head, _, tail = text.partition(":")
    head = head.strip().lower()
    try:
        nums = tuple(float(x) for x in tail.split(",")) if tail.strip() else ()
    except ValueError as exc:
        raise MeshError(f"bad domain parameters in {text!r}") from exc
    if head == "interval":
        return DomainName.interval(*(nums or (0.0, 1.0)))
    if head in ("square", "unit_square"):
        if nums:
            raise MeshError("square takes no parameters")
        return DomainName.unit_square()
    if head in ("disk", "unit_disk"):
        return DomainName.unit_disk(*(nums or (1.0,)))
    if head == "annulus":
        return DomainName.annulus(*(nums or (0.5, 1.0)))
    raise MeshError(f"unknown domain {text!r}")
