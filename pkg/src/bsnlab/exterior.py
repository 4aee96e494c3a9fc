"""Exterior algebra over an orthonormal frame, on sorted index subsets.

A p-form in n dimensions is a coefficient vector over ``basis(n, p)``.
Wedge and interior products with a frame covector are integer matrices;
products with a general covector are linear combinations of those.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def basis(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """Sorted p-subsets of range(n); empty for p < 0 or p > n."""
    if p < 0 or p > n:
        return ()
    return tuple(combinations(range(n), p))


def rank(n: int, p: int) -> int:
    return comb(n, p) if 0 <= p <= n else 0


@lru_cache(maxsize=None)
def _index(n: int, p: int) -> dict[tuple[int, ...], int]:
    return {s: k for k, s in enumerate(basis(n, p))}


@lru_cache(maxsize=None)
def wedge_unit(j: int, n: int, p: int) -> np.ndarray:
    """Matrix of e_j ∧ : Λ^p → Λ^{p+1}, integer entries."""
    out = np.zeros((rank(n, p + 1), rank(n, p)), dtype=np.int64)
    idx = _index(n, p + 1)
    for col, s in enumerate(basis(n, p)):
        if j in s:
            continue
        pos = sum(1 for i in s if i < j)
        out[idx[tuple(sorted(s + (j,)))], col] = (-1) ** pos
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def interior_unit(j: int, n: int, p: int) -> np.ndarray:
    """Matrix of e_j ⌟ : Λ^p → Λ^{p-1}, integer entries."""
    out = np.zeros((rank(n, p - 1), rank(n, p)), dtype=np.int64)
    idx = _index(n, p - 1)
    for col, s in enumerate(basis(n, p)):
        if j not in s:
            continue
        pos = s.index(j)
        out[idx[s[:pos] + s[pos + 1:]], col] = (-1) ** pos
    out.setflags(write=False)
    return out


def wedge(v, n: int, p: int) -> np.ndarray:
    """Matrix of v ∧ for a covector v with frame components."""
    v = np.asarray(v)
    out = np.zeros((rank(n, p + 1), rank(n, p)), dtype=np.result_type(v, float))
    for j in range(n):
        if v[j] != 0:
            out += v[j] * wedge_unit(j, n, p)
    return out


def interior(v, n: int, p: int) -> np.ndarray:
    """Matrix of v ⌟ for a vector v with frame components."""
    v = np.asarray(v)
    out = np.zeros((rank(n, p - 1), rank(n, p)), dtype=np.result_type(v, float))
    for j in range(n):
        if v[j] != 0:
            out += v[j] * interior_unit(j, n, p)
    return out


def tangential_projector(nu, n: int, p: int) -> np.ndarray:
    """Ambient matrix of ω ↦ ω − ν∧(ν⌟ω), the tangential part for unit ν."""
    return np.eye(rank(n, p)) - wedge(nu, n, p - 1) @ interior(nu, n, p)


def subset_rows(n: int, p: int, allowed: set[int]) -> np.ndarray:
    """Indices of basis(n, p) whose subsets avoid every index outside ``allowed``."""
    return np.array([k for k, s in enumerate(basis(n, p)) if set(s) <= allowed], dtype=np.int64)
