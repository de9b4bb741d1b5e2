"""Configurations of lattice particles, their distances and enumeration.

A configuration is an ordered tuple of ``n`` sites in ``Z^d``; internally it is
an ``(n, d)`` int64 array.  Inputs may be given as a flat sequence of ints
(``d = 1``) or as a sequence of coordinate sequences.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaincc, gamma

from . import kernels

__all__ = [
    "Region", "ConfigSetSpec", "ConfigurationCapError", "as_config", "as_site",
    "footprint", "diam", "splitting_width", "splitting_width_bruteforce",
    "dist_sets", "dist_hausdorff", "dist_sym", "dist_sym_bruteforce",
    "dist_ordered", "enumerate_configs", "config_array", "count_configs",
    "count_bounds_check", "slice_bound_sum", "hausdorff_sum",
]

DEFAULT_CAP = 2_000_000


class ConfigurationCapError(ValueError):
    """Raised when an enumeration would exceed the configured size cap."""

    def __init__(self, cardinality, cap):
        super().__init__(f"configuration set has {cardinality} elements, above cap {cap}")
        self.cardinality = cardinality
        self.cap = cap


def as_site(u, d: Optional[int] = None) -> np.ndarray:
    """Return a site as a length-``d`` int64 vector."""
    arr = np.atleast_1d(np.asarray(u, dtype=np.int64))
    if arr.ndim != 1:
        raise ValueError("a site must be a scalar or a 1-d coordinate vector")
    if d is not None and arr.size != d:
        raise ValueError(f"site {u!r} is not in dimension {d}")
    return arr


def as_config(c, d: Optional[int] = None) -> np.ndarray:
    """Normalize a configuration to an ``(n, d)`` int64 array.

    Examples
    --------
    >>> as_config((0, 3)).tolist()
    [[0], [3]]
    >>> as_config(((0, 0), (1, 2))).shape
    (2, 2)
    """
    arr = np.asarray(c, dtype=np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if (d is None or d == 1) else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"cannot interpret {c!r} as a configuration")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"configuration {c!r} is not in dimension {d}")
    return arr


def _to_tuple(c: np.ndarray) -> tuple:
    return tuple(tuple(int(v) for v in p) for p in c)


@dataclass(frozen=True, eq=False)
class Region:
    """Finite set of lattice sites, stored in lexicographic order.

    Use :meth:`box` for ``Lambda_L = [-L, L]^d`` (optionally shifted) and
    :meth:`explicit` for an arbitrary site list.
    """

    sites: np.ndarray = field(repr=False)
    kind: str = "explicit"
    radius: Optional[int] = None
    center: Optional[tuple] = None

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if s.size == 0:
            raise ValueError("region must be non-empty")
        s = np.unique(s, axis=0)  # lexicographic
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "_index", {tuple(int(v) for v in p): i for i, p in enumerate(s)})

    @classmethod
    def box(cls, L: int, d: int = 1, center=None) -> "Region":
        if L < 0 or d < 1:
            raise ValueError("box needs L >= 0 and d >= 1")
        c = np.zeros(d, dtype=np.int64) if center is None else as_site(center, d)
        axes = [np.arange(-L, L + 1) + c[j] for j in range(d)]
        pts = np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(-1, d)
        return cls(pts, kind="box", radius=int(L), center=tuple(int(v) for v in c))

    @classmethod
    def explicit(cls, sites) -> "Region":
        s = np.asarray(sites, dtype=np.int64)
        return cls(s.reshape(-1, 1) if s.ndim <= 1 else s)

    @property
    def d(self) -> int:
        return int(self.sites.shape[1])

    def __len__(self) -> int:
        return int(self.sites.shape[0])

    def __contains__(self, u) -> bool:
        return tuple(int(v) for v in as_site(u, self.d)) in self._index

    def index(self, u) -> int:
        """Position of site ``u`` in the lexicographic site order."""
        return self._index[tuple(int(v) for v in as_site(u, self.d))]

    def boundary(self) -> np.ndarray:
        """Sites at sup-norm distance exactly ``L`` from the box center."""
        if self.kind != "box":
            raise ValueError("boundary is defined for box regions only")
        off = np.abs(self.sites - np.asarray(self.center)).max(axis=1)
        return self.sites[off == self.radius]

    def to_json(self) -> dict:
        if self.kind == "box":
            return {"box": {"L": self.radius, "d": self.d, "center": list(self.center)}}
        return {"sites": self.sites.tolist()}


@dataclass(frozen=True)
class ConfigSetSpec:
    """Description of a configuration set ``C^(n)(Omega; S)`` or ``C_r^(n)(Omega)``."""

    region: Region
    n: int
    anchor: Optional[Sequence] = None
    max_diam: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.max_diam is not None and self.max_diam < 0:
            raise ValueError("max_diam must be >= 0")
        if self.anchor is not None:
            for u in np.asarray(self.anchor, dtype=np.int64).reshape(-1, self.region.d):
                if u not in self.region:
                    raise ValueError(f"anchor site {u.tolist()} lies outside the region")


def footprint(c) -> frozenset:
    """Set of occupied sites (duplicates collapsed), as coordinate tuples."""
    return frozenset(_to_tuple(as_config(c)))


def _pair_d2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def diam(c) -> float:
    """Largest Euclidean distance between two particles (0 for ``n = 1``)."""
    a = as_config(c)
    return math.sqrt(int(_pair_d2(a, a).max()))


def splitting_width(c) -> float:
    """Splitting width ``max_{J,K} dist(X_J, X_K)`` over bipartitions of the particles.

    Equal to the longest edge of a Euclidean minimum spanning tree of the
    footprint; 0 when ``n = 1`` or when all particles share a site.
    """
    a = as_config(c)
    return float(kernels.splitting_widths(a[None])[0])


def splitting_width_bruteforce(c) -> float:
    """Reference implementation enumerating all ``2**(n-1) - 1`` bipartitions."""
    a = as_config(c)
    n = a.shape[0]
    if n < 2:
        return 0.0
    if n > 16:
        raise ValueError("brute-force splitting width is limited to n <= 16")
    d2 = _pair_d2(a, a)
    best = 0
    for mask in range(1, 2 ** (n - 1)):
        J = [i for i in range(n) if (mask >> i) & 1]
        K = [i for i in range(n) if not (mask >> i) & 1]
        best = max(best, int(d2[np.ix_(J, K)].min()))
    return math.sqrt(best)


def dist_sets(a, b) -> float:
    """``min |u - v|`` over ``u`` in footprint ``a`` and ``v`` in footprint ``b``."""
    return math.sqrt(int(_pair_d2(as_config(a), as_config(b)).min()))


def dist_hausdorff(a, b) -> float:
    """Hausdorff distance between the footprints of two configurations."""
    A, B = as_config(a), as_config(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("configurations live in different dimensions")
    d2 = _pair_d2(A, B)
    return math.sqrt(int(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


def _check_same_shape(A, B):
    if A.shape != B.shape:
        raise ValueError(f"particle count/dimension mismatch: {A.shape} vs {B.shape}")


def dist_sym(a, b) -> float:
    """Symmetrized distance ``min_pi sum_j |x_j - y_pi(j)|`` by optimal assignment."""
    A, B = as_config(a), as_config(b)
    _check_same_shape(A, B)
    cost = np.sqrt(_pair_d2(A, B).astype(float))
    r, c = linear_sum_assignment(cost)
    return float(math.fsum(cost[r, c]))


def dist_sym_bruteforce(a, b) -> float:
    """Permutation enumeration for ``n <= 8``; test oracle for :func:`dist_sym`."""
    A, B = as_config(a), as_config(b)
    _check_same_shape(A, B)
    n = A.shape[0]
    if n > 8:
        raise ValueError("brute-force symmetrized distance is limited to n <= 8")
    cost = np.sqrt(_pair_d2(A, B).astype(float))
    return min(math.fsum(cost[i, p] for i, p in enumerate(perm))
               for perm in itertools.permutations(range(n)))


def dist_ordered(a, b) -> float:
    """Distance ``sum_j |x_j - y_j|`` keeping particle labels."""
    A, B = as_config(a), as_config(b)
    _check_same_shape(A, B)
    return float(math.fsum(np.sqrt(((A - B) ** 2).sum(axis=1).astype(float))))


def count_configs(region: Region, n: int) -> int:
    return len(region) ** n


def config_array(region: Region, n: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """All ``|Omega|^n`` configurations as an ``(N, n, d)`` array in lexicographic order.

    Row ``i`` is the mixed-radix index with particle 1 most significant.
    """
    N = count_configs(region, n)
    if N > cap:
        raise ConfigurationCapError(N, cap)
    m = len(region)
    idx = np.indices((m,) * n).reshape(n, -1).T
    return region.sites[idx]


def _config_mask(arr: np.ndarray, spec: ConfigSetSpec) -> np.ndarray:
    keep = np.ones(arr.shape[0], dtype=bool)
    if spec.anchor is not None:
        S = np.asarray(spec.anchor, dtype=np.int64).reshape(-1, spec.region.d)
        hit = (arr[:, :, None, :] == S[None, None, :, :]).all(axis=3).any(axis=(1, 2))
        keep &= hit
    if spec.max_diam is not None:
        diff = arr[:, :, None, :] - arr[:, None, :, :]
        d2 = np.einsum("ijkl,ijkl->ijk", diff, diff).max(axis=(1, 2))
        # diam <= r  <=>  diam^2 <= r^2 (exact for integer-valued r^2)
        keep &= d2 <= spec.max_diam ** 2 + 1e-9
    return keep


def enumerate_configs(spec: ConfigSetSpec, cap: int = DEFAULT_CAP) -> Iterator[tuple]:
    """Yield the configurations of ``spec`` in lexicographic order.

    Each configuration is a tuple of coordinate tuples.

    Raises
    ------
    ConfigurationCapError
        If ``|Omega|^n`` exceeds ``cap``.
    """
    arr = config_array(spec.region, spec.n, cap)
    for c in arr[_config_mask(arr, spec)]:
        yield _to_tuple(c)


def config_indices(spec: ConfigSetSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Mixed-radix indices (into the full ``Omega^n`` basis) of the configurations in ``spec``."""
    arr = config_array(spec.region, spec.n, cap)
    return np.flatnonzero(_config_mask(arr, spec))


def count_bounds_check(r: float, n: int, d: int, region_size: Optional[int] = None):
    """Cardinality bounds ``n (4r)^{d(n-1)}`` (anchored, diameter ``<= r``) and ``n |Omega|^{n-1}``.

    Returns
    -------
    (bound_anchor, bound_free)
        ``bound_free`` is ``None`` when ``region_size`` is not given.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    anchor = n * (4 * r) ** (d * (n - 1))
    free = None if region_size is None else n * region_size ** (n - 1)
    return anchor, free


def hausdorff_sum(x, region: Region, u, xi: float, n: Optional[int] = None) -> float:
    """``sum_{y in C^(n)(Omega; u)} exp(-dist_H(x, y)/xi)`` by enumeration."""
    X = as_config(x, region.d)
    n = X.shape[0] if n is None else n
    spec = ConfigSetSpec(region, n, anchor=[as_site(u, region.d)])
    arr = config_array(region, n)
    ys = arr[_config_mask(arr, spec)]
    dh = kernels.hausdorff_matrix(X[None], ys)[0]
    return float(math.fsum(np.exp(-dh / xi)))


def slice_bound_sum(L: float, xi: float, n: int, d: int) -> float:
    """Layer-cake integral of the slice bound ``n^n (2r)^{d(n-1)}`` for ``r >= L``.

    Equals ``n^n 2^m xi^m Gamma(m + 1, L/xi)`` with ``m = d(n-1)``.
    """
    m = d * (n - 1)
    upper = gammaincc(m + 1, L / xi) * gamma(m + 1)
    return float(n ** n * 2.0 ** m * xi ** m * upper)
