"""Eigendecompositions, Green functions and time-evolution kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import as_config
from .model import OperatorMatrix

__all__ = [
    "EigenSystem", "SingularResolventError", "DenseCapError", "diagonalize",
    "green", "green_eig", "resolvent_columns", "resolvent_sweep", "evolve_kernel",
    "representative_configs", "in_interval", "index_of",
]

DENSE_CAP = 4096
GROUP_RTOL = 1e-9


class SingularResolventError(ArithmeticError):
    """Real spectral parameter too close to the spectrum."""


class DenseCapError(ValueError):
    """Matrix too large for dense diagonalization."""


def index_of(H, x) -> int:
    """Basis index of ``x``: plain ints are indices, anything else a configuration."""
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(H, EigenSystem):
        H = H.operator
    if not isinstance(H, OperatorMatrix):
        raise TypeError("configurations need an OperatorMatrix to be resolved")
    return H.index(x)


def in_interval(E, I) -> np.ndarray:
    """Membership of energies in the closed interval ``I`` (``None`` is the real line)."""
    E = np.asarray(E, dtype=float)
    if I is None:
        return np.ones(E.shape, dtype=bool)
    a, b = I
    return (E >= a) & (E <= b)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Full spectrum of a real symmetric matrix with degeneracy groups.

    ``starts`` marks the first index of each group of (numerically) equal
    eigenvalues; ``group_values`` holds their means.
    """

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)
    norm: float
    tol: float
    operator: Optional[OperatorMatrix] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def degeneracy_groups(self) -> list:
        stops = np.append(self.starts[1:], self.dim)
        return [list(range(a, b)) for a, b in zip(self.starts, stops)]

    @property
    def group_values(self) -> np.ndarray:
        return np.add.reduceat(self.eigenvalues, self.starts) / np.diff(np.append(self.starts, self.dim))

    def projections(self, x: int, y: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-group ``<x|P_E|x>`` and ``<x|P_E|y>``."""
        V = self.eigenvectors
        pxx = np.add.reduceat(V[x] * V[x], self.starts)
        pxy = np.add.reduceat(V[x] * V[y], self.starts)
        return pxx, pxy

    def group_projector(self, g: int) -> np.ndarray:
        stops = np.append(self.starts[1:], self.dim)
        W = self.eigenvectors[:, self.starts[g]:stops[g]]
        return W @ W.T

    def group_of(self, E: float) -> int:
        vals = self.group_values
        g = int(np.argmin(np.abs(vals - E)))
        if abs(vals[g] - E) > max(self.tol, 1e-12):
            raise ValueError(f"{E!r} is not an eigenvalue")
        return g


def _group_starts(w: np.ndarray, tol: float) -> np.ndarray:
    gaps = np.diff(w) > tol
    return np.concatenate([[0], np.flatnonzero(gaps) + 1]).astype(np.intp)


def diagonalize(H, cap: int = DENSE_CAP, rtol: float = GROUP_RTOL) -> EigenSystem:
    """Dense symmetric eigendecomposition with eigenvalue grouping.

    Eigenvalues within ``rtol * max(1, ||H||)`` of their neighbour are put in
    one group, so that spectral projections are taken per distinct level.
    """
    op = H if isinstance(H, OperatorMatrix) else None
    A = H.dense() if op is not None else (H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float))
    if A.shape[0] > cap:
        raise DenseCapError(f"dimension {A.shape[0]} exceeds dense cap {cap}")
    try:
        w, V = sla.eigh(A, check_finite=True)
    except sla.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    tol = rtol * max(1.0, norm)
    w.setflags(write=False)
    V.setflags(write=False)
    return EigenSystem(w, V, _group_starts(w, tol), norm, tol, op)


def green_eig(es: EigenSystem, x, y, z) -> complex:
    """``G(x, y; z)`` from the eigen-expansion."""
    i, j = index_of(es, x), index_of(es, y)
    V = es.eigenvectors
    return complex(np.sum(V[i] * V[j] / (es.eigenvalues - z)))


def _as_sparse(H) -> sp.csc_matrix:
    if isinstance(H, OperatorMatrix):
        return H.matrix.tocsc()
    return sp.csc_matrix(H)


def green(H, x, y, z, dense_cap: int = DENSE_CAP) -> complex:
    """``G(x, y; z) = <x|(H - z)^{-1}|y>`` by sparse LU.

    Raises
    ------
    SingularResolventError
        For real ``z`` within ``1e-12`` of the spectrum.
    """
    i, j = index_of(H, x), index_of(H, y)
    A = _as_sparse(H)
    n = A.shape[0]
    z = complex(z)
    if z.imag == 0:
        if n <= dense_cap:
            w = sla.eigvalsh(A.toarray())
            if np.min(np.abs(w - z.real)) < 1e-12:
                raise SingularResolventError(f"z = {z.real!r} lies on the spectrum")
        M = (A - z.real * sp.identity(n, format="csc")).tocsc()
    else:
        M = (A.astype(complex) - z * sp.identity(n, format="csc", dtype=complex)).tocsc()
    rhs = np.zeros(n, dtype=M.dtype)
    rhs[j] = 1.0
    try:
        u = spla.splu(M).solve(rhs)
    except RuntimeError as exc:
        raise SingularResolventError(str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise SingularResolventError("resolvent solve produced non-finite values")
    return complex(u[i])


def _banded(A: sp.spmatrix, bw: int, shift: complex) -> np.ndarray:
    C = A.tocoo()
    n = A.shape[0]
    ab = np.zeros((2 * bw + 1, n), dtype=complex)
    ab[bw + C.row - C.col, C.col] = C.data
    ab[bw] -= shift
    return ab


def resolvent_columns(H: OperatorMatrix, cols: Sequence[int], z: complex) -> np.ndarray:
    """Columns ``(H - z)^{-1} e_j`` for ``j`` in ``cols`` (shape ``(dim, len(cols))``).

    Uses a banded LU in the mixed-radix order, which keeps componentwise
    accuracy for exponentially small entries (the eigen-expansion does not).
    """
    A = H.matrix if isinstance(H, OperatorMatrix) else sp.csr_matrix(H)
    n = A.shape[0]
    cols = np.asarray(cols, dtype=np.intp)
    B = np.zeros((n, cols.size), dtype=complex)
    B[cols, np.arange(cols.size)] = 1.0
    C = A.tocoo()
    bw = int(np.abs(C.row - C.col).max()) if C.nnz else 0
    if 4 * bw < n:
        return sla.solve_banded((bw, bw), _banded(A, bw, z), B, check_finite=False)
    M = A.toarray().astype(complex)
    M[np.diag_indices(n)] -= z
    return sla.solve(M, B, check_finite=False)


def resolvent_sweep(H: OperatorMatrix, cols: Sequence[int], zs: Sequence[complex]):
    """Yield ``resolvent_columns(H, cols, z)`` for each ``z``, assembling the band storage once."""
    A = H.matrix if isinstance(H, OperatorMatrix) else sp.csr_matrix(H)
    n = A.shape[0]
    cols = np.asarray(cols, dtype=np.intp)
    B = np.zeros((n, cols.size), dtype=complex)
    B[cols, np.arange(cols.size)] = 1.0
    C = A.tocoo()
    bw = int(np.abs(C.row - C.col).max()) if C.nnz else 0
    if 4 * bw < n:
        ab0 = _banded(A, bw, 0.0)
        for z in zs:
            ab = ab0.copy()
            ab[bw] -= z
            yield sla.solve_banded((bw, bw), ab, B, check_finite=False, overwrite_ab=True)
    else:
        M0 = A.toarray().astype(complex)
        for z in zs:
            M = M0.copy()
            M[np.diag_indices(n)] -= z
            yield sla.solve(M, B, check_finite=False, overwrite_a=True)


def evolve_kernel(es: EigenSystem, x, y, I=None, t: float = 0.0) -> complex:
    """``<x| P_I(H) exp(-itH) |y>`` using group energies."""
    i, j = index_of(es, x), index_of(es, y)
    _, pxy = es.projections(i, j)
    E = es.group_values
    keep = in_interval(E, I)
    return complex(np.sum(np.exp(-1j * t * E[keep]) * pxy[keep]))


def representative_configs(es: EigenSystem, E: float, region=None, n: Optional[int] = None) -> list:
    """Configurations ``y`` with ``<y|P_E|y> >= w(y)``, ``w(y) ~ (1+|y|)^{-(nd+1)}``.

    ``w`` is normalized over the finite volume ``Omega^n``; ``|y|`` is the
    Euclidean norm of the concatenated coordinates.
    """
    op = es.operator
    if op is None:
        raise ValueError("representative_configs needs an EigenSystem built from an OperatorMatrix")
    region = op.region if region is None else region
    n = op.n if n is None else n
    d = region.d
    g = es.group_of(E)
    stops = np.append(es.starts[1:], es.dim)
    W = es.eigenvectors[:, es.starts[g]:stops[g]]
    diag = np.einsum("ij,ij->i", W, W)
    m = len(region)
    idx = np.indices((m,) * n).reshape(n, -1).T
    coords = region.sites[idx].reshape(-1, n * d).astype(float)
    w = (1.0 + np.sqrt((coords ** 2).sum(axis=1))) ** (-(n * d + 1))
    w = w / math.fsum(w)
    return [op.config(i) for i in np.flatnonzero(diag >= w)]
