"""Random multiparticle Hamiltonians on finite lattice regions.

The operator is

    H = sum_j [ -Delta_j + lam V(x_j) ] + U(x; alpha)

on ``l^2(Omega)^n`` in the configuration basis, with the Dirichlet Laplacian
``(-Delta psi)(x) = 2d psi(x) - sum_{|e|=1, x+e in Omega} psi(x+e)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy import integrate, optimize
from scipy.special import ndtr, ndtri

from . import kernels
from .geometry import ConfigurationCapError, Region, as_config, as_site, config_array

__all__ = [
    "DisorderSpec", "InteractionSpec", "DisorderField", "OperatorMatrix",
    "sample_disorder", "regularity_constants", "occupation", "interaction_energy",
    "interaction_norm_bound", "assemble", "one_particle_laplacian",
    "exp_abs_moment", "KERNELS",
]

DEFAULT_DIM_CAP = 250_000


# --------------------------------------------------------------------------
# disorder

@dataclass(frozen=True)
class DisorderSpec:
    """Single-site distribution, disorder strength and master seed.

    Parameters
    ----------
    distribution : {"uniform", "gaussian", "custom"}
    params : tuple
        ``(a, b)`` for uniform, ``(mean, std)`` for gaussian and
        ``(grid, density)`` for a tabulated custom density.
    lam : float
        Disorder strength.
    seed : int
        64-bit master seed.
    """

    distribution: str = "uniform"
    params: tuple = (0.0, 1.0)
    lam: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in ("uniform", "gaussian", "custom"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.distribution == "uniform":
            a, b = self.params
            if not b > a:
                raise ValueError("uniform(a, b) needs b > a")
        elif self.distribution == "gaussian":
            if not self.params[1] > 0:
                raise ValueError("gaussian std must be positive")
        else:
            grid, dens = (np.asarray(p, dtype=float) for p in self.params)
            if grid.ndim != 1 or grid.shape != dens.shape or grid.size < 2:
                raise ValueError("custom density needs matching 1-d grid and values")
            if np.any(np.diff(grid) <= 0) or np.any(dens < 0):
                raise ValueError("custom grid must increase and density be nonnegative")
            if not integrate.trapezoid(dens, grid) > 0:
                raise ValueError("custom density is not normalizable")

    def with_lam(self, lam: float) -> "DisorderSpec":
        return DisorderSpec(self.distribution, self.params, float(lam), self.seed)

    def with_seed(self, seed: int) -> "DisorderSpec":
        return DisorderSpec(self.distribution, self.params, self.lam, int(seed))

    # density helpers --------------------------------------------------
    def _custom(self):
        grid, dens = (np.asarray(p, dtype=float) for p in self.params)
        z = integrate.trapezoid(dens, grid)
        dens = dens / z
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        return grid, dens, cdf / cdf[-1]

    def density(self, v):
        v = np.asarray(v, dtype=float)
        if self.distribution == "uniform":
            a, b = self.params
            return np.where((v >= a) & (v <= b), 1.0 / (b - a), 0.0)
        if self.distribution == "gaussian":
            mu, sd = self.params
            return np.exp(-0.5 * ((v - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        grid, dens, _ = self._custom()
        return np.interp(v, grid, dens, left=0.0, right=0.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if self.distribution == "uniform":
            a, b = self.params
            return a + (b - a) * q
        if self.distribution == "gaussian":
            mu, sd = self.params
            return mu + sd * ndtri(q)
        grid, _, cdf = self._custom()
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(q, cdf[keep], grid[keep])

    def support(self, mass: float = 1e-12) -> tuple:
        """Interval carrying all but ``mass`` of the probability."""
        if self.distribution == "uniform":
            return tuple(float(p) for p in self.params)
        if self.distribution == "gaussian":
            mu, sd = self.params
            w = -ndtri(mass / 2)
            return (mu - w * sd, mu + w * sd)
        grid, dens, _ = self._custom()
        nz = np.flatnonzero(dens > 0)
        return (float(grid[max(nz[0] - 1, 0)]), float(grid[min(nz[-1] + 1, grid.size - 1)]))

    def breakpoints(self) -> list:
        """Points where the density is not smooth (for quadrature)."""
        if self.distribution == "uniform":
            return list(self.params)
        if self.distribution == "custom":
            return list(np.asarray(self.params[0], dtype=float))
        return []

    def to_json(self) -> dict:
        p = self.params
        if self.distribution == "custom":
            p = [list(map(float, p[0])), list(map(float, p[1]))]
        else:
            p = [float(x) for x in p]
        return {"distribution": self.distribution, "params": p, "lambda": self.lam, "seed": int(self.seed)}


@dataclass(frozen=True, eq=False)
class DisorderField:
    """One realization of the potential on a region (values in site order)."""

    region: Region
    values: np.ndarray = field(repr=False)
    spec: DisorderSpec
    realization_index: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, u) -> float:
        return float(self.values[self.region.index(u)])

    def as_dict(self) -> dict:
        return {tuple(int(c) for c in s): float(v) for s, v in zip(self.region.sites, self.values)}

    def replace(self, u, value: float) -> "DisorderField":
        vals = self.values.copy()
        vals[self.region.index(u)] = value
        return DisorderField(self.region, vals, self.spec, self.realization_index)


def sample_disorder(spec: DisorderSpec, region: Region, k: int) -> DisorderField:
    """Draw realization ``k``; the value at a site depends only on ``(seed, k, site)``."""
    if k < 0:
        raise ValueError("realization index must be >= 0")
    u = kernels.site_uniforms(int(spec.seed), int(k), region.sites)
    return DisorderField(region, spec.quantile(u), spec, int(k))


def _window_mass(spec: DisorderSpec, v, E0):
    v = np.asarray(v, dtype=float)
    if spec.distribution == "gaussian":
        mu, sd = spec.params
        hi, lo = (v + E0 - mu) / sd, (v - E0 - mu) / sd
        # use the upper tail on the right to avoid cancellation
        return np.where(v > mu, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    if spec.distribution == "uniform":
        a, b = spec.params
        return np.clip(np.minimum(v + E0, b) - np.maximum(v - E0, a), 0, None) / (b - a)
    grid, dens, cdf = spec._custom()
    F = lambda t: np.interp(t, grid, cdf, left=0.0, right=1.0)
    return F(v + E0) - F(v - E0)


def regularity_constants(spec: DisorderSpec, E0: Optional[float] = None):
    """Constants ``(K, E0, rho_inf)`` with ``rho(v) <= K int_{|u|<=E0} rho(v-u) du``.

    Uniform ``(a, b)``: ``E0 = b - a`` so the window always covers the whole
    support and ``K = 1/(b - a)``.  Gaussian: ``E0 = std`` and ``K`` is the
    numeric supremum of the ratio (it stays bounded since the gaussian tail
    ratio decays).  Custom: ``E0`` defaults to a quarter of the support width
    and ``K`` is searched on a dense grid.

    Raises
    ------
    RuntimeError
        If the ratio is unbounded on the support (pathological density).
    """
    if spec.distribution == "uniform":
        a, b = spec.params
        w = b - a
        if E0 is None or E0 >= w:
            E0 = w if E0 is None else E0
            return 1.0 / w, float(E0), 1.0 / w
        # narrower window: mass >= E0/w inside the support
        return 1.0 / E0, float(E0), 1.0 / w
    if spec.distribution == "gaussian":
        mu, sd = spec.params
        E0 = sd if E0 is None else E0
        rho_inf = 1.0 / (sd * math.sqrt(2 * math.pi))
        ratio = lambda v: -(spec.density(v) / _window_mass(spec, v, E0))
        grid = mu + sd * np.linspace(-10, 10, 4001)
        r = -ratio(grid)
        i = int(np.argmax(r))
        res = optimize.minimize_scalar(ratio, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
                                       method="bounded", options={"xatol": 1e-12 * sd})
        return float(max(r[i], -res.fun)), float(E0), rho_inf
    grid, dens, _ = spec._custom()
    lo, hi = spec.support()
    E0 = 0.25 * (hi - lo) if E0 is None else E0
    fine = np.linspace(lo, hi, 20001)
    rho = spec.density(fine)
    mass = _window_mass(spec, fine, E0)
    ok = rho > 0
    if np.any(ok & (mass <= 0)):
        raise RuntimeError("regularity search failed: density mass vanishes in a window")
    K = float(np.max(rho[ok] / mass[ok]))
    if not np.isfinite(K):
        raise RuntimeError("regularity search failed: unbounded ratio")
    return K, float(E0), float(dens.max())


def exp_abs_moment(spec: DisorderSpec, t: float = 1.0) -> float:
    """``E[exp(t |V|)]`` (closed form for uniform and gaussian)."""
    if spec.distribution == "uniform":
        a, b = spec.params
        if t == 0:
            return 1.0
        # integral of exp(t|v|) over [a, b]
        def prim(v):
            return math.copysign(math.expm1(t * abs(v)) / t, v)
        return (prim(b) - prim(a)) / (b - a)
    if spec.distribution == "gaussian":
        mu, sd = spec.params
        s2 = sd * sd
        return float(math.exp(t * mu + 0.5 * t * t * s2) * ndtr((mu + t * s2) / sd)
                     + math.exp(-t * mu + 0.5 * t * t * s2) * ndtr((t * s2 - mu) / sd))
    grid, dens, _ = spec._custom()
    return float(integrate.trapezoid(np.exp(t * np.abs(grid)) * dens, grid))


# --------------------------------------------------------------------------
# interaction

def _kernel_indicator(occ: Sequence[int]) -> float:
    return 1.0


def _kernel_inverse_product(occ: Sequence[int]) -> float:
    return 1.0 / float(np.prod(occ))


KERNELS = {"indicator": _kernel_indicator, "inverse_product": _kernel_inverse_product}


@dataclass(frozen=True)
class InteractionSpec:
    """Finite-range interaction ``sum_k alpha_k sum_{|A|=k, diam A <= ell} U_A``.

    ``alphas[0]`` is ``alpha_2``.  ``kernel`` is a name from :data:`KERNELS`
    or a callable of the occupation numbers on ``A`` bounded by one.
    """

    alphas: tuple = ()
    ell: float = 1.0
    kernel: Union[str, Callable] = "indicator"

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.ell < 0:
            raise ValueError("interaction range must be >= 0")
        if isinstance(self.kernel, str) and self.kernel not in KERNELS:
            raise ValueError(f"unknown interaction kernel {self.kernel!r}")

    @property
    def kernel_fn(self) -> Callable:
        return KERNELS[self.kernel] if isinstance(self.kernel, str) else self.kernel

    @property
    def is_zero(self) -> bool:
        return not any(self.alphas)

    def to_json(self) -> dict:
        name = self.kernel if isinstance(self.kernel, str) else getattr(self.kernel, "__name__", "callable")
        return {"alphas": list(self.alphas), "ell_U": self.ell, "kernel": name}


def occupation(c, u) -> int:
    """Number of particles of ``c`` at site ``u``."""
    C = as_config(c)
    return int((C == as_site(u, C.shape[1])).all(axis=1).sum())


def interaction_energy(c, ispec: InteractionSpec) -> float:
    """Interaction energy of one configuration.

    Only subsets ``A`` of the footprint contribute (``U_A`` vanishes unless
    every site of ``A`` is occupied), so the sum runs over ``A subset X`` with
    ``|A| = k >= 2`` and ``diam A <= ell``.
    """
    if ispec.is_zero:
        return 0.0
    C = as_config(c)
    sites, counts = np.unique(C, axis=0, return_counts=True)
    m = sites.shape[0]
    diff = sites[:, None, :] - sites[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    ell2 = ispec.ell ** 2 + 1e-9
    fn = ispec.kernel_fn
    total = 0.0
    for k, alpha in enumerate(ispec.alphas, start=2):
        if alpha == 0 or k > m:
            continue
        acc = 0.0
        for A in itertools.combinations(range(m), k):
            if all(d2[i, j] <= ell2 for i, j in itertools.combinations(A, 2)):
                acc += fn(tuple(int(counts[i]) for i in A))
        total += alpha * acc
    return float(total)


def interaction_norm_bound(ispec: InteractionSpec, n: int, d: int) -> float:
    """Upper bound ``n sum_k (2 ell)^{dk}/k! |alpha_k|`` on ``sup |U|``."""
    return float(n * math.fsum((2 * ispec.ell) ** (d * k) / math.factorial(k) * abs(a)
                               for k, a in enumerate(ispec.alphas, start=2)))


# --------------------------------------------------------------------------
# assembly

def one_particle_laplacian(region: Region) -> sp.csr_matrix:
    """Dirichlet ``-Delta`` on ``region`` (diagonal ``2d``, ``-1`` on lattice bonds)."""
    m, d = len(region), region.d
    rows, cols = [], []
    for i, s in enumerate(region.sites):
        for j in range(d):
            t = s.copy()
            t[j] += 1
            if t in region:
                k = region.index(t)
                rows += [i, k]
                cols += [k, i]
    A = sp.coo_matrix((-np.ones(len(rows)), (rows, cols)), shape=(m, m)).tocsr()
    return (A + 2 * d * sp.identity(m, format="csr")).tocsr()


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """``H`` on ``Omega^n`` in mixed-radix order (particle 1 most significant).

    The kinetic, potential and interaction parts are kept separate;
    ``H = kinetic + lam * diag(potential) + diag(interaction)``.
    """

    region: Region
    n: int
    lam: float
    kinetic: sp.csr_matrix = field(repr=False)
    potential: np.ndarray = field(repr=False)
    interaction: np.ndarray = field(repr=False)
    occ: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.kinetic.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.kinetic.diagonal() + self.lam * self.potential + self.interaction

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.kinetic + sp.diags(self.lam * self.potential + self.interaction)).tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def bandwidth(self) -> int:
        """Half bandwidth in the mixed-radix order (``|Omega|^{n-1}`` times the 1-particle one)."""
        K = self.kinetic.tocoo()
        return int(np.abs(K.row - K.col).max()) if K.nnz else 0

    def index(self, c) -> int:
        """Mixed-radix index of configuration ``c``."""
        C = as_config(c, self.region.d)
        if C.shape[0] != self.n:
            raise ValueError(f"configuration has {C.shape[0]} particles, operator has {self.n}")
        m = len(self.region)
        idx = 0
        for p in C:
            idx = idx * m + self.region.index(p)
        return idx

    def config(self, i: int) -> tuple:
        m = len(self.region)
        out = []
        for _ in range(self.n):
            i, r = divmod(i, m)
            out.append(tuple(int(v) for v in self.region.sites[r]))
        return tuple(reversed(out))

    def number_operator(self, u) -> np.ndarray:
        """Diagonal of ``N_u``."""
        return self.occ[:, self.region.index(u)].astype(float)

    def with_shift(self, u, v: float) -> "OperatorMatrix":
        """Operator with ``V(u) -> V(u) + v``."""
        return OperatorMatrix(self.region, self.n, self.lam, self.kinetic,
                              self.potential + v * self.number_operator(u), self.interaction, self.occ)

    def with_lam(self, lam: float) -> "OperatorMatrix":
        return OperatorMatrix(self.region, self.n, float(lam), self.kinetic,
                              self.potential, self.interaction, self.occ)

    def to_matrix_market(self, path) -> None:
        from scipy.io import mmwrite
        mmwrite(str(path), self.matrix, comment="multiparticle Hamiltonian, mixed-radix basis")


def _kinetic(region: Region, n: int) -> sp.csr_matrix:
    A1 = one_particle_laplacian(region)
    m = len(region)
    K = sp.csr_matrix((m ** n, m ** n))
    for j in range(n):
        left = sp.identity(m ** j, format="csr")
        right = sp.identity(m ** (n - j - 1), format="csr")
        K = K + sp.kron(sp.kron(left, A1), right)
    return K.tocsr()


def _interaction_diag(configs: np.ndarray, ispec: InteractionSpec) -> np.ndarray:
    if ispec.is_zero:
        return np.zeros(configs.shape[0])
    cache: dict = {}
    out = np.empty(configs.shape[0])
    for i, c in enumerate(configs):
        # translation invariance: key on the footprint shape relative to its minimum
        key = tuple(map(tuple, c - c.min(axis=0)))
        srt = tuple(sorted(key))
        if srt not in cache:
            cache[srt] = interaction_energy(np.array(srt), ispec)
        out[i] = cache[srt]
    return out


def assemble(region: Region, n: int, dspec: Optional[DisorderSpec] = None,
             ispec: Optional[InteractionSpec] = None,
             field: Optional[DisorderField] = None, cap: int = DEFAULT_DIM_CAP,
             lam: Optional[float] = None) -> OperatorMatrix:
    """Assemble ``H_Omega^(n)`` for one disorder field.

    ``field=None`` means ``V = 0``.  ``lam`` defaults to ``dspec.lam``.

    Raises
    ------
    ConfigurationCapError
        If ``|Omega|^n`` exceeds ``cap``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    D = len(region) ** n
    if D > cap:
        raise ConfigurationCapError(D, cap)
    ispec = InteractionSpec() if ispec is None else ispec
    lam = (dspec.lam if dspec is not None else 1.0) if lam is None else float(lam)
    configs = config_array(region, n, cap)
    m = len(region)
    idx = np.indices((m,) * n).reshape(n, -1).T  # site indices per particle
    occ = np.zeros((D, m), dtype=np.int64)
    for j in range(n):
        np.add.at(occ, (np.arange(D), idx[:, j]), 1)
    if field is not None:
        if field.region is not region and not np.array_equal(field.region.sites, region.sites):
            raise ValueError("disorder field lives on a different region")
        V = field.values
    else:
        V = np.zeros(m)
    pot = np.zeros(D)
    for j in range(n):
        pot = pot + V[idx[:, j]]
    return OperatorMatrix(region, n, lam, _kinetic(region, n), pot,
                          _interaction_diag(configs, ispec), occ)
