"""Finite-volume localization certificates: B-values, rescaling, recursion and decay fits."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .correlator import correlator
from .ensemble import EnsembleSpec, estimate
from .geometry import (ConfigSetSpec, Region, as_config, config_array, config_indices,
                       dist_hausdorff, dist_sets)
from .model import OperatorMatrix
from .moments import pair_moment_table
from .spectral import diagonalize

__all__ = [
    "BValue", "DecayFit", "RecursionParams", "CompositeModel", "ladder",
    "bulk_interval", "compute_B", "rescaling_check", "recursion_lemma", "mu_formulas",
    "fit_decay", "decay_fit", "compose_noninteracting", "factorization_check",
    "clustered_decay_experiment", "two_region_factorization_check", "certificate",
]


@dataclass(frozen=True)
class BValue:
    """``B_s(L)`` on ``Omega = Lambda_L`` with its Monte Carlo error."""

    L: int
    s: float
    mean: float
    std_error: float
    M: int
    I: tuple
    lam: float
    n_pairs: int
    components: np.ndarray = field(repr=False, default=None)
    C_fit: float = float("nan")

    def to_json(self) -> dict:
        return {"L": self.L, "s": self.s, "mean": self.mean, "std_error": self.std_error,
                "M": self.M, "I": list(self.I), "lambda": self.lam, "n_pairs": self.n_pairs,
                "C_fit": self.C_fit, "omega": "Lambda_L"}


@dataclass(frozen=True)
class DecayFit:
    """Weighted fit ``mean ~ A exp(-r / xi)``; ``status`` is ``fitted`` or ``undetermined``."""

    xi: float
    A: float
    r2: float
    slope: float
    kernel: str = "dist_H"
    status: str = "fitted"
    residuals: tuple = ()

    def to_json(self) -> dict:
        return {"xi": self.xi, "A": self.A, "r2": self.r2, "slope": self.slope,
                "kernel": self.kernel, "status": self.status, "residuals": list(self.residuals)}


@dataclass(frozen=True)
class RecursionParams:
    """Constants of ``S(2L) <= a S(L)^2 + b L^{2p} e^{-2 nu L}`` and the test point ``(L0, eta)``."""

    a: float
    b: float
    p: float
    nu: float
    L0: float
    eta: float

    def __post_init__(self):
        if min(self.a, self.b, self.p) < 0 or self.nu <= 0 or self.L0 <= 0:
            raise ValueError("need a, b, p >= 0 and nu, L0 > 0")


def ladder(L0: int, k_max: int) -> list:
    """``L_{k+1} = 2 (L_k + 1)``."""
    out = [int(L0)]
    for _ in range(k_max):
        out.append(2 * (out[-1] + 1))
    return out


def bulk_interval(ens: EnsembleSpec, width: float = 2.0) -> tuple:
    """Interval of the given width centered at the median of the realization-0 spectrum."""
    w = diagonalize(ens.operator(0)).eigenvalues
    c = float(np.median(w))
    return (c - width / 2, c + width / 2)


# --------------------------------------------------------------------------
# B-values and rescaling

def _box_ens(ens: EnsembleSpec, L: int, I) -> EnsembleSpec:
    return ens.with_(region=Region.box(L, ens.region.d), energy=tuple(I))


def compute_B(ens: EnsembleSpec, L: int, s: float, I=None, threads: int = 1) -> BValue:
    """``|dLambda_L| sum_{y in dLambda_L} sum_{x, y} E_I |G(x, y)|^s`` with ``Omega = Lambda_L``.

    ``x`` runs over configurations of diameter ``<= L/2`` with a particle at the
    origin, ``y`` over those of diameter ``<= L/2`` with a particle at ``y``.
    ``C_fit`` is the constant that makes ``B <= C n^2 L^{2d(n-1)} / |lam|^s`` tight.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    box = Region.box(L, ens.region.d)
    e0 = _box_ens(ens, L, (0.0, 1.0))
    I = bulk_interval(e0) if I is None else tuple(I)
    e = _box_ens(ens, L, I)
    r = L / 2
    d = box.d
    xs = config_indices(ConfigSetSpec(box, ens.n, anchor=[np.zeros(d, dtype=np.int64)], max_diam=r))
    bnd = box.boundary()
    pairs = []
    for y in bnd:
        ys = config_indices(ConfigSetSpec(box, ens.n, anchor=[y], max_diam=r))
        pairs.extend(itertools.product(xs, ys))
    pairs = np.array(pairs, dtype=np.intp)
    table = pair_moment_table(e, pairs, s, None, None, threads)
    per = [len(bnd) * math.fsum(row) for row in table]
    est = estimate(per)
    lam = abs(ens.dspec.lam)
    scale = ens.n ** 2 * L ** (2 * d * (ens.n - 1)) / lam ** s
    return BValue(int(L), float(s), est.mean, est.std_error, est.M, I, ens.dspec.lam,
                  len(pairs), table.mean(axis=0), est.mean / scale)


def _compare(b_hi: BValue, b_lo: BValue, z: float) -> str:
    """``consistent`` if ``B(L_{k+1}) < B(L_k)`` beyond ``z`` combined SE, ``violated`` if above."""
    se = math.hypot(np.nan_to_num(b_hi.std_error), np.nan_to_num(b_lo.std_error))
    diff = b_hi.mean - b_lo.mean
    if diff + z * se < 0:
        return "consistent"
    if diff - z * se > 0:
        return "violated"
    return "inconclusive"


def rescaling_check(ens: EnsembleSpec, L0: int, s: float, k_max: int = 1, I=None,
                    threads: int = 1, z: float = 3.0) -> dict:
    """B along the ladder ``L0, 2(L0+1), ...`` with per-step statuses.

    ``a_eff = B(L_{k+1}) / B(L_k)^2`` is the smallest quadratic coefficient
    consistent with the measured step (error term set to zero).
    """
    Ls = ladder(L0, k_max)
    if I is None:
        I = bulk_interval(_box_ens(ens, Ls[-1], (0.0, 1.0)))
    Bs = [compute_B(ens, L, s, I, threads) for L in Ls]
    steps = []
    for lo, hi in zip(Bs[:-1], Bs[1:]):
        steps.append({"L_k": lo.L, "L_k1": hi.L, "status": _compare(hi, lo, z),
                      "a_eff": hi.mean / lo.mean ** 2 if lo.mean > 0 else float("inf")})
    sts = [st["status"] for st in steps]
    status = "violated" if "violated" in sts else ("consistent" if all(x == "consistent" for x in sts)
                                                   else "inconclusive")
    return {"ladder": Ls, "B": [b.to_json() for b in Bs], "steps": steps, "status": status,
            "I": list(I), "omega": "Lambda_L (no sup over sub-regions)"}


# --------------------------------------------------------------------------
# recursion lemma

def mu_formulas(x: float, L0: float) -> dict:
    """The two inverse lengths ``-log(x + 1/2)/L0`` and ``-log(2x)/(2 L0)``.

    The first is what the recursion guarantees; the second is only a lower
    bound for it when ``x + 1/2 <= sqrt(2x)``, which fails for every ``x != 1/2``.
    """
    m1 = -math.log(x + 0.5) / L0
    m2 = -math.log(2 * x) / (2 * L0) if x > 0 else float("inf")
    return {"mu": m1, "mu_alt": m2, "alt_is_lower_bound": bool(m1 >= m2)}


def recursion_lemma(params: RecursionParams, S0: float, k_max: int = 40, slack: float = 1e-12,
                    mu: Optional[float] = None) -> dict:
    """Iterate the worst case ``S(2L) = a S(L)^2 + b L^{2p} e^{-2 nu L}`` and check the conclusion.

    Hypotheses: (1) ``eta^2 >= a b + eta 2^p / L0^p``;
    (2) ``1 > a S(L0) + eta L0^p e^{-nu L0} =: e^{-mu L0}``.
    All quantities are kept as logarithms so nothing underflows.  ``mu``
    overrides the inverse length in the conclusion (it must not exceed the
    one defined by (2) for the claim to be covered).
    """
    a, b, p, nu, L0, eta = params.a, params.b, params.p, params.nu, params.L0, params.eta
    if S0 < 0:
        raise ValueError("S0 must be non-negative")
    h1 = eta ** 2 >= a * b + eta * 2 ** p / L0 ** p
    R0 = a * S0 + eta * L0 ** p * math.exp(-nu * L0)
    h2 = R0 < 1
    failed = [name for name, ok in (("(1)", h1), ("(2)", h2)) if not ok]
    report = {"hypotheses": {"(1)": bool(h1), "(2)": bool(h2)}, "failed": failed,
              "claim": None, "mu": None, "sequence": [], "ok": None}
    if failed:
        return report
    mu_lemma = -math.log(R0) / L0 if R0 > 0 else float("inf")
    mu = mu_lemma if mu is None else float(mu)
    neg = -math.inf
    logS = math.log(S0) if S0 > 0 else neg
    la = math.log(a) if a > 0 else neg
    lb = math.log(b) if b > 0 else neg
    rows, ok = [], True
    L = L0
    for k in range(k_max + 1):
        bound = (-la if a > 0 else math.inf) - mu * L
        good = logS <= bound + slack * max(1.0, abs(bound)) if np.isfinite(bound) else True
        ok &= bool(good)
        rows.append({"k": k, "L": L, "log_S": logS, "log_bound": bound, "ok": bool(good)})
        src = la + 2 * logS if logS > neg and a > 0 else neg
        err = lb + 2 * p * math.log(L) - 2 * nu * L if b > 0 else neg
        logS = float(np.logaddexp(src, err)) if max(src, err) > neg else neg
        L = 2 * L
    report.update({"claim": "S(2^k L0) <= exp(-mu 2^k L0) / a", "mu": mu, "mu_lemma": mu_lemma,
                   "sequence": rows, "ok": ok})
    return report


# --------------------------------------------------------------------------
# decay fits

def fit_decay(r: Sequence[float], mean: Sequence[float], se: Optional[Sequence[float]] = None,
              kernel: str = "dist_H", r2_min: float = 0.8) -> DecayFit:
    """Weighted least squares of ``log mean`` against ``r``.

    Weights are ``(mean / se)^2`` (delta method); uniform when ``se`` is None
    or has zeros.

    Raises
    ------
    ValueError
        With fewer than 4 distinct distances or non-positive means.
    """
    r = np.asarray(r, dtype=float)
    m = np.asarray(mean, dtype=float)
    if np.unique(r).size < 4:
        raise ValueError("need at least 4 distinct distances")
    if np.any(m <= 0):
        raise ValueError("means must be positive")
    w = np.ones_like(m)
    if se is not None:
        se = np.asarray(se, dtype=float)
        if np.all(se > 0) and np.all(np.isfinite(se)):
            w = (m / se) ** 2
    y = np.log(m)
    W = w / w.sum()
    rb, yb = W @ r, W @ y
    slope = float(W @ ((r - rb) * (y - yb)) / (W @ (r - rb) ** 2))
    icpt = float(yb - slope * rb)
    res = y - (icpt + slope * r)
    ss_tot = float(W @ (y - yb) ** 2)
    r2 = 1.0 - float(W @ res ** 2) / ss_tot if ss_tot > 0 else 0.0
    xi = -1.0 / slope if slope < 0 else float("inf")
    ok = r2 >= r2_min and slope < 0 and np.isfinite(xi)
    return DecayFit(xi, math.exp(icpt), r2, slope, kernel, "fitted" if ok else "undetermined",
                    tuple(float(v) for v in res))


def _pair_table(ens: EnsembleSpec, pairs, s, I, threads):
    tmpl = ens.template()
    idx = np.array([[tmpl.index(x), tmpl.index(y)] for x, y in pairs], dtype=np.intp)
    tab = pair_moment_table(ens.with_(energy=tuple(I)), idx, s, None, None, threads)
    est = [estimate(tab[:, p]) for p in range(tab.shape[1])]
    return np.array([e.mean for e in est]), np.array([e.std_error for e in est])


def decay_fit(ens: EnsembleSpec, pairs, s: float, I, threads: int = 1, kernel: str = "dist_H") -> DecayFit:
    """Fit ``E_I |G(x,y)|^s ~ A exp(-dist(x,y)/xi)`` over the given pairs."""
    dist = {"dist_H": dist_hausdorff, "dist": dist_sets}[kernel]
    r = [dist(x, y) for x, y in pairs]
    mean, se = _pair_table(ens, pairs, s, I, threads)
    return fit_decay(r, mean, se, kernel)


def decay_family(n: int, d: int, L: int) -> list:
    """Pairs ``x = (0,...,0)``, ``y = (k,...,k)`` for ``k = 0..L`` (all particles together)."""
    o = tuple([tuple([0] * d)] * n)
    return [(o, tuple([tuple([k] * d)] * n)) for k in range(L + 1)]


# --------------------------------------------------------------------------
# non-interacting composition

@dataclass(frozen=True, eq=False)
class CompositeModel:
    """Kronecker sum of two operators on the same region with the same field."""

    operator: OperatorMatrix
    J: OperatorMatrix
    K: OperatorMatrix

    def index(self, xJ, xK) -> int:
        return self.J.index(xJ) * self.K.dim + self.K.index(xK)


def compose_noninteracting(opJ: OperatorMatrix, opK: OperatorMatrix) -> CompositeModel:
    """``H_J (x) 1 + 1 (x) H_K`` with the configuration order of ``n_J + n_K`` particles."""
    if not np.array_equal(opJ.region.sites, opK.region.sites):
        raise ValueError("factors live on different regions")
    if opJ.lam != opK.lam:
        raise ValueError("factors have different disorder strengths")
    IJ, IK = sp.identity(opJ.dim, format="csr"), sp.identity(opK.dim, format="csr")
    kin = (sp.kron(opJ.kinetic, IK) + sp.kron(IJ, opK.kinetic)).tocsr()
    pot = np.add.outer(opJ.potential, opK.potential).ravel()
    inter = np.add.outer(opJ.interaction, opK.interaction).ravel()
    occ = (opJ.occ[:, None, :] + opK.occ[None, :, :]).reshape(-1, opJ.occ.shape[1])
    op = OperatorMatrix(opJ.region, opJ.n + opK.n, opJ.lam, kin, pot, inter, occ)
    return CompositeModel(op, opJ, opK)


def factorization_check(comp: CompositeModel, xJ, xK, yJ, yK, tol: float = 1e-10) -> dict:
    """``Q^{JK}(x, y; R) <= Q^J(xJ, yJ; R) Q^K(xK, yK; R)`` at ``s = 1``, with the equality gap."""
    es = diagonalize(comp.operator)
    i, j = comp.index(xJ, xK), comp.index(yJ, yK)
    lhs = correlator(es, i, j, None, 1.0)
    qJ = correlator(diagonalize(comp.J), xJ, yJ, None, 1.0)
    qK = correlator(diagonalize(comp.K), xK, yK, None, 1.0)
    w = np.add.outer(diagonalize(comp.J).eigenvalues, diagonalize(comp.K).eigenvalues).ravel()
    sumset_err = float(np.max(np.abs(np.sort(w) - es.eigenvalues)))
    return {"lhs": lhs, "rhs": qJ * qK, "gap": qJ * qK - lhs, "ok": bool(lhs <= qJ * qK + tol),
            "sumset_err": sumset_err}


# --------------------------------------------------------------------------
# clustered decay and two-region factorization

def clustered_decay_experiment(ens: EnsembleSpec, s: float, I, threads: int = 1, r: float = 1.0,
                               r_prime: Optional[float] = None) -> dict:
    """Decay of ``E_I|G|^s`` against ``min{dist_H, max(l(x), l(y))}`` and the ``k_s`` sum.

    Pairs are ``(x, y)`` with ``x`` anchored at the first site of the region
    and ``y`` over all configurations.  ``k_s(Omega, r, r')`` is evaluated on
    the same table both as a grouped sum and as a flat masked sum.
    """
    if ens.n < 2:
        raise ValueError("n must be >= 2")
    region = ens.region
    r_prime = r if r_prime is None else r_prime
    tmpl = ens.template()
    arr = config_array(region, ens.n)
    o = region.sites[0]
    xs = config_indices(ConfigSetSpec(region, ens.n, anchor=[o]))
    pairs = np.array([(i, j) for i in xs for j in range(tmpl.dim)], dtype=np.intp)
    tab = pair_moment_table(ens.with_(energy=tuple(I)), pairs, s, None, None, threads)
    est = [estimate(tab[:, p]) for p in range(tab.shape[1])]
    mean = np.array([e.mean for e in est])
    se = np.array([e.std_error for e in est])
    dH = np.array([kernels.hausdorff_matrix(arr[i][None], arr[j][None])[0, 0] for i, j in pairs])
    lw = kernels.splitting_widths(arr)
    kern = np.minimum(dH, np.maximum(lw[pairs[:, 0]], lw[pairs[:, 1]]))
    rows = []
    for kv in np.unique(kern):
        sel = kern == kv
        rows.append((float(kv), float(mean[sel].max()), float(se[sel][np.argmax(mean[sel])])))
    fit = fit_decay([r_ for r_, _, _ in rows], [m for _, m, _ in rows], [e for _, _, e in rows],
                    kernel="min(dist_H, max l)") if len(rows) >= 4 else None
    # large splitting width but small Hausdorff distance: the min kernel is dist_H
    slow = []
    if fit is not None:
        pred = fit.A * np.exp(-kern / fit.xi)
        sel = lw[pairs[:, 0]] > dH
        slow = (mean[sel] > pred[sel] + 3 * np.nan_to_num(se[sel])).tolist()
    # k_s bookkeeping: sup over y with |x - y| >= 2r
    dmat = np.sqrt(((arr[:, :, None] - arr[:, None]) ** 2).sum(-1)).max(axis=(1, 2))
    xs_far = [int(i) for i in xs if dmat[i] > r_prime]
    best_grouped, best_flat = 0.0, 0.0
    for y in region.sites:
        if np.sqrt(((y - o) ** 2).sum()) < 2 * r:
            continue
        ys = set(config_indices(ConfigSetSpec(region, ens.n, anchor=[y], max_diam=r)).tolist())
        ycols = sorted(ys)
        grouped = math.fsum(math.fsum(mean[(pairs[:, 0] == i) & np.isin(pairs[:, 1], ycols)])
                            for i in xs_far)
        mask = np.isin(pairs[:, 1], ycols) & (dmat[pairs[:, 0]] > r_prime)
        flat = math.fsum(mean[mask])
        best_grouped, best_flat = max(best_grouped, grouped), max(best_flat, flat)
    return {"fit": None if fit is None else fit.to_json(), "kernel_rows": rows,
            "slower_than_predicted": int(sum(slow)), "checked_large_l": len(slow),
            "k_s": best_grouped, "k_s_flat": best_flat,
            "k_s_agree": bool(abs(best_grouped - best_flat) <= 1e-12 * max(1.0, best_flat))}


def _inner_boundary(sub: np.ndarray, omega: Region) -> np.ndarray:
    """Sites of ``sub`` with a lattice neighbour in ``omega`` but outside ``sub``."""
    S = {tuple(u) for u in sub.tolist()}
    out = []
    for u in sub:
        for k in range(omega.d):
            for sgn in (-1, 1):
                v = u.copy()
                v[k] += sgn
                if tuple(v.tolist()) not in S and v in omega:
                    out.append(u)
                    break
            else:
                continue
            break
    return np.array(out, dtype=np.int64).reshape(-1, omega.d)


def two_region_factorization_check(ens: EnsembleSpec, V, W, x, y, s: float, z: complex,
                                   threads: int = 1) -> dict:
    """``E|G_Omega(x,y)|^s`` against ``lam^{-s}`` times the boundary sums of ``G_V`` and ``G_W``.

    Reports ``C_fit`` (the constant that makes the inequality tight) and the
    ratio ``E|G_Omega|^s / (boundary product)``.
    """
    omega = ens.region
    V = Region.explicit(np.asarray(V).reshape(-1, omega.d))
    W = Region.explicit(np.asarray(W).reshape(-1, omega.d))
    if any(u not in omega for u in V.sites) or any(u not in omega for u in W.sites):
        raise ValueError("V and W must lie in the region")
    if dist_sets(V.sites, W.sites) < 2:
        raise ValueError("V and W must be at distance >= 2")
    n = ens.n
    X, Y = as_config(x, omega.d), as_config(y, omega.d)
    if any(u not in V for u in X) or any(u not in W for u in Y):
        raise ValueError("x must lie in V^n and y in W^n")
    lhs = pair_moment_table(ens, [[ens.template().index(x), ens.template().index(y)]], s, None, z, threads)[:, 0]
    sides = []
    for sub, anchor_cfg, first in ((V, x, True), (W, y, False)):
        e = ens.with_(region=sub)
        t = e.template()
        a = t.index(anchor_cfg)
        idx = []
        for u in _inner_boundary(sub.sites, omega):
            ws = config_indices(ConfigSetSpec(sub, n, anchor=[u]))
            idx.extend([(a, w) if first else (w, a) for w in ws])
        idx = sorted(set(idx))
        tab = pair_moment_table(e, np.array(idx, dtype=np.intp), s, None, z, threads)
        sides.append(np.array([math.fsum(row) for row in tab]))
    lam = abs(ens.dspec.lam)
    L_est = estimate(lhs)
    V_est, W_est = estimate(sides[0]), estimate(sides[1])
    prod = V_est.mean * W_est.mean
    ratio = L_est.mean / prod if prod > 0 else float("inf")
    return {"lhs": L_est.mean, "lhs_se": L_est.std_error, "V_sum": V_est.mean, "W_sum": W_est.mean,
            "ratio": ratio, "C_fit": ratio * lam ** s, "lambda": ens.dspec.lam}


# --------------------------------------------------------------------------
# certificate pipeline

def certificate(ens: EnsembleSpec, s: float, L: int = 8, L0: int = 2, k_max: int = 1,
                threads: int = 1, z: float = 3.0) -> dict:
    """Rescaling ladder plus decay fit on ``Lambda_L``.

    ``certified`` needs every ladder step ``consistent`` and a ``fitted``
    decay; ``violated`` if a ladder step is violated; otherwise
    ``inconclusive``.
    """
    resc = rescaling_check(ens, L0, s, k_max, None, threads, z)
    e = _box_ens(ens, L, (0.0, 1.0))
    I = bulk_interval(e)
    e = e.with_(energy=I)
    fam = decay_family(ens.n, ens.region.d, L)
    r = [dist_hausdorff(x, y) for x, y in fam]
    mean, se = _pair_table(e, fam, s, I, threads)
    rows = [{"dist_H": float(a), "mean": float(m), "std_error": float(v)} for a, m, v in zip(r, mean, se)]
    try:
        fit = fit_decay(r, mean, se, "dist_H")
        fit_json = fit.to_json()
        fitted = fit.status == "fitted"
    except ValueError as exc:
        fit_json, fitted = {"status": "undetermined", "reason": str(exc)}, False
    if resc["status"] == "violated":
        status = "violated"
    elif resc["status"] == "consistent" and fitted:
        status = "certified"
    else:
        status = "inconclusive"
    return {"status": status, "rescaling": resc, "decay": fit_json, "decay_rows": rows, "decay_I": list(I), "L": L,
            "s": s, "lambda": ens.dspec.lam, "M": ens.M}
