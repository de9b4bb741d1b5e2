"""Fractional moments of the Green function, conditional bounds and the Wegner estimate."""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .correlator import _v_breakpoints
from .ensemble import (EnsembleSpec, MomentEstimate, energy_nodes, estimate,
                       run_realizations, status_from_bound)
from .model import DisorderSpec, OperatorMatrix, regularity_constants
from .spectral import index_of, resolvent_sweep

__all__ = [
    "EnsembleSpec", "MomentEstimate", "green_samples", "pair_moment_table",
    "fractional_moment", "averaged_moment", "conditional_moment_bound",
    "weak_l1_profile", "double_sampling_check", "wegner_check", "moment_chain_check",
]


def _abs_green(op: OperatorMatrix, rows: np.ndarray, cols: np.ndarray, zs: Sequence[complex]) -> np.ndarray:
    """``|G(rows[p], cols[p]; z)|`` for every ``z``; shape ``(len(zs), len(rows))``."""
    ucols, inv = np.unique(cols, return_inverse=True)
    out = np.empty((len(zs), rows.size))
    for a, X in enumerate(resolvent_sweep(op, ucols, zs)):
        out[a] = np.abs(X[rows, inv])
    return out


def _grid(ens: EnsembleSpec, I, z) -> list:
    if z is not None:
        return [complex(z)]
    I = ens.energy if I is None else I
    if I is None:
        raise ValueError("need either z or an energy interval")
    return [complex(E, ens.eps) for E in energy_nodes(I, ens.nodes_per_unit)]


def green_samples(ens: EnsembleSpec, x, y, z=None, I=None, threads: int = 1) -> np.ndarray:
    """``|G(x, y)|`` per realization and energy node, shape ``(M, nodes)``."""
    tmpl = ens.template()
    i, j = index_of(tmpl, x), index_of(tmpl, y)
    zs = _grid(ens, I, z)
    rows, cols = np.array([i]), np.array([j])
    out = run_realizations(lambda k: _abs_green(ens.operator(k, tmpl), rows, cols, zs)[:, 0], ens.M, threads)
    return np.array(out)


def pair_moment_table(ens: EnsembleSpec, pairs_idx: np.ndarray, s: float, I=None, z=None,
                      threads: int = 1) -> np.ndarray:
    """Energy-averaged ``|G|^s`` per realization for many index pairs, shape ``(M, P)``.

    The solves are done for the distinct second entries of the pairs, so
    many ``x`` against few ``y`` costs one factorization per energy node.
    """
    tmpl = ens.template()
    pairs_idx = np.asarray(pairs_idx, dtype=np.intp).reshape(-1, 2)
    zs = _grid(ens, I, z)
    rows, cols = pairs_idx[:, 0], pairs_idx[:, 1]
    if np.unique(rows).size < np.unique(cols).size:
        rows, cols = cols, rows  # G is symmetric

    def one(k):
        g = _abs_green(ens.operator(k, tmpl), rows, cols, zs) ** s
        return np.array([math.fsum(g[:, p]) / len(zs) for p in range(g.shape[1])])

    return np.array(run_realizations(one, ens.M, threads))


def fractional_moment(ens: EnsembleSpec, x, y, s: float, z=None, threads: int = 1) -> MomentEstimate:
    """``E|G(x, y; z)|^s`` (or its energy average over ``ens.energy`` when ``z`` is None)."""
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    tmpl = ens.template()
    pair = np.array([[index_of(tmpl, x), index_of(tmpl, y)]])
    table = pair_moment_table(ens, pair, s, None, z, threads)
    q = {"x": str(x), "y": str(y), "s": s, "lambda": ens.dspec.lam}
    if z is not None:
        q["z"] = [complex(z).real, complex(z).imag]
    else:
        q.update({"I": list(ens.energy), "nodes_per_unit": ens.nodes_per_unit, "eps": ens.eps})
    return estimate(table[:, 0], s=s, query=q,
                    seeds={"seed": int(ens.dspec.seed), "first": ens.first_realization, "M": ens.M})


def averaged_moment(ens: EnsembleSpec, x, y, s: float, I, threads: int = 1) -> MomentEstimate:
    """``|I|^{-1} int_I E|G(x, y; E + i eps)|^s dE`` on a midpoint energy grid."""
    return fractional_moment(ens.with_(energy=tuple(I)), x, y, s, None, threads)


def moment_chain_check(ens: EnsembleSpec, x, y, I, r: float, s: float, t: float,
                       threads: int = 1) -> dict:
    """Jensen/Hoelder interpolation between three exponents on one sample set."""
    if not 0 < r < s < t < 1:
        raise ValueError("need 0 < r < s < t < 1")
    g = green_samples(ens.with_(energy=tuple(I)), x, y, None, I, threads)
    m = {e: math.fsum(np.ravel(g ** e)) / g.size for e in (r, s, t)}
    low = m[r] ** (s / r)
    high = m[t] ** ((s - r) / (t - r)) * m[r] ** ((t - s) / (t - r))
    return {"low": low, "mid": m[s], "high": high,
            "ok": bool(low <= m[s] * (1 + 1e-12) and m[s] <= high * (1 + 1e-12))}


# --------------------------------------------------------------------------
# conditional bounds

def _density_rule(dspec: DisorderSpec, panels: int, order: int):
    """Composite Gauss-Legendre nodes and ``rho``-weights over the support."""
    lo, hi = dspec.support(1e-10)
    edges = np.linspace(lo, hi, panels + 1)
    xg, wg = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * xg + 0.5 * (a + b)
        nodes.append(t)
        weights.append(0.5 * (b - a) * wg * dspec.density(t))
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)
    return nodes, weights / math.fsum(weights)


def _green_2d(op: OperatorMatrix, i: int, j: int, u1, u2, v1: np.ndarray, v2: np.ndarray, z) -> np.ndarray:
    """``G(x,y;z)`` with ``lam v1 N_u1 + lam v2 N_u2`` added, on the tensor grid ``v1 x v2``.

    ``u2 = None`` gives a single column.
    """
    H = op.dense().astype(complex)
    D0 = np.diag(H).copy() - z
    N1 = op.lam * op.number_operator(u1)
    N2 = None if u2 is None else op.lam * op.number_operator(u2)
    out = np.empty((v1.size, 1 if N2 is None else v2.size), dtype=complex)
    e = np.zeros(H.shape[0], dtype=complex)
    e[j] = 1.0
    diag = np.diag_indices_from(H)
    for a, va in enumerate(v1):
        for b in range(out.shape[1]):
            H[diag] = D0 + va * N1 if N2 is None else D0 + va * N1 + v2[b] * N2
            out[a, b] = np.linalg.solve(H, e)[i]
    return out


def _site_value(op: OperatorMatrix, u) -> float:
    """``V(u)`` read off the configuration with every particle at ``u``."""
    u = tuple(np.atleast_1d(u).tolist())
    return float(op.potential[op.index(tuple([u] * op.n))] / op.n)


def _strip_sites(op: OperatorMatrix, sites) -> OperatorMatrix:
    """Operator with ``V = 0`` at the given sites."""
    pot = op.potential.copy()
    for u in {tuple(np.atleast_1d(s).tolist()) for s in sites}:
        pot = pot - op.number_operator(u) * _site_value(op, u)
    return OperatorMatrix(op.region, op.n, op.lam, op.kinetic, pot, op.interaction, op.occ)


def conditional_moment_bound(ens: EnsembleSpec, x, y, s: float, z, u1, u2,
                             backgrounds: int = 20, panels: int = 8, order: int = 8,
                             weak_grid: int = 121, threads: int = 1,
                             extreme_background: bool = False) -> dict:
    """Conditional mean of ``|G(x,y;z)|^s`` over ``V(u1), V(u2)`` at frozen backgrounds.

    The conditional mean is a tensor Gauss quadrature against the density.
    The bound ``C_s (K E0)^# / (|lam| E0)^s`` uses
    ``C_s = 4^{1-s} C_w^s / (1-s)`` with ``C_w`` the largest empirical value
    of ``t |lam| E0 W(t)`` on the ``[-E0, E0]`` shift box (``W`` as in the
    weak-L1 estimate); ``C_w`` is reported.
    """
    tmpl = ens.template()
    i, j = index_of(tmpl, x), index_of(tmpl, y)
    same = tuple(np.atleast_1d(u1)) == tuple(np.atleast_1d(u2))
    if tmpl.number_operator(u1)[i] < 1 or tmpl.number_operator(u2)[j] < 1:
        raise ValueError("x must have a particle at u1 and y one at u2")
    K, E0, _ = regularity_constants(ens.dspec)
    lam = abs(ens.dspec.lam)
    nodes, wts = _density_rule(ens.dspec, panels, order)
    lo, hi = ens.dspec.support(1e-10)
    c = 0.5 * (lo + hi)
    box = np.linspace(c - E0, c + E0, weak_grid)

    def one(k):
        op = ens.operator(k, tmpl)
        if extreme_background:
            vals = np.full(len(ens.region), hi)
            m = len(ens.region)
            idx = np.indices((m,) * ens.n).reshape(ens.n, -1).T
            pot = vals[idx].sum(axis=1)
            op = OperatorMatrix(op.region, op.n, op.lam, op.kinetic, pot, op.interaction, op.occ)
        op0 = _strip_sites(op, [u1] if same else [u1, u2])
        if same:
            g = _green_2d(op0, i, j, u1, None, nodes, nodes[:1], z)[:, 0]
            cond = float(np.abs(g) ** s @ wts)
            gw = np.abs(_green_2d(op0, i, j, u1, None, box, box[:1], z)[:, 0])
            area = 2 * E0
            cell = area / box.size
        else:
            g = _green_2d(op0, i, j, u1, u2, nodes, nodes, z)
            cond = float(wts @ (np.abs(g) ** s) @ wts)
            gw = np.abs(_green_2d(op0, i, j, u1, u2, box, box, z)).ravel()
            area = (2 * E0) ** 2
            cell = area / gw.size
        # W(t) = E0^{-#} |{|G'| >= t}|; sup_t t W(t) over the sampled values
        srt = np.sort(gw)[::-1]
        W = (np.arange(1, srt.size + 1) * cell) / E0 ** (1 if same else 2)
        cw = float(np.max(srt * W)) * lam * E0
        return cond, cw

    out = run_realizations(one, backgrounds, threads)
    conds = np.array([o[0] for o in out])
    C_w = float(max(o[1] for o in out))
    sharp = 1 if same else 2
    C_s = 4 ** (1 - s) * C_w ** s / (1 - s)
    bound = C_s * (K * E0) ** sharp / (lam * E0) ** s
    return {"conditional_means": conds.tolist(), "worst": float(conds.max()), "bound": bound,
            "ratio": float(conds.max() / bound), "C_w": C_w, "C_s_impl": C_s, "sharp": sharp,
            "ok": bool(conds.max() <= bound), "K": K, "E0": E0}


def weak_l1_profile(op: OperatorMatrix, x, y, u1, u2, z, E0: float = 1.0, grid: int = 401,
                    center: float = 0.0) -> dict:
    """Measure of ``{|G'| > t}`` over shifts ``(v1, v2) in [-E0, E0]^2`` and its tail exponent."""
    i, j = index_of(op, x), index_of(op, y)
    same = u2 is None
    op0 = _strip_sites(op, [u1] if same else [u1, u2])
    box = np.linspace(center - E0, center + E0, grid)
    g = np.abs(_green_2d(op0, i, j, u1, u2, box, box if not same else box[:1], z)).ravel()
    cell = (2 * E0) ** (1 if same else 2) / g.size
    srt = np.sort(g)[::-1]
    meas = np.arange(1, srt.size + 1) * cell
    # tail fit where the level set holds 0.2%..5% of the box
    frac = meas / (2 * E0) ** (1 if same else 2)
    sel = (frac >= 2e-3) & (frac <= 5e-2)
    slope = float(np.polyfit(np.log(srt[sel]), np.log(meas[sel]), 1)[0]) if sel.sum() > 3 else float("nan")
    return {"t": srt, "measure": meas, "tail_exponent": slope}


def double_sampling_check(dspec: DisorderSpec, h: Callable[[float], float],
                          singular_points: Sequence[float] = (), rtol: float = 1e-6) -> dict:
    """``int h rho <= K E0 int int_{|V'|<=E0} h(V+V') dV'/E0 rho(V) dV`` by quadrature."""
    K, E0, _ = regularity_constants(dspec)
    lo, hi = dspec.support(1e-12)
    pts = sorted(set(list(dspec.breakpoints()) + list(singular_points)))

    def q(f, a, b, extra=()):
        inner = [p for p in list(pts) + list(extra) if a < p < b]
        edges = [a] + sorted(set(inner)) + [b]
        return math.fsum(integrate.quad(f, e0, e1, limit=200, epsabs=1e-13, epsrel=1e-10)[0]
                         for e0, e1 in zip(edges[:-1], edges[1:]) if e1 > e0)

    lhs = q(lambda v: h(v) * float(dspec.density(v)), lo, hi)
    inner = lambda V: q(h, V - E0, V + E0)
    shifted = [p - E0 for p in pts] + [p + E0 for p in pts]
    rhs = K * q(lambda V: inner(V) * float(dspec.density(V)), lo, hi, shifted)
    return {"lhs": lhs, "rhs": rhs, "K": K, "E0": E0, "ok": bool(lhs <= rhs * (1 + rtol))}


def _mu_x_of_v(op0: OperatorMatrix, i: int, u, I, v: np.ndarray) -> np.ndarray:
    H = op0.dense()
    N = op0.number_operator(u)
    out = np.empty(v.size)
    a, b = I
    for k, vk in enumerate(v):
        w, V = np.linalg.eigh(H + op0.lam * vk * np.diag(N))
        keep = (w >= a) & (w <= b)
        out[k] = float(np.sum(V[i, keep] ** 2))
    return out


def wegner_check(ens: EnsembleSpec, x, u, I, backgrounds: int = 20, order: int = 16,
                 threads: int = 1, z: float = 3.0, full_average_M: int = 0) -> dict:
    """Average of ``<x|P_I|x>`` over ``V(u)`` at frozen backgrounds against ``||rho|| |I| / (|lam| N_u(x))``.

    The ``V(u)`` integral is exact up to Gauss-Legendre error: it is split at
    the values where an eigenvalue crosses an end of ``I``.
    """
    tmpl = ens.template()
    i = index_of(tmpl, x)
    Nx = float(tmpl.number_operator(u)[i])
    if Nx < 1:
        raise ValueError("x must have a particle at u")
    _, _, rho_inf = regularity_constants(ens.dspec)
    lam = abs(ens.dspec.lam)
    rhs = rho_inf * float(I[1] - I[0]) / (lam * Nx)
    lo, hi = ens.dspec.support(1e-12)
    xg, wg = np.polynomial.legendre.leggauss(order)

    def one(k):
        op0 = _strip_sites(ens.operator(k, tmpl), [u])
        bps = _v_breakpoints(op0.dense(), op0.number_operator(u), op0.lam, I)
        edges = np.unique(np.concatenate([[lo, hi], bps[(bps > lo) & (bps < hi)],
                                          [p for p in ens.dspec.breakpoints() if lo < p < hi]]))
        acc = []
        for a, b in zip(edges[:-1], edges[1:]):
            t = 0.5 * (b - a) * xg + 0.5 * (a + b)
            acc.append(0.5 * (b - a) * float(np.sum(wg * ens.dspec.density(t) * _mu_x_of_v(op0, i, u, I, t))))
        return math.fsum(acc)

    vals = np.array(run_realizations(one, backgrounds, threads))
    report = {"conditional": vals.tolist(), "worst": float(vals.max()), "rhs": rhs, "N_u_x": Nx,
              "ok": bool(vals.max() <= rhs * (1 + 1e-9)), "rho_inf": rho_inf, "I": list(I)}
    if full_average_M:
        def full(k):
            from .spectral import diagonalize
            es = diagonalize(ens.operator(k, tmpl))
            pxx, _ = es.projections(i, i)
            keep = (es.group_values >= I[0]) & (es.group_values <= I[1])
            return float(np.sum(pxx[keep]))
        est = estimate(run_realizations(full, full_average_M, threads))
        report.update({"full_mean": est.mean, "full_se": est.std_error,
                       "full_status": status_from_bound(est.mean, rhs, est.std_error, z)})
    return report
