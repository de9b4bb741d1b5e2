"""Disorder ensembles and deterministic Monte Carlo plumbing."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .geometry import Region
from .model import (DisorderField, DisorderSpec, InteractionSpec, OperatorMatrix,
                    assemble, sample_disorder)

__all__ = ["EnsembleSpec", "MomentEstimate", "estimate", "run_realizations", "energy_nodes",
           "status_from_bound"]

DEFAULT_EPS = 1e-6
NODES_PER_UNIT = 64


@dataclass(frozen=True)
class EnsembleSpec:
    """Model parameters plus Monte Carlo settings.

    ``energy`` is ``None`` (caller supplies ``z``) or an interval over which a
    midpoint grid of ``nodes_per_unit`` nodes per unit length is used.
    """

    region: Region
    n: int
    dspec: DisorderSpec
    ispec: InteractionSpec = field(default_factory=InteractionSpec)
    M: int = 100
    energy: Optional[tuple] = None
    nodes_per_unit: int = NODES_PER_UNIT
    eps: float = DEFAULT_EPS
    first_realization: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")

    def field(self, k: int) -> DisorderField:
        return sample_disorder(self.dspec, self.region, self.first_realization + k)

    def operator(self, k: int, template: Optional[OperatorMatrix] = None) -> OperatorMatrix:
        """Hamiltonian of realization ``k`` (reusing the field-independent parts of ``template``)."""
        f = self.field(k)
        if template is None:
            return assemble(self.region, self.n, self.dspec, self.ispec, f)
        m = len(self.region)
        idx = np.indices((m,) * self.n).reshape(self.n, -1).T
        pot = np.zeros(template.dim)
        for j in range(self.n):
            pot = pot + f.values[idx[:, j]]
        return OperatorMatrix(template.region, template.n, self.dspec.lam, template.kinetic,
                              pot, template.interaction, template.occ)

    def template(self) -> OperatorMatrix:
        return assemble(self.region, self.n, self.dspec, self.ispec, None)

    def with_(self, **kw) -> "EnsembleSpec":
        return replace(self, **kw)

    def with_lam(self, lam: float) -> "EnsembleSpec":
        return replace(self, dspec=self.dspec.with_lam(lam))


def energy_nodes(I: Sequence[float], nodes_per_unit: int = NODES_PER_UNIT) -> np.ndarray:
    """Midpoint grid on ``I`` with at least one node."""
    a, b = float(I[0]), float(I[1])
    k = max(1, int(math.ceil((b - a) * nodes_per_unit - 1e-9)))
    return a + (np.arange(k) + 0.5) * (b - a) / k


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean with its standard error (``nan`` when ``M = 1``)."""

    mean: float
    std_error: float
    M: int
    s: Optional[float] = None
    query: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "M": self.M, "s": self.s,
                "query": self.query, "seeds": self.seeds}


def estimate(samples: Sequence[float], **kw) -> MomentEstimate:
    """Order-exact mean and standard error via compensated summation."""
    x = [float(v) for v in samples]
    M = len(x)
    if M == 0:
        raise ValueError("no samples")
    mean = math.fsum(x) / M
    if M == 1:
        return MomentEstimate(mean, float("nan"), 1, **kw)
    var = math.fsum((v - mean) ** 2 for v in x) / (M - 1)
    return MomentEstimate(mean, math.sqrt(var / M), M, **kw)


def run_realizations(fn: Callable[[int], object], M: int, threads: int = 1) -> List[object]:
    """Evaluate ``fn(k)`` for ``k < M``; results are returned in ``k`` order.

    Each task depends only on its index, so the output does not depend on the
    thread count.
    """
    if threads <= 1 or M <= 1:
        return [fn(k) for k in range(M)]
    with ThreadPoolExecutor(max_workers=int(threads)) as ex:
        return list(ex.map(fn, range(M)))


def status_from_bound(lhs: float, rhs: float, se: float, z: float = 3.0) -> str:
    """``pass`` if ``lhs <= rhs``, ``violated`` beyond ``z`` standard errors, else ``inconclusive``."""
    if not np.isfinite(se):
        se = 0.0
    if lhs <= rhs:
        return "pass"
    if lhs - z * se > rhs:
        return "violated"
    return "inconclusive"
