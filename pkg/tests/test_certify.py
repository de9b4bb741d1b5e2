import math

import numpy as np
import pytest

from multiloc.certify import (RecursionParams, compose_noninteracting, compute_B, decay_family,
                              factorization_check, fit_decay, ladder, mu_formulas, recursion_lemma,
                              rescaling_check, two_region_factorization_check)
from multiloc.ensemble import EnsembleSpec
from multiloc.geometry import Region
from multiloc.model import DisorderSpec, InteractionSpec, assemble, sample_disorder
from multiloc.spectral import diagonalize


def test_ladder():
    assert ladder(2, 2) == [2, 6, 14]


def test_recursion_example():
    L0, nu = 2.0, 1.0
    eta = 2.0 / L0 ** 0  # (1) with a = 1, b = 0, p = 0: eta^2 >= eta
    params = RecursionParams(1.0, 0.0, 0.0, nu, L0, eta)
    r = recursion_lemma(params, 0.5, k_max=30)
    assert r["failed"] == [] and r["ok"]
    assert np.isclose(r["mu"], -math.log(0.5 + eta * math.exp(-nu * L0)) / L0)


def test_recursion_zero_sequence():
    r = recursion_lemma(RecursionParams(1.0, 0.0, 0.0, 1.0, 2.0, 1.0), 0.0)
    assert r["ok"] and all(row["log_S"] == -math.inf for row in r["sequence"][1:])


def test_recursion_guard():
    r = recursion_lemma(RecursionParams(1.0, 0.0, 0.0, 1.0, 1.0, 5.0), 0.9)
    assert "(2)" in r["failed"] and r["claim"] is None and r["ok"] is None


def test_recursion_guard_first_hypothesis():
    r = recursion_lemma(RecursionParams(4.0, 1.0, 1.0, 1.0, 1.0, 0.5), 0.01)
    assert "(1)" in r["failed"]


def test_recursion_no_underflow():
    r = recursion_lemma(RecursionParams(1.0, 1.0, 1.0, 3.0, 4.0, 2.0), 0.1, k_max=60)
    assert r["ok"] and np.all(np.isfinite([row["log_bound"] for row in r["sequence"]]))


def test_mu_second_formula_reversed():
    for x in (0.01, 0.1, 0.3, 0.49):
        assert not mu_formulas(x, 2.0)["alt_is_lower_bound"]
    assert mu_formulas(0.5, 2.0)["alt_is_lower_bound"]


def test_fit_exact_exponential():
    r = np.arange(6.0)
    f = fit_decay(r, 2 * np.exp(-r / 3))
    assert np.isclose(f.A, 2, atol=1e-6) and np.isclose(f.xi, 3, atol=1e-6)
    assert f.status == "fitted" and f.r2 > 0.999999


def test_fit_undetermined_on_flat_data():
    assert fit_decay(np.arange(6.0), np.ones(6) + 0.01 * np.sin(np.arange(6))).status == "undetermined"


@pytest.mark.parametrize("r, m", [([0, 1, 2], [1, 0.5, 0.2]), ([0, 1, 2, 3], [1, 0.5, 0, 0.1])])
def test_fit_rejects_bad_input(r, m):
    with pytest.raises(ValueError):
        fit_decay(r, m)


def test_decay_family():
    fam = decay_family(2, 1, 3)
    assert fam[0] == (((0,), (0,)), ((0,), (0,))) and fam[3][1] == ((3,), (3,))


def test_compose_two_sites():
    reg = Region.explicit([0, 1])
    op1 = assemble(reg, 1, DisorderSpec(lam=0.0))
    comp = compose_noninteracting(op1, op1)
    H1 = op1.dense()
    assert np.allclose(comp.operator.dense(), np.kron(H1, np.eye(2)) + np.kron(np.eye(2), H1))
    assert np.allclose(diagonalize(comp.operator).eigenvalues, [2, 4, 4, 6])


def test_compose_equals_noninteracting_model():
    reg = Region.box(1, 1)
    spec = DisorderSpec("uniform", (0.0, 1.0), 3.0, 4)
    f = sample_disorder(spec, reg, 0)
    op1 = assemble(reg, 1, spec, None, f)
    full = assemble(reg, 2, spec, InteractionSpec((0.0,)), f)
    assert np.array_equal(compose_noninteracting(op1, op1).operator.dense(), full.dense())


def test_factorization_generic_and_degenerate():
    reg = Region.box(1, 1)
    spec = DisorderSpec("uniform", (0.0, 1.0), 3.0, 4)
    f = sample_disorder(spec, reg, 0)
    opJ = assemble(reg, 1, spec, None, f)
    opK = assemble(reg, 2, spec, InteractionSpec((1.0,)), f)
    comp = compose_noninteracting(opJ, opK)
    r = factorization_check(comp, (-1,), ((0,), (1,)), (1,), ((1,), (-1,)))
    assert r["ok"] and r["sumset_err"] < 1e-9 and abs(r["gap"]) < 1e-8
    same = factorization_check(comp, (-1,), ((0,), (1,)), (1,), ((0,), (1,)))
    q = same["rhs"]
    assert same["ok"] and np.isclose(q, same["rhs"])
    flat = assemble(reg, 1, DisorderSpec(lam=0.0))
    deg = factorization_check(compose_noninteracting(flat, flat), (-1,), (0,), (1,), (0,))
    assert deg["ok"]


def test_factorization_marginal_reduction():
    reg = Region.box(1, 1)
    spec = DisorderSpec("uniform", (0.0, 1.0), 2.0, 5)
    f = sample_disorder(spec, reg, 0)
    op = assemble(reg, 1, spec, None, f)
    r = factorization_check(compose_noninteracting(op, op), (-1,), (0,), (1,), (0,))
    from multiloc.correlator import correlator
    assert np.isclose(correlator(diagonalize(op), (0,), (0,), None, 1.0), 1.0)
    assert r["ok"]


def test_two_region_guard():
    ens = EnsembleSpec(Region.explicit([0, 1, 2, 3]), 1, DisorderSpec(lam=10.0), M=5)
    with pytest.raises(ValueError):
        two_region_factorization_check(ens, [0, 1], [2, 3], (0,), (3,), 0.3, 1.0 + 0.1j)


def test_two_region_holds():
    ens = EnsembleSpec(Region.explicit([0, 1, 2, 3, 4]), 1, DisorderSpec("uniform", (0.0, 1.0), 20.0, 3), M=30)
    r = two_region_factorization_check(ens, [0, 1], [3, 4], (0,), (4,), 0.3, 10.0 + 0.1j)
    assert np.isfinite(r["C_fit"]) and r["C_fit"] > 0


def test_compute_B_small_at_strong_disorder():
    ens = EnsembleSpec(Region.box(2, 1), 1, DisorderSpec("uniform", (0.0, 1.0), 50.0, 1), M=20)
    B = compute_B(ens, 2, 0.3, I=(24.0, 26.0))
    assert B.mean > 0 and np.isfinite(B.C_fit)
    weak = compute_B(ens.with_lam(10.0), 2, 0.3, I=(4.0, 6.0))
    assert B.mean < weak.mean


@pytest.mark.slow
def test_rescaling_strong_disorder_consistent():
    ens = EnsembleSpec(Region.box(2, 1), 2, DisorderSpec("uniform", (0.0, 1.0), 80.0, 2),
                       InteractionSpec((0.5,)), M=40)
    r = rescaling_check(ens, 2, 0.3)
    assert r["status"] == "consistent"
