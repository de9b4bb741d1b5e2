import math

import numpy as np
import pytest

from conftest import random_symmetric
from multiloc.correlator import (abs_green_power_integral, boole_check, check_logconvexity, correlator,
                                 correlator_from_gf_bound, dynamical_dominance, gf_from_correlator_bound,
                                 qf_check, scalar_averaging_closed_form, spectral_average_check,
                                 tail_bound_check)
from multiloc.ensemble import EnsembleSpec
from multiloc.geometry import Region
from multiloc.model import DisorderSpec, InteractionSpec
from multiloc.spectral import diagonalize

PATH2 = np.array([[2.0, -1.0], [-1.0, 2.0]])

# printed increase inequality fails here; the log-convexity form holds
INCREASE_COUNTEREXAMPLE = np.array([[3.2, -0.9, 1.6], [-0.9, 0.2, 0.1], [1.6, 0.1, 3.6]])


def test_correlator_examples():
    rng = np.random.default_rng(10)
    es = diagonalize(random_symmetric(rng, 4))
    assert np.isclose(correlator(es, 1, 1, None, 0.0), 1.0)
    assert correlator(es, 0, 2, (es.eigenvalues[0] - 5, es.eigenvalues[0] - 1), 0.5) == 0.0
    assert np.isclose(correlator(diagonalize(PATH2), 0, 1, None, 1.0), 1.0)


def test_logconvexity_equal_exponents():
    es = diagonalize(random_symmetric(np.random.default_rng(11), 4))
    r = check_logconvexity(es, 0, 1, None, 0.4, 0.4, 0.3)
    assert np.isclose(r["Q_mid"], r["Q2_rhs"])


def test_logconvexity_random():
    rng = np.random.default_rng(12)
    for _ in range(100):
        es = diagonalize(random_symmetric(rng, int(rng.integers(2, 6))))
        s0, s1, th = rng.uniform(0, 1, 3)
        r = check_logconvexity(es, 0, 1, None, s0, s1, th)
        assert r["Q2_ok"] and r["Q1_ok"]
        if "increase_derived_ok" in r:
            assert r["increase_derived_ok"]


def test_increase_printed_form_counterexample():
    r = check_logconvexity(diagonalize(INCREASE_COUNTEREXAMPLE), 0, 1, None, 0.95, 1.0, 0.5)
    assert not r["increase_printed_ok"]
    assert r["increase_derived_ok"]
    assert r["Q_t"] > r["increase_printed_rhs"]


def test_abs_green_power_integral_scalar():
    # int_{a-1}^{a+1} |a - E|^{-1/2} dE = 4
    a = 1.3
    assert np.isclose(abs_green_power_integral(np.array([a]), np.array([1.0]), (a - 1, a + 1), 0.5), 4.0)
    fixed = abs_green_power_integral(np.array([a]), np.array([1.0]), (a - 1, a + 1), 0.5, method="fixed")
    assert np.isclose(fixed, 4.0, rtol=1e-8)


def test_abs_green_power_integral_zero_residue():
    val = abs_green_power_integral(np.array([0.0, 1.0]), np.array([0.0, 1.0]), (-1, 2), 0.5)
    ref = 2 * (2 ** 0.5 + 1)
    assert np.isfinite(val) and np.isclose(val, ref)


def test_gf_bound_scalar():
    a = 2.0
    r = gf_from_correlator_bound(diagonalize(np.array([[a]])), 0, 0, (a - 1, a + 1), 0.5)
    assert np.isclose(r["lhs"], 4.0)
    assert np.isclose(r["rhs"], 2 * 2 ** 0.5 / 0.5)
    assert r["ok"]


def test_gf_bound_random():
    rng = np.random.default_rng(13)
    for _ in range(30):
        es = diagonalize(random_symmetric(rng, 2))
        assert gf_from_correlator_bound(es, 0, 1, (-2.0, 2.0), float(rng.uniform(0.1, 0.9)))["ok"]


def test_gf_bound_spectral_gap():
    es = diagonalize(np.diag([0.0, 100.0]) + 1e-3 * np.array([[0, 1], [1, 0]]))
    r = gf_from_correlator_bound(es, 0, 1, (40.0, 60.0), 0.5)
    assert r["ok"] and r["lhs"] < r["rhs"] < 0.1


@pytest.mark.parametrize("p, x, t, measure", [
    ([1.0], [0.0], 2.0, 1.0),
    ([1.0, 1.0], [0.0, 1.0], 1.0, 4.0),
    ([0.3, 0.7], [-2.0, 5.0], 0.25, 8.0),
])
def test_boole(p, x, t, measure):
    r = boole_check(p, x, t)
    assert np.isclose(r["measure"], measure, rtol=1e-9) and r["ok"]


def test_qf_and_dynamics():
    rng = np.random.default_rng(14)
    es = diagonalize(random_symmetric(rng, 5))
    f = np.exp(1j * rng.uniform(0, 6, len(es.starts)))
    assert qf_check(es, 0, 3, f)["ok"]
    assert dynamical_dominance(es, 0, 3, (-1.0, 1.0), np.linspace(0, 50, 40))["ok"]
    with pytest.raises(ValueError):
        qf_check(es, 0, 3, 2 * f)


def test_scalar_averaging_closed_form():
    r = scalar_averaging_closed_form(0.7, 3.0, (0.0, 4.0), 0.4)
    assert r["ok"]


def test_spectral_average_one_particle():
    spec = DisorderSpec("uniform", (0.0, 1.0), 1.0, 3)
    r = spectral_average_check(Region.explicit([0, 1]), 1, (0,), (0,), (1,), (0.0, 4.0), 0.5, spec)
    assert r["N_u_x"] == 1 and r["ok"] and r["ok_derived"]


def test_spectral_average_double_occupation_prefactor():
    spec = DisorderSpec("uniform", (0.0, 1.0), 1.0, 3)
    r = spectral_average_check(Region.explicit([0, 1]), 2, (0,), ((0,), (0,)), ((0,), (1,)),
                               (0.0, 6.0), 0.5, spec)
    assert r["N_u_x"] == 2
    assert r["ok_derived"]
    # the two prefactor conventions differ by exactly N^s
    assert np.isclose(r["lhs_printed"] / r["lhs_derived"], 2 ** 0.5)


def test_spectral_average_requires_particle_at_u():
    with pytest.raises(ValueError):
        spectral_average_check(Region.explicit([0, 1]), 1, (0,), (1,), (1,), (0.0, 4.0), 0.5, DisorderSpec())


def test_correlator_from_gf_bound_strong_disorder(three_site_pair):
    r = correlator_from_gf_bound(three_site_pair.with_lam(50.0), ((0,), (1,)), ((1,), (2,)), (0,),
                                 (10.0, 30.0), 0.5, M=30)
    assert r["status"] != "violated"
    assert r["lhs_mean"] <= r["rhs_mean"]


def test_correlator_from_gf_bound_gap(three_site_pair):
    r = correlator_from_gf_bound(three_site_pair, ((0,), (1,)), ((0,), (1,)), (0,), (500.0, 501.0), 0.5, M=5)
    assert r["lhs_mean"] == 0.0 and r["status"] == "pass"


def test_tail_bound():
    ens = EnsembleSpec(Region.box(1, 1), 1, DisorderSpec("uniform", (0.0, 1.0), 5.0, 1), M=20)
    r = tail_bound_check(ens, (0,), [0.0, 30.0])
    assert np.isclose(r["rows"][0]["lhs_mean"], 1.0)
    assert r["rows"][1]["lhs_mean"] == 0.0
    assert r["status"] == "pass"


def test_tail_bound_monotone(three_site_pair):
    r = tail_bound_check(three_site_pair, ((0,), (1,)), np.linspace(0, 30, 16), M=20)
    assert r["monotone"] and r["status"] != "violated"
