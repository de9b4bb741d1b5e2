import math

import numpy as np
import pytest

from multiloc.ensemble import EnsembleSpec, estimate
from multiloc.geometry import Region
from multiloc.model import DisorderSpec, InteractionSpec, assemble
from multiloc.moments import (averaged_moment, conditional_moment_bound, double_sampling_check,
                              fractional_moment, moment_chain_check, wegner_check)


def scalar_ens(lam, M=200, seed=1):
    return EnsembleSpec(Region.explicit([0]), 1, DisorderSpec("uniform", (0.0, 1.0), lam, seed), M=M)


def test_single_sample_has_no_error_bar():
    est = fractional_moment(scalar_ens(10.0, M=1), (0,), (0,), 0.3, z=1.0 + 0.1j)
    assert est.M == 1 and math.isnan(est.std_error)


def test_scalar_closed_form():
    s, lam = 0.3, 20.0
    est = fractional_moment(scalar_ens(lam, M=4000), (0,), (0,), s, z=2 + 0.5 * lam + 1e-6j)
    exact = lam ** -s * 2 ** s / (1 - s)
    assert abs(est.mean - exact) <= 3 * est.std_error


def test_moment_determinism_across_threads(three_site_pair):
    x = ((0,), (1,))
    a = averaged_moment(three_site_pair, x, x, 0.3, (20.0, 22.0), threads=1)
    b = averaged_moment(three_site_pair, x, x, 0.3, (20.0, 22.0), threads=4)
    assert a.mean == b.mean and a.std_error == b.std_error


def test_deep_gap_small(three_site_pair):
    x = ((0,), (1,))
    assert averaged_moment(three_site_pair, x, x, 0.3, (500.0, 501.0)).mean < 0.3


def test_moment_chain(three_site_pair):
    r = moment_chain_check(three_site_pair, ((0,), (1,)), ((1,), (2,)), (15.0, 25.0), 0.2, 0.3, 0.6)
    assert r["ok"]


def test_conditional_bound_single_site_branch(three_site_pair):
    x = ((0,), (1,))
    r = conditional_moment_bound(three_site_pair, x, x, 0.3, 20.0 + 0.01j, (0,), (0,), backgrounds=4)
    assert r["ok"]


def test_conditional_bound_lambda_scaling(three_site_pair):
    x, y = ((0,), (1,)), ((1,), (2,))
    w = [conditional_moment_bound(three_site_pair.with_lam(lam), x, y, 0.3, 1.0 + 0.5 * lam + 0.01j,
                                  (0,), (2,), backgrounds=6)["worst"] for lam in (20.0, 40.0)]
    assert 0.8 * 2 ** -0.3 <= w[1] / w[0] <= 1.2 * 2 ** -0.3


def test_conditional_bound_extreme_background(three_site_pair):
    x, y = ((0,), (1,)), ((1,), (2,))
    r = conditional_moment_bound(three_site_pair, x, y, 0.3, 21.0 + 0.01j, (0,), (2,), backgrounds=2,
                                 extreme_background=True)
    assert r["ok"]


def test_double_sampling_examples():
    spec = DisorderSpec("uniform", (0.0, 1.0))
    r = double_sampling_check(spec, lambda v: 1.0)
    assert np.isclose(r["lhs"], 1.0) and np.isclose(r["rhs"], 2.0) and r["ok"]
    assert double_sampling_check(spec, lambda v: float(0.2 <= v <= 0.4), singular_points=(0.2, 0.4))["ok"]
    assert double_sampling_check(spec, lambda v: abs(v - 0.3) ** -0.5 if v != 0.3 else 0.0,
                                 singular_points=(0.3,))["ok"]


def test_wegner_rhs_halves_with_double_occupation(three_site_pair):
    I = (23.95, 24.05)
    one = wegner_check(three_site_pair, ((0,), (1,)), (0,), I, backgrounds=3)
    two = wegner_check(three_site_pair, ((0,), (0,)), (0,), I, backgrounds=3)
    assert np.isclose(one["rhs"], 2 * two["rhs"])
    assert one["ok"] and two["ok"]


def test_wegner_vanishes_with_interval(three_site_pair):
    x = ((0,), (1,))
    widths = [0.4, 0.1, 0.025]
    worst = [wegner_check(three_site_pair, x, (0,), (20.0 - w / 2, 20.0 + w / 2), backgrounds=4)["worst"]
             for w in widths]
    assert worst[2] <= worst[0] * widths[2] / widths[0] * 1.5 + 1e-12
