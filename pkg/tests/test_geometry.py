import itertools

import numpy as np
import pytest

from multiloc import geometry as geo
from multiloc.geometry import ConfigSetSpec, Region


@pytest.mark.parametrize("c, expected", [
    ((0, 0, 3), {(0,), (3,)}),
    ((5,), {(5,)}),
    (((0, 0), (1, 0)), {(0, 0), (1, 0)}),
])
def test_footprint(c, expected):
    assert geo.footprint(c) == frozenset(expected)


@pytest.mark.parametrize("c, expected", [
    ((0, 3, 4), 4.0), ((7,), 0.0), (((0, 0), (3, 4)), 5.0),
])
def test_diam(c, expected):
    assert geo.diam(c) == expected


@pytest.mark.parametrize("c, expected", [((0, 3, 4), 3.0), ((0, 5), 5.0), ((0, 1, 10), 9.0)])
def test_splitting_width(c, expected):
    assert geo.splitting_width(c) == expected
    assert geo.splitting_width_bruteforce(c) == expected


def test_splitting_width_matches_bruteforce():
    rng = np.random.default_rng(1)
    for _ in range(300):
        n, d = rng.integers(1, 7), rng.integers(1, 3)
        c = rng.integers(-6, 7, size=(n, d))
        assert np.isclose(geo.splitting_width(c), geo.splitting_width_bruteforce(c), rtol=0, atol=1e-12)


def test_splitting_width_sandwich():
    rng = np.random.default_rng(2)
    for _ in range(300):
        n = int(rng.integers(2, 6))
        c = rng.integers(-20, 21, size=(n, 2))
        dm, lw = geo.diam(c), geo.splitting_width(c)
        assert dm / (n - 1) <= lw + 1e-12 and lw <= dm + 1e-12


@pytest.mark.parametrize("a, b, expected", [
    ((0,), (5,), 5.0), ((0, 10), (0,), 10.0), ((0, 5), (5, 0), 0.0),
])
def test_dist_hausdorff(a, b, expected):
    assert geo.dist_hausdorff(a, b) == expected


@pytest.mark.parametrize("a, b, expected", [((0, 5), (5, 0), 0.0), ((0, 0), (1, 2), 3.0), ((3,), (3,), 0.0)])
def test_dist_sym(a, b, expected):
    assert geo.dist_sym(a, b) == expected


def test_dist_sym_matches_bruteforce():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        a, b = rng.integers(-5, 6, size=(2, n, 2))
        assert np.isclose(geo.dist_sym(a, b), geo.dist_sym_bruteforce(a, b), atol=1e-12)
        assert geo.dist_sym(a, b) <= geo.dist_ordered(a, b) + 1e-12


def test_dist_sym_shape_mismatch():
    with pytest.raises(ValueError):
        geo.dist_sym((0, 1), (0,))


@pytest.mark.parametrize("sites, n, kw, expected", [
    ([0, 1], 2, {}, 4),
    ([0, 1, 2], 2, {"anchor": [0]}, 5),
    ([0, 1, 2, 3, 4], 2, {"max_diam": 1}, 13),
])
def test_enumerate_configs_counts(sites, n, kw, expected):
    spec = ConfigSetSpec(Region.explicit(sites), n, **kw)
    assert len(list(geo.enumerate_configs(spec))) == expected


def test_enumerate_configs_anchor_list():
    spec = ConfigSetSpec(Region.explicit([0, 1, 2]), 2, anchor=[0])
    got = {tuple(int(v[0]) for v in c) for c in geo.enumerate_configs(spec)}
    assert got == {(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)}


def test_enumerate_configs_bruteforce_filter():
    reg = Region.box(2, 1)
    spec = ConfigSetSpec(reg, 3, anchor=[1], max_diam=2)
    brute = [c for c in itertools.product(range(-2, 3), repeat=3)
             if 1 in c and max(c) - min(c) <= 2]
    assert len(list(geo.enumerate_configs(spec))) == len(brute)


def test_anchor_outside_region():
    with pytest.raises(ValueError):
        ConfigSetSpec(Region.explicit([0, 1]), 2, anchor=[5])


def test_config_cap():
    with pytest.raises(geo.ConfigurationCapError):
        geo.config_array(Region.box(10, 1), 6, cap=1000)


@pytest.mark.parametrize("r, n, d, expected", [(2, 2, 1, 16), (1, 1, 3, 1), (3, 3, 1, 432)])
def test_count_bounds(r, n, d, expected):
    assert geo.count_bounds_check(r, n, d)[0] == expected


def test_enumerated_counts_respect_bounds():
    reg = Region.box(6, 1)
    for n in (1, 2, 3):
        for r in (1, 2, 3):
            spec = ConfigSetSpec(reg, n, anchor=[0], max_diam=r)
            count = len(list(geo.enumerate_configs(spec)))
            anchor, free = geo.count_bounds_check(r, n, 1, len(reg))
            assert count <= anchor and count <= free
