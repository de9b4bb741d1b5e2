import math

import numpy as np
import pytest
import scipy.sparse as sp

from multiloc.geometry import Region
from multiloc.model import (DisorderSpec, InteractionSpec, assemble, interaction_energy,
                            interaction_norm_bound, occupation, regularity_constants, sample_disorder)


def test_sample_disorder_support_and_determinism():
    reg = Region.explicit([0, 1, 2])
    spec = DisorderSpec("uniform", (0.0, 1.0), 1.0, 42)
    f0 = sample_disorder(spec, reg, 0)
    assert f0.values.shape == (3,) and np.all((f0.values >= 0) & (f0.values <= 1))
    assert np.array_equal(f0.values, sample_disorder(spec, reg, 0).values)
    assert not np.array_equal(f0.values, sample_disorder(spec, reg, 1).values)


@pytest.mark.parametrize("spec, rho_inf", [
    (DisorderSpec("uniform", (0.0, 1.0)), 1.0),
    (DisorderSpec("uniform", (0.0, 2.0)), 0.5),
    (DisorderSpec("gaussian", (0.0, 1.0)), 1 / math.sqrt(2 * math.pi)),
])
def test_regularity_rho_inf(spec, rho_inf):
    assert np.isclose(regularity_constants(spec)[2], rho_inf)


def test_regularity_uniform_unit():
    assert regularity_constants(DisorderSpec("uniform", (0.0, 1.0))) == (1.0, 1.0, 1.0)


def test_regularity_inequality_holds_gaussian():
    spec = DisorderSpec("gaussian", (0.0, 1.0))
    K, E0, _ = regularity_constants(spec)
    v = np.linspace(-6, 6, 241)
    u = np.linspace(-E0, E0, 2001)
    mass = np.array([np.trapezoid(spec.density(x - u), u) for x in v])
    assert np.all(spec.density(v) <= K * mass * (1 + 1e-6))


@pytest.mark.parametrize("c, u, expected", [((0, 0, 3), 0, 2), ((0, 0, 3), 5, 0), ((1, 2), 2, 1)])
def test_occupation(c, u, expected):
    assert occupation(c, u) == expected


@pytest.mark.parametrize("c, ispec, expected", [
    ((0, 0), InteractionSpec((1.0,), 1.0), 0.0),
    ((0, 1), InteractionSpec((1.0,), 1.0), 1.0),
    ((0, 1), InteractionSpec((0.0,), 1.0), 0.0),
    ((0, 9), InteractionSpec((1.0,), 1.0), 0.0),
])
def test_interaction_energy(c, ispec, expected):
    assert interaction_energy(c, ispec) == expected


@pytest.mark.parametrize("ispec, n, d, expected", [
    (InteractionSpec((1.0,), 1.0), 2, 1, 4.0),
    (InteractionSpec((0.0,), 1.0), 2, 1, 0.0),
    (InteractionSpec((0.5,), 2.0), 3, 1, 12.0),
])
def test_interaction_norm_bound(ispec, n, d, expected):
    assert np.isclose(interaction_norm_bound(ispec, n, d), expected)


def test_interaction_bounded_by_norm():
    rng = np.random.default_rng(5)
    ispec = InteractionSpec((0.7, -0.3), 1.5, "inverse_product")
    bound = interaction_norm_bound(ispec, 3, 1)
    for _ in range(200):
        assert abs(interaction_energy(rng.integers(-3, 4, size=3), ispec)) <= bound


def test_assemble_single_site():
    reg = Region.explicit([0])
    spec = DisorderSpec("uniform", (0.0, 1.0), 3.0, 1)
    f = sample_disorder(spec, reg, 0)
    H = assemble(reg, 1, spec, None, f).dense()
    assert np.allclose(H, [[2 + 3.0 * f.values[0]]])


def test_assemble_path_graph():
    H = assemble(Region.explicit([0, 1]), 1, DisorderSpec(lam=5.0)).dense()
    assert np.allclose(H, [[2, -1], [-1, 2]])


def test_assemble_two_particles_is_kronecker_sum():
    reg = Region.explicit([0, 1])
    spec = DisorderSpec("uniform", (0.0, 1.0), 2.0, 3)
    f = sample_disorder(spec, reg, 0)
    h1 = assemble(reg, 1, spec, None, f).dense()
    H = assemble(reg, 2, spec, InteractionSpec((0.0,)), f).dense()
    assert np.allclose(H, np.kron(h1, np.eye(2)) + np.kron(np.eye(2), h1))


def test_assemble_permutation_symmetric():
    reg = Region.box(2, 1)
    spec = DisorderSpec("gaussian", (0.0, 1.0), 1.5, 8)
    op = assemble(reg, 2, spec, InteractionSpec((1.0,)), sample_disorder(spec, reg, 0))
    m = len(reg)
    P = np.zeros((m * m, m * m))
    for a in range(m):
        for b in range(m):
            P[a * m + b, b * m + a] = 1
    H = op.dense()
    assert np.allclose(P @ H @ P.T, H)
    assert sp.issparse(op.matrix)
