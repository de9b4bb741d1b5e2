import numpy as np
import pytest

from conftest import random_symmetric
from multiloc.correlator import correlator
from multiloc.geometry import Region
from multiloc.model import DisorderSpec, InteractionSpec, assemble, sample_disorder
from multiloc.spectral import (SingularResolventError, diagonalize, evolve_kernel, green, green_eig,
                               representative_configs, resolvent_sweep)


@pytest.mark.parametrize("A, expected", [
    ([[2.0, -1.0], [-1.0, 2.0]], [1.0, 3.0]),
    ([[4.5]], [4.5]),
])
def test_diagonalize_small(A, expected):
    assert np.allclose(diagonalize(np.array(A)).eigenvalues, expected)


def test_kronecker_sum_spectrum():
    op = assemble(Region.explicit([0, 1]), 2, DisorderSpec(lam=0.0))
    es = diagonalize(op)
    assert np.allclose(es.eigenvalues, [2, 4, 4, 6])
    assert len(es.starts) == 3


def test_green_scalar():
    A = np.array([[2.7]])
    assert np.isclose(green(A, 0, 0, 1j), 1 / (2.7 - 1j))


def test_green_two_by_two():
    assert np.isclose(green(np.array([[2.0, -1.0], [-1.0, 2.0]]), 0, 0, 0.0), 2 / 3)


def test_green_singular():
    with pytest.raises(SingularResolventError):
        green(np.array([[2.0, -1.0], [-1.0, 2.0]]), 0, 0, 1.0)


def test_green_conjugation_and_eigen_agreement():
    rng = np.random.default_rng(6)
    A = random_symmetric(rng, 6)
    es = diagonalize(A)
    z = 0.3 + 0.2j
    g = green(A, 1, 4, z)
    assert np.isclose(green(A, 1, 4, np.conj(z)), np.conj(g))
    assert np.isclose(green_eig(es, 1, 4, z), g)


def test_resolvent_sweep_matches_dense():
    reg = Region.box(3, 1)
    spec = DisorderSpec("uniform", (0.0, 1.0), 4.0, 2)
    op = assemble(reg, 2, spec, InteractionSpec((1.0,)), sample_disorder(spec, reg, 0))
    H = op.dense()
    cols = [0, 5, 17]
    zs = [1.0 + 1e-3j, 3.5 + 0.1j]
    for z, G in zip(zs, resolvent_sweep(op, cols, zs)):
        ref = np.linalg.inv(H - z * np.eye(op.dim))[:, cols]
        assert np.allclose(G, ref, atol=1e-10)


def test_evolve_kernel_completeness():
    rng = np.random.default_rng(7)
    es = diagonalize(random_symmetric(rng, 5))
    assert np.isclose(evolve_kernel(es, 2, 2, None, 0.0), 1)
    assert np.isclose(evolve_kernel(es, 1, 3, None, 0.0), 0, atol=1e-12)


def test_evolve_kernel_dominated_by_correlator():
    rng = np.random.default_rng(8)
    for _ in range(10):
        es = diagonalize(random_symmetric(rng, 2))
        q = correlator(es, 0, 1, None, 1.0)
        for t in rng.uniform(-20, 20, size=20):
            assert abs(evolve_kernel(es, 0, 1, None, t)) <= q + 1e-12


def test_representative_configs():
    reg = Region.explicit([0])
    es = diagonalize(assemble(reg, 1, DisorderSpec(lam=1.0)))
    assert representative_configs(es, es.eigenvalues[0]) == [((0,),)]
    rng = np.random.default_rng(9)
    for k in range(50):
        spec = DisorderSpec("uniform", (0.0, 1.0), float(rng.uniform(0.5, 10)), k)
        r = Region.box(1, 1)
        es = diagonalize(assemble(r, 2, spec, InteractionSpec((1.0,)), sample_disorder(spec, r, 0)))
        for E in es.group_values:
            assert len(representative_configs(es, E)) >= 1


def test_representative_configs_degenerate_pair():
    reg = Region.explicit([0, 1])
    es = diagonalize(assemble(reg, 2, DisorderSpec(lam=0.0)))
    reps = representative_configs(es, 4.0)
    assert ((0,), (1,)) in reps and ((1,), (0,)) in reps
