import numpy as np
import pytest

from confsym import InputError
from confsym.curvature import curvature_from_jet, riemann_symmetry_residual, weyl_from, weyl_trace_residual


def conformal_sphere_jet(x):
    """Jet of ``4 |dx|^2 / (1 + |x|^2)^2`` (unit round sphere), derived by hand."""
    x = np.asarray(x, dtype=float)
    n = x.size
    w = 1 + x @ x
    I = np.eye(n)
    c = 4 / w ** 2
    dc = -16 * x / w ** 3
    d2c = -16 * I / w ** 3 + 96 * np.outer(x, x) / w ** 4
    d3c = (96 * (np.einsum("ab,c->abc", I, x) + np.einsum("ac,b->abc", I, x) + np.einsum("bc,a->abc", I, x))
           / w ** 4 - 768 * np.einsum("a,b,c->abc", x, x, x) / w ** 5)
    return (c * I, np.einsum("ij,a->ija", I, dc), np.einsum("ij,ab->ijab", I, d2c),
            np.einsum("ij,abc->ijabc", I, d3c))


def product_jet(j1, j2):
    n1, n2 = j1[0].shape[0], j2[0].shape[0]
    n = n1 + n2
    out = []
    for k, (a, b) in enumerate(zip(j1, j2)):
        arr = np.zeros((n, n) + (n,) * k)
        arr[(slice(0, n1), slice(0, n1)) + (slice(0, n1),) * k] = a
        arr[(slice(n1, n), slice(n1, n)) + (slice(n1, n),) * k] = b
        out.append(arr)
    return out


@pytest.mark.parametrize("n", [3, 4, 5])
def test_round_sphere(n, rng):
    x = rng.uniform(-0.8, 0.8, n)
    J = curvature_from_jet(*conformal_sphere_jet(x))
    assert J.scalar[0] == pytest.approx(n * (n - 1), abs=1e-10)
    assert np.max(np.abs(J.ricci[0] - (n - 1) * J.g[0])) < 1e-10
    assert np.max(np.abs(J.weyl)) < 1e-10
    assert np.max(np.abs(J.nabla_riemann)) < 1e-9
    assert riemann_symmetry_residual(J.riemann) < 1e-12


def test_sphere_sectional_curvature_one(rng):
    x = rng.uniform(-0.5, 0.5, 4)
    J = curvature_from_jet(*conformal_sphere_jet(x))
    g, R = J.g[0], J.riemann[0]
    # R_abab / (g_aa g_bb - g_ab^2) = 1 for orthogonal coordinate fields
    assert R[0, 1, 0, 1] / (g[0, 0] * g[1, 1]) == pytest.approx(1.0, abs=1e-12)


def test_product_of_spheres_weyl_nonzero_and_parallel(rng):
    jet = product_jet(conformal_sphere_jet(rng.uniform(-0.5, 0.5, 2)),
                      conformal_sphere_jet(rng.uniform(-0.5, 0.5, 2)))
    J = curvature_from_jet(*jet)
    assert J.scalar[0] == pytest.approx(4.0, abs=1e-10)
    assert np.max(np.abs(J.ricci[0] - J.g[0])) < 1e-10
    assert np.max(np.abs(J.weyl)) > 0.1
    assert np.max(np.abs(J.nabla_riemann)) < 1e-9
    assert np.max(np.abs(J.nabla_weyl)) < 1e-9
    assert weyl_trace_residual(J.weyl, J.ginv) < 1e-12


def test_batch_matches_single(rng):
    pts = rng.uniform(-0.6, 0.6, (3, 4))
    jets = [conformal_sphere_jet(x) for x in pts]
    batch = curvature_from_jet(*[np.stack(parts) for parts in zip(*jets)])
    assert len(batch) == 3 and batch.n == 4
    for i, jet in enumerate(jets):
        single = curvature_from_jet(*jet)
        assert np.allclose(single.riemann[0], batch.riemann[i])


def test_flat_metric_all_zero():
    n = 5
    g = np.diag([1.0, -1.0, 1.0, 1.0, -1.0])
    J = curvature_from_jet(g, np.zeros((n,) * 3), np.zeros((n,) * 4), np.zeros((n,) * 5))
    for T in (J.riemann, J.ricci, J.weyl, J.nabla_riemann, J.nabla_weyl, J.christoffel):
        assert np.max(np.abs(T)) == 0.0


def test_weyl_needs_dimension_three():
    g = np.eye(2)[None]
    with pytest.raises(InputError):
        weyl_from(np.zeros((1, 2, 2, 2, 2)), np.zeros((1, 2, 2)), np.zeros(1), g)


def test_symmetry_residual_detects_damage(rng):
    J = curvature_from_jet(*conformal_sphere_jet(rng.uniform(-0.5, 0.5, 4)))
    R = J.riemann.copy()
    R[0, 0, 1, 2, 3] += 0.5
    assert riemann_symmetry_residual(R) > 0.01
