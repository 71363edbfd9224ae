import numpy as np
import pytest
from scipy.integrate import solve_ivp

from confsym import ConsistencyError, InputError
from confsym.fncore import PeriodicGridFunction, from_callable
from confsym.odespace import (DiagonalOperatorPath, HillSystem, InnerSpace, IntegerLattice, MatrixOperatorPath,
                              SolutionSpace, build_lattice, companion_basis, companion_matrix, dim4_obstruction,
                              lagrangian_residual, lattice_monodromy, omega, solve_first_order,
                              solve_first_order_rk4, traceless_square_identity, translation_operator)


def test_inner_space_signature():
    inner = InnerSpace.from_blocks([[1, 1, -1], [-1, 1, 1]])
    assert inner.dim == 6
    assert inner.signature() == (4, 2)
    assert inner.inner([1, 2, 3, 0, 0, 0], [1, 1, 1, 0, 0, 0]) == pytest.approx(0.0)


@pytest.mark.parametrize("signs", [[1, 0, -1], [2, 1, 1], []])
def test_inner_space_rejects(signs):
    with pytest.raises(InputError):
        InnerSpace(signs)


def test_first_order_against_rk4(build1):
    u0 = np.array([1.0, -0.5, 2.0])
    for t in (0.37, 1.0, 2.5):
        closed = solve_first_order(build1.path, u0, t)
        rk4 = solve_first_order_rk4(build1.path, u0, t, steps=4000)
        assert np.max(np.abs(closed - rk4)) < 1e-8 * max(1.0, np.max(np.abs(closed)))


def test_solution_satisfies_ode(build1):
    sol = build1.space.solution([0.3, 1.0, -1.2])
    t = np.linspace(0, 2, 7)
    u, udot = sol.state(t)
    assert np.max(np.abs(udot - build1.path.diag_at(t) * u)) < 1e-12


def test_constant_riccati_solution():
    path = MatrixOperatorPath.constant(np.diag([2.0, 1.0, -3.0]), 14 / 3, np.diag([-2 / 3, -11 / 3, 13 / 3]), 1.0)
    assert path.riccati_residual() < 1e-12
    space = SolutionSpace(path)
    u = space.state([1.0, 1.0, 1.0], 0.5)[0]
    assert u == pytest.approx(np.exp(0.5 * np.array([2.0, 1.0, -3.0])), rel=1e-9)


def test_translation_closed_vs_integrated(build2):
    closed = translation_operator(build2.space, "closed")
    integ = translation_operator(build2.space, "integrate")
    assert np.max(np.abs(closed - integ)) < 1e-9 * np.max(np.abs(closed))


def test_translation_of_roots(build1, cubic56):
    T = translation_operator(build1.space)
    assert np.diag(T) == pytest.approx(cubic56.roots.as_array(), rel=1e-9)


def test_det_translation_matches_trace_integral(build1):
    T = translation_operator(build1.space, "integrate")
    closed = np.exp(-build1.path.trace().integrate_period())
    assert np.linalg.det(T) == pytest.approx(closed, rel=1e-9)
    assert np.linalg.det(T) == pytest.approx(1.0, abs=1e-8)


def test_unknown_translation_method(build1):
    with pytest.raises(InputError):
        translation_operator(build1.space, "spline")


def test_hill_against_solve_ivp(build1):
    hill = HillSystem(build1.path)
    f, a = build1.path.f, build1.path.a_entries
    y0 = np.array([1.0, 0.5, -1.0, 0.2, -0.3, 0.7])

    def rhs(t, y):
        return np.concatenate([y[3:], (f(t) + a) * y[:3]])

    ref = solve_ivp(rhs, (0, 1.7), y0, method="DOP853", rtol=1e-12, atol=1e-13).y[:, -1]
    u, udot = hill.state(y0, 1.7)
    assert np.max(np.abs(np.concatenate([u, udot]) - ref)) < 1e-8


def test_hill_wronskian_one(build1):
    hill = HillSystem(build1.path)
    Phi = hill.fundamental(np.linspace(-2, 2, 9))
    assert np.max(np.abs(np.linalg.det(Phi) - 1)) < 1e-9


def test_hill_translation_composes(build1):
    hill = HillSystem(build1.path)
    y0 = np.array([0.4, -1.0, 0.3, 1.0, 0.1, 0.2])
    twice = hill.translate(hill.translate(y0, 1), 1)
    assert np.max(np.abs(twice - hill.translate(y0, 2))) < 1e-9 * np.max(np.abs(twice))
    assert np.max(np.abs(hill.translate(hill.translate(y0, 3), -3) - y0)) < 1e-8


def test_translation_shifts_time(build1):
    hill = HillSystem(build1.path)
    y0 = np.array([0.4, -1.0, 0.3, 1.0, 0.1, 0.2])
    t = 0.31
    shifted = hill.state(hill.translate(y0, 1), t)[0]
    assert np.max(np.abs(shifted - hill.state(y0, t - build1.path.period)[0])) < 1e-9


def test_hill_rejects_matrix_path():
    path = MatrixOperatorPath.constant([[0, 1], [2, 0]], 2.0, np.zeros((2, 2)), 1.0)
    with pytest.raises(InputError):
        HillSystem(path)


def test_omega_constant_and_invariant(build2, rng):
    hill = HillSystem(build2.path)
    y1, y2 = rng.normal(size=(2, 12))
    val, resid = omega(hill.solution(y1), hill.solution(y2), build2.inner)
    assert resid < 1e-9 * max(1.0, abs(val))
    assert val == pytest.approx(hill.omega0(y1, y2, build2.inner), abs=1e-9)
    moved = hill.omega0(hill.translate(y1, 1), hill.translate(y2, 1), build2.inner)
    assert moved == pytest.approx(val, abs=1e-8 * max(1.0, abs(val)))


def test_omega_rejects_non_solutions(build1):
    class Fake:
        system = HillSystem(build1.path)

        def __init__(self, power):
            self.power = power

        def state(self, t):
            t = np.asarray(t)
            u = np.stack([t ** self.power] * 3, -1)
            return u, self.power * u / np.where(t == 0, 1.0, t)[..., None]

    with pytest.raises(ConsistencyError):
        omega(Fake(1), Fake(3), build1.inner)


def test_lagrangian_for_diagonal(build2):
    assert lagrangian_residual(build2.space, build2.inner) < 1e-9


def test_non_lagrangian_fixture():
    path = MatrixOperatorPath.constant([[0, 1], [2, 0]], 2.0, np.zeros((2, 2)), 1.0)
    inner = InnerSpace([1, 1])
    # B is not symmetric, so Omega(e1, e2) = B21 - B12 = 1
    assert lagrangian_residual(SolutionSpace(path), inner) == pytest.approx(1.0, abs=1e-8)


def test_companion_basis_5_6(cubic56):
    V = companion_basis(cubic56.roots, 5, 6)
    lam = cubic56.roots.as_array()
    assert np.max(np.abs(V @ np.diag(lam) @ np.linalg.inv(V) - companion_matrix(5, 6))) < 1e-10


def test_companion_basis_rejects_wrong_pair(cubic56):
    with pytest.raises(ConsistencyError):
        companion_basis(cubic56.roots, 6, 7)


@pytest.mark.parametrize("j", [1, 2])
def test_lattice_5_6(septuple56, cubic56, j):
    block = SolutionSpace(DiagonalOperatorPath.from_blocks(septuple56, 1))
    lat = build_lattice(j, block, companion_basis(cubic56.roots, 5, 6))
    assert lat.integer_residual() < 1e-6
    assert abs(lat.det() - 1) < 1e-8
    assert lat.basis_matrix.shape == (3 * j, 3 * j)
    assert np.allclose(np.rint(lat.monodromy_int)[:3, :3], companion_matrix(5, 6))


def test_perturbed_lattice_breaks_integrality(septuple56, cubic56):
    block = SolutionSpace(DiagonalOperatorPath.from_blocks(septuple56, 1))
    lat = build_lattice(1, block, companion_basis(cubic56.roots, 5, 6))
    G = lat.basis_matrix.copy()
    G[:, 0] *= 1.1
    G[0, 0] += 0.1
    bad = IntegerLattice(G, lattice_monodromy(G, translation_operator(block)))
    assert bad.integer_residual() > 1e-3


def test_build_lattice_rejects_non_integer(septuple56):
    block = SolutionSpace(DiagonalOperatorPath.from_blocks(septuple56, 1))
    with pytest.raises(ConsistencyError):
        build_lattice(1, block, np.eye(3) + 0.1 * np.arange(9).reshape(3, 3))


def test_check_admissible(build1):
    assert build1.path.check_admissible() is build1.path
    f = build1.path.f
    bad = DiagonalOperatorPath(f, build1.path.diag_entries, np.array([1.0, 1.0, 1.0]))
    with pytest.raises(InputError, match="traceless"):
        bad.check_admissible()
    zero = DiagonalOperatorPath(f, build1.path.diag_entries, np.zeros(3))
    with pytest.raises(InputError, match="nonzero"):
        zero.check_admissible()


def test_riccati_violation_detected(build1):
    p = build1.path
    shifted = tuple(b + 0.01 for b in p.diag_entries)
    with pytest.raises(ConsistencyError):
        DiagonalOperatorPath(p.f, shifted, p.a_entries).check_admissible()


def test_dim4_reference():
    rho = from_callable(lambda t: 2 + np.cos(2 * np.pi * t), 1.0, 256)
    res = dim4_obstruction(rho, 1.0, 1.0)
    assert res.detT == pytest.approx(np.exp(-1 / np.sqrt(3)), abs=1e-9)
    assert res.margin == pytest.approx(1 - np.exp(-1 / np.sqrt(3)), abs=1e-9)
    assert res.margin >= 0.01


@pytest.mark.parametrize("r", [0.0])
def test_dim4_rejects_zero_r(r):
    rho = PeriodicGridFunction.constant(2.0, 1.0, 64)
    with pytest.raises(InputError):
        dim4_obstruction(rho, r)


def test_dim4_rejects_sign_change():
    rho = from_callable(lambda t: np.cos(2 * np.pi * t), 1.0, 64)
    with pytest.raises(InputError):
        dim4_obstruction(rho, 1.0)


def test_traceless_square_identity(rng):
    for _ in range(50):
        assert traceless_square_identity(rng.normal(size=(2, 2))) < 1e-12
    with pytest.raises(InputError):
        traceless_square_identity(np.eye(3))
