"""Solution spaces of ``u' = B(t) u`` and ``u'' = f u + A u``.

Conventions
-----------
``V`` carries a diagonal pseudo-Euclidean inner product given by a sign
vector (:class:`InnerSpace`). Solutions are identified with their data at
``t = 0``: ``u(0)`` for the first-order space ``L`` and ``(u(0), u'(0))``
for the second-order space ``E``. The translation operator is
``(T u)(t) = u(t - p)``, so on initial data it is the propagator from
``0`` to ``-p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import block_diag, expm

from ._validation import ConsistencyError, InputError, check_signs
from .fncore import PeriodicGridFunction

RICCATI_TOL = 1e-7
OMEGA_REJECT = 1e-6
ODE_RTOL = 1e-12
ODE_ATOL = 1e-13


@dataclass(frozen=True, eq=False)
class InnerSpace:
    signs: np.ndarray

    def __post_init__(self):
        signs = check_signs(self.signs).copy()
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_blocks(cls, blocks):
        return cls(np.concatenate([np.asarray(b, dtype=float) for b in blocks]))

    @property
    def dim(self):
        return self.signs.size

    @property
    def gram(self):
        return np.diag(self.signs)

    def inner(self, u, w):
        return np.sum(self.signs * np.asarray(u) * np.asarray(w), axis=-1)

    def signature(self):
        return int(np.sum(self.signs > 0)), int(np.sum(self.signs < 0))


# -- operator paths ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalOperatorPath:
    """``B(t) = diag(b_1(t), ..., b_m(t))`` and ``A = diag(a_1, ..., a_m)``."""

    f: PeriodicGridFunction
    diag_entries: tuple
    a_entries: np.ndarray

    def __post_init__(self):
        entries = tuple(self.diag_entries)
        a = np.asarray(self.a_entries, dtype=float).ravel()
        if len(entries) != a.size or a.size == 0:
            raise InputError("need one constant a_i per diagonal entry b_i")
        for b in entries:
            if b.n != self.f.n or b.period != self.f.period:
                raise InputError("all entries must share the grid of f")
        a.setflags(write=False)
        object.__setattr__(self, "diag_entries", entries)
        object.__setattr__(self, "a_entries", a)

    @property
    def period(self):
        return self.f.period

    @property
    def n(self):
        return self.f.n

    @property
    def dim(self):
        return len(self.diag_entries)

    @property
    def A(self):
        return np.diag(self.a_entries)

    def trace(self):
        out = self.diag_entries[0]
        for b in self.diag_entries[1:]:
            out = out + b
        return out

    def B(self, t):
        """``B(t)`` as ``(..., m, m)`` matrices."""
        vals = np.stack([np.asarray(b(t)) for b in self.diag_entries], axis=-1)
        return vals[..., :, None] * np.eye(self.dim)

    def diag_at(self, t):
        return np.stack([np.asarray(b(t)) for b in self.diag_entries], axis=-1)

    def riccati_residual(self):
        return max((b.derivative() + b * b - self.f - a).norm_inf()
                   for b, a in zip(self.diag_entries, self.a_entries))

    def check_admissible(self, tol=RICCATI_TOL):
        """Enforce ``A`` traceless and nonzero and the Riccati equation."""
        if abs(np.sum(self.a_entries)) > 1e-12 * max(1.0, np.max(np.abs(self.a_entries))):
            raise InputError("A must be traceless")
        if not np.any(self.a_entries):
            raise InputError("A must be nonzero")
        res = self.riccati_residual()
        if res >= tol:
            raise ConsistencyError(f"Riccati residual {res:.3e} exceeds {tol:.1e}")
        return self

    @classmethod
    def from_blocks(cls, septuple, j):
        """Direct sum of ``j`` copies of ``diag(alpha, beta, gamma)``."""
        entries = (septuple.alpha, septuple.beta, septuple.gamma) * j
        return cls(septuple.f, entries, np.tile(septuple.constants, j))


@dataclass(frozen=True, eq=False)
class MatrixOperatorPath:
    """A general periodic ``B(t)`` given entrywise by grid functions.

    Used for non-diagonal fixtures; solutions are found by integration.
    """

    f: PeriodicGridFunction
    entries: tuple  # rows of PeriodicGridFunction
    A: np.ndarray

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        m = len(rows)
        if m == 0 or any(len(r) != m for r in rows):
            raise InputError("entries must form a square matrix")
        A = np.asarray(self.A, dtype=float)
        if A.shape != (m, m):
            raise InputError("A has the wrong shape")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "A", A)

    @property
    def period(self):
        return self.f.period

    @property
    def n(self):
        return self.f.n

    @property
    def dim(self):
        return len(self.entries)

    def B(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim, self.dim))
        for i, row in enumerate(self.entries):
            for j, b in enumerate(row):
                out[..., i, j] = b(t)
        return out

    def node_matrices(self):
        return np.array([[b.samples for b in row] for row in self.entries]).transpose(2, 0, 1)

    def trace(self):
        out = self.entries[0][0]
        for i in range(1, self.dim):
            out = out + self.entries[i][i]
        return out

    def riccati_residual(self):
        Bn = self.node_matrices()
        dB = np.array([[b.derivative().samples for b in row]
                       for row in self.entries]).transpose(2, 0, 1)
        res = dB + Bn @ Bn - self.f.samples[:, None, None] * np.eye(self.dim) - self.A
        return float(np.max(np.abs(res)))

    @classmethod
    def constant(cls, B, f, A, period, n=256):
        B = np.asarray(B, dtype=float)
        const = lambda v: PeriodicGridFunction.constant(v, period, n)
        rows = [[const(v) for v in row] for row in B]
        return cls(const(f), rows, A)


# -- solutions ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Solution:
    """A solution identified by its data at ``t = 0`` inside ``system``."""

    system: object
    data: np.ndarray

    def state(self, t):
        return self.system.state(self.data, t)

    def __call__(self, t):
        return self.state(t)[0]


def rk4_propagate(rhs, y0, t0, t1, steps):
    """Classical fixed-step fourth-order Runge-Kutta from ``t0`` to ``t1``."""
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / steps
    t = t0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


class SolutionSpace:
    """The first-order space ``L`` of solutions of ``u' = B(t) u``.

    Diagonal paths use the closed form ``u_i(t) = u_i(0) exp(int_0^t b_i)``;
    general paths integrate the fundamental matrix over one period and
    extend it by ``Phi(t + kp) = Phi(t) Phi(p)^k``.
    """

    def __init__(self, path):
        self.path = path
        self.diagonal = isinstance(path, DiagonalOperatorPath)

    @property
    def dim(self):
        return self.path.dim

    @property
    def period(self):
        return self.path.period

    @cached_property
    def _exponents(self):
        return [b.antiderivative() for b in self.path.diag_entries]

    def exponent(self, t):
        """``int_0^t b_i`` for each diagonal entry, shape ``(..., m)``."""
        t = np.asarray(t, dtype=float)
        return np.stack([m * t + per(t) - per.samples[0] for m, per in self._exponents], axis=-1)

    def _rhs(self, t, y):
        m = self.dim
        return (self.path.B(t) @ y.reshape(m, -1)).ravel()

    @cached_property
    def _one_period(self):
        m = self.dim
        sol = solve_ivp(self._rhs, (0.0, self.period), np.eye(m).ravel(), method="DOP853",
                        rtol=ODE_RTOL, atol=ODE_ATOL, dense_output=True)
        if not sol.success:
            raise ConsistencyError(sol.message)
        return sol

    def fundamental(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        m, p = self.dim, self.period
        if self.diagonal:
            return np.exp(self.exponent(t))[..., :, None] * np.eye(m)
        sol = self._one_period
        M = sol.sol(p).reshape(m, m)
        out = np.empty(t.shape + (m, m))
        for idx, tt in np.ndenumerate(t):
            k = int(np.floor(tt / p))
            tau = tt - k * p
            Phi = sol.sol(tau).reshape(m, m)
            out[idx] = Phi @ np.linalg.matrix_power(M if k >= 0 else np.linalg.inv(M), abs(k))
        return out

    def state(self, u0, t):
        """``(u(t), u'(t))`` for the solution with ``u(0) = u0``."""
        u0 = np.asarray(u0, dtype=float)
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.diagonal:
            u = u0 * np.exp(self.exponent(t))
            udot = self.path.diag_at(t) * u
        else:
            u = self.fundamental(t) @ u0
            udot = np.einsum("...ij,...j->...i", self.path.B(t), u)
        if scalar:
            return u[0], udot[0]
        return u, udot

    def solution(self, u0):
        return Solution(self, np.asarray(u0, dtype=float))

    def basis(self):
        return [self.solution(e) for e in np.eye(self.dim)]

    def evaluation_matrix(self, t):
        """Matrix of ``u -> u(t)`` in the basis ``u_i(0) = e_i``."""
        return self.fundamental(t)

    def to_second_order(self, u0):
        """Initial data ``(u(0), u'(0))`` of the same solution viewed in ``E``."""
        u0 = np.asarray(u0, dtype=float)
        return np.concatenate([u0, self.path.B(0.0) @ u0])

    def contains(self, y0, tol=1e-9):
        m = self.dim
        y0 = np.asarray(y0, dtype=float)
        u0, v0 = y0[:m], y0[m:]
        return np.max(np.abs(v0 - self.path.B(0.0) @ u0)) <= tol * max(1.0, np.max(np.abs(y0)))


def solve_first_order(path, u0, t):
    """``u(t)`` for ``u' = B u``, ``u(0) = u0`` (closed form on diagonal paths)."""
    return SolutionSpace(path).state(u0, t)[0]


def solve_first_order_rk4(path, u0, t, steps=None):
    """Independent fixed-step RK4 solution (default step ``p/N``)."""
    steps = steps or max(1, int(round(abs(t) / path.period * path.n)))
    return rk4_propagate(lambda s, y: path.B(s) @ y, u0, 0.0, t, steps)


class HillSystem:
    """The second-order space ``E`` for a diagonal ``A`` and scalar ``f``.

    Each coordinate solves ``u_i'' = (f + a_i) u_i``. Given ``b_i`` with
    ``b_i' + b_i^2 = f + a_i``, one solution is ``y1 = exp(int_0^t b_i)``
    and a second one is ``y2 = y1 int_0^t y1^{-2}``; their Wronskian is
    identically one. The integral of ``y1^{-2} = exp(-2 m t) Q(t)`` with
    ``Q`` periodic is evaluated termwise on the Fourier series of ``Q``.
    """

    def __init__(self, path):
        if not isinstance(path, DiagonalOperatorPath):
            raise InputError("HillSystem needs a diagonal operator path")
        self.path = path
        self.first_order = SolutionSpace(path)
        self._setup()

    def _setup(self):
        p, n = self.path.period, self.path.n
        freqs = 2 * np.pi * np.fft.fftfreq(n, d=p / n)
        self._means, self._coefs, self._rates, self._b0 = [], [], [], []
        for b in self.path.diag_entries:
            m, per = b.antiderivative()
            q = np.exp(-2.0 * (per.samples - per.samples[0]))
            c = np.fft.fft(q) / n
            # Nyquist coefficient split evenly between +/- frequency
            c = np.append(c, 0.5 * c[n // 2])
            c[n // 2] *= 0.5
            w = np.append(freqs, -freqs[n // 2])
            self._means.append(m)
            self._coefs.append(c)
            self._rates.append(-2.0 * m + 1j * w)
            self._b0.append(b.samples[0])

    @property
    def dim(self):
        return self.path.dim

    @property
    def period(self):
        return self.path.period

    def _reduction_integral(self, i, t):
        z = self._rates[i]
        c = self._coefs[i]
        tz = np.multiply.outer(t, z)
        safe = np.where(np.abs(z) > 1e-300, z, 1.0)
        terms = np.where(np.abs(z) > 1e-300, np.expm1(tz) / safe, t[..., None] + 0 * tz)
        return np.real(terms @ c)

    def fundamental(self, t):
        """Per-coordinate propagators ``Phi_i(t)``, shape ``(..., m, 2, 2)``.

        ``Phi_i(t)`` maps ``(u_i(0), u_i'(0))`` to ``(u_i(t), u_i'(t))``.
        """
        t = np.asarray(t, dtype=float)
        expo = self.first_order.exponent(t)
        bt = self.path.diag_at(t)
        out = np.empty(t.shape + (self.dim, 2, 2))
        for i in range(self.dim):
            y1 = np.exp(expo[..., i])
            I = self._reduction_integral(i, t)
            y2 = y1 * I
            y1d = bt[..., i] * y1
            y2d = bt[..., i] * y2 + 1.0 / y1
            b0 = self._b0[i]
            out[..., i, 0, 0] = y1 - b0 * y2
            out[..., i, 0, 1] = y2
            out[..., i, 1, 0] = y1d - b0 * y2d
            out[..., i, 1, 1] = y2d
        return out

    @cached_property
    def translation_blocks(self):
        """``T`` on initial data, per coordinate: ``Phi_i(-p)``."""
        return self.fundamental(np.array(-self.period))

    def translation_power(self, k):
        k = int(k)
        base = self.translation_blocks
        if k < 0:
            base = np.linalg.inv(base)
        return np.linalg.matrix_power(base, abs(k))

    def translate(self, y0, k):
        """Initial data of ``T^k u``."""
        m = self.dim
        y0 = np.asarray(y0, dtype=float)
        pair = np.stack([y0[:m], y0[m:]], axis=-1)
        out = np.einsum("iab,ib->ia", self.translation_power(k), pair)
        return np.concatenate([out[:, 0], out[:, 1]])

    def translation_matrix(self, k=1):
        """``T^k`` as a ``2m x 2m`` matrix on ``(u(0), u'(0))``."""
        m = self.dim
        blocks = self.translation_power(k)
        M = np.zeros((2 * m, 2 * m))
        idx = np.arange(m)
        for a in range(2):
            for b in range(2):
                M[a * m + idx, b * m + idx] = blocks[:, a, b]
        return M

    def state(self, y0, t):
        m = self.dim
        y0 = np.asarray(y0, dtype=float)
        scalar = np.ndim(t) == 0
        Phi = self.fundamental(np.atleast_1d(np.asarray(t, dtype=float)))
        pair = np.stack([y0[:m], y0[m:]], axis=-1)
        out = np.einsum("...iab,ib->...ia", Phi, pair)
        u, udot = out[..., 0], out[..., 1]
        if scalar:
            return u[0], udot[0]
        return u, udot

    def solution(self, y0):
        return Solution(self, np.asarray(y0, dtype=float))

    def from_first_order(self, u0):
        return self.first_order.to_second_order(u0)

    def omega0(self, y1, y2, inner):
        """``Omega`` evaluated from initial data (it is constant in ``t``)."""
        m = self.dim
        y1, y2 = np.asarray(y1), np.asarray(y2)
        return float(inner.inner(y1[m:], y2[:m]) - inner.inner(y1[:m], y2[m:]))

    def second_order_residual(self):
        """Max residual of ``u'' = (f + A) u`` inherited from the Riccati equation."""
        return self.path.riccati_residual()


# -- the symplectic form and the translation operator ------------------------


def omega(u, w, inner, nodes=None):
    """``Omega(u, w) = <u', w> - <u, w'>`` sampled on the grid.

    Returns ``(value, constancy_residual)``: the mean over the nodes and
    the largest deviation from it.
    """
    if nodes is None:
        sysm = u.system
        nodes = np.arange(sysm.path.n) * (sysm.period / sysm.path.n)
    uu, ud = u.state(nodes)
    ww, wd = w.state(nodes)
    vals = inner.inner(ud, ww) - inner.inner(uu, wd)
    value = float(np.mean(vals))
    resid = float(np.max(np.abs(vals - value)))
    if resid > OMEGA_REJECT * max(1.0, abs(value)):
        raise ConsistencyError(f"Omega not constant (deviation {resid:.3e}); "
                               "inputs are not genuine solutions")
    return value, resid


def translation_operator(space, method="closed"):
    """Matrix of ``T`` on ``L`` in the basis ``u_i(0) = e_i``.

    ``closed``: ``exp(-int_0^p B)`` (needs commuting ``B(t)``).
    ``integrate``: the fundamental matrix integrated backward one period.
    """
    p = space.period
    if method == "closed":
        if space.diagonal:
            return np.diag(np.exp(-np.array([b.integrate_period()
                                             for b in space.path.diag_entries])))
        Bn = space.path.node_matrices()
        S = Bn.mean(axis=0) * p
        comm = np.max(np.abs(Bn[:, None] @ Bn[None, :] - Bn[None, :] @ Bn[:, None]))
        if comm > 1e-9 * max(1.0, np.max(np.abs(Bn)) ** 2):
            raise InputError("closed form needs pairwise commuting B(t)")
        return expm(-S)
    if method == "integrate":
        m = space.dim
        rhs = lambda t, y: (space.path.B(t) @ y.reshape(m, m)).ravel()
        sol = solve_ivp(rhs, (0.0, -p), np.eye(m).ravel(), method="DOP853",
                        rtol=ODE_RTOL, atol=ODE_ATOL)
        if not sol.success:
            raise ConsistencyError(sol.message)
        return sol.y[:, -1].reshape(m, m)
    raise InputError(f"unknown method {method!r}")


def lagrangian_residual(space, inner):
    """``max |Omega(u_i, u_j)|`` over pairs of basis solutions of ``L``."""
    basis = space.basis()
    worst = 0.0
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            val, _ = omega(basis[i], basis[j], inner)
            worst = max(worst, abs(val))
    return worst


# -- integer lattices --------------------------------------------------------


def companion_matrix(k, l):
    return np.array([[k, -l, 1], [1, 0, 0], [0, 1, 0]], dtype=float)


def companion_basis(roots, k, l, max_cond=1e8, tol=1e-8):
    """Columns ``(L^2, L, 1)`` for each root: eigenvectors of the companion matrix."""
    lam = roots.as_array()
    V = np.vstack([lam ** 2, lam, np.ones(3)])
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > max_cond:
        raise InputError(f"roots nearly coincide (condition number {cond:.3e})")
    conj = V @ np.diag(lam) @ np.linalg.inv(V)
    err = np.max(np.abs(conj - companion_matrix(k, l)))
    if err > tol * max(1.0, k, l):
        raise ConsistencyError(f"conjugation misses the companion matrix by {err:.3e}")
    return V


@dataclass(frozen=True, eq=False)
class IntegerLattice:
    """Lattice generators (columns of ``basis_matrix``) in solution coordinates
    and the matrix of ``T`` in the lattice basis."""

    basis_matrix: np.ndarray
    monodromy_int: np.ndarray

    def integer_residual(self):
        M = self.monodromy_int
        return float(np.max(np.abs(M - np.rint(M))))

    def det(self):
        return float(np.linalg.det(self.monodromy_int))

    def basis_det(self):
        return float(np.linalg.det(self.basis_matrix))

    def generators(self):
        return [self.basis_matrix[:, i] for i in range(self.basis_matrix.shape[1])]


def lattice_monodromy(basis_matrix, T):
    return np.linalg.solve(basis_matrix, T @ basis_matrix)


def build_lattice(j, block, cob, int_tol=1e-6, det_tol=1e-8):
    """``j`` block copies of the companion lattice for a 3-dimensional diagonal block."""
    if block.dim != 3:
        raise InputError("block must be three-dimensional")
    T0 = translation_operator(block)
    G0 = np.linalg.inv(cob)
    G = block_diag(*([G0] * j))
    T = block_diag(*([T0] * j))
    lat = IntegerLattice(G, lattice_monodromy(G, T))
    if abs(lat.basis_det()) <= 1e-10:
        raise ConsistencyError("lattice generators do not span")
    res = lat.integer_residual()
    if res > int_tol:
        raise ConsistencyError(f"lattice monodromy off integers by {res:.3e}")
    if abs(abs(lat.det()) - 1) > det_tol:
        raise ConsistencyError(f"lattice monodromy determinant {lat.det():.12g} != +-1")
    return lat


# -- dimension four ----------------------------------------------------------


@dataclass
class Dim4Result:
    detT: float
    margin: float
    detT_closed: float
    path: DiagonalOperatorPath = field(repr=False)


def dim4_path(rho, r):
    """The pair ``(alpha, beta)`` with ``alpha - beta = rho``, ``a - b = r``, ``a = r/2``."""
    a, b = r / 2, -r / 2
    common = (r - rho.derivative()) / rho
    alpha = 0.5 * (rho + common)
    beta = 0.5 * (-rho + common)
    f = alpha.derivative() + alpha * alpha - a
    return DiagonalOperatorPath(f, (alpha, beta), np.array([a, b]))


def dim4_obstruction(rho, r, p=None):
    """``det T`` on ``L`` for ``n = 4`` and its distance from ``{+1, -1}``.

    ``det T`` is computed by integrating the fundamental matrix and checked
    against the closed form ``exp(-r int_0^p dt/rho)``.
    """
    if p is not None and abs(p - rho.period) > 1e-12 * p:
        raise InputError("p must equal the period of rho")
    r = float(r)
    if r == 0:
        raise InputError("r must be nonzero (A would vanish)")
    if rho.min() <= 0 <= rho.max():
        raise InputError("rho must be nowhere zero")
    path = dim4_path(rho, r)
    detT = float(np.linalg.det(translation_operator(SolutionSpace(path), "integrate")))
    closed = float(np.exp(-r * (1.0 / rho).integrate_period()))
    if abs(detT - closed) > 1e-8 * max(1.0, abs(closed)):
        raise ConsistencyError(f"det T routes disagree: {detT!r} vs {closed!r}")
    return Dim4Result(detT, min(abs(detT - 1), abs(detT + 1)), closed, path)


def traceless_square_identity(F):
    """``max |tl(F^2) - tr(F) tl(F)|`` for a 2x2 matrix ``F``."""
    F = np.asarray(F, dtype=float)
    if F.shape != (2, 2):
        raise InputError("F must be 2x2")
    I = np.eye(2)
    F2 = F @ F
    tl = lambda X: X - np.trace(X) / 2 * I
    return float(np.max(np.abs(tl(F2) - np.trace(F) * tl(F))))
