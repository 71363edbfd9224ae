"""The group ``G = Z x R x E``, its actions, and the compact-quotient criterion.

For ``(k, q, u), (l, r, w)`` in ``G``::

    (k, q, u) . (l, r, w) = (k + l, q + r - Omega(u, T^l w), T^-l u + w)
    (k, q, u) . (t, s, v) = (t + k p, s + q - <u'(t), 2v + u(t)>, v + u(t))
    (k, q, u) . (t, z, w) = (t + k p, z + q - Omega(u, w), T^k (w + u))

and the equivariant map ``(t, z, w) -> (t, z - <w'(t), w(t)>, w(t))``.

Elements of ``E`` are stored as initial data ``(u(0), u'(0))``. Equality
of group elements is tolerance-based (see :func:`element_distance`); it is
a certification notion, not an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import ConsistencyError, InputError
from .certificate import Check, Section
from .odespace import HillSystem, IntegerLattice, SolutionSpace, lattice_monodromy, omega, translation_operator

SECOND_ORDER_TOL = 1e-7


class GroupContext:
    """The data every group element shares: ``E`` (via ``f, A``) and ``<,>``."""

    def __init__(self, system, inner):
        if not isinstance(system, HillSystem):
            system = HillSystem(system)
        if inner.dim != system.dim:
            raise InputError("inner product and system dimensions differ")
        res = system.second_order_residual()
        if res >= SECOND_ORDER_TOL:
            raise ConsistencyError(f"second-order residual {res:.3e} exceeds {SECOND_ORDER_TOL:.0e}")
        self.system = system
        self.inner = inner

    @property
    def dim(self):
        return self.system.dim

    @property
    def period(self):
        return self.system.period

    def omega(self, y1, y2):
        return self.system.omega0(y1, y2, self.inner)

    def element(self, k, q, u=None):
        return GroupElement(k, q, np.zeros(2 * self.dim) if u is None else u, self)

    def identity(self):
        return self.element(0, 0.0)

    def random_element(self, rng, k_max=2, scale=1.0, in_L=False):
        k = int(rng.integers(-k_max, k_max + 1))
        q = float(rng.uniform(-scale, scale))
        if in_L:
            u = self.system.from_first_order(rng.uniform(-scale, scale, self.dim))
        else:
            u = rng.uniform(-scale, scale, 2 * self.dim)
        return self.element(k, q, u)


@dataclass(frozen=True, eq=False)
class GroupElement:
    k: int
    q: float
    u: np.ndarray
    ctx: GroupContext

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        if u.size != 2 * self.ctx.dim:
            raise InputError(f"u must hold {2 * self.ctx.dim} initial values")
        u.setflags(write=False)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "u", u)

    def solution(self):
        return self.ctx.system.solution(self.u)

    def __mul__(self, other):
        return multiply(self, other)

    def __repr__(self):
        return f"GroupElement(k={self.k}, q={self.q!r}, u={np.array2string(self.u, precision=4)})"


@dataclass(frozen=True)
class PointM:
    t: float
    s: float
    v: np.ndarray

    def as_array(self):
        return np.concatenate([[self.t, self.s], np.asarray(self.v, dtype=float)])

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), x[2:].copy())


def multiply(g1, g2):
    ctx = g1.ctx
    if g2.ctx is not ctx:
        raise InputError("elements belong to different solver contexts")
    sysm = ctx.system
    l = g2.k
    q = g1.q + g2.q - ctx.omega(g1.u, sysm.translate(g2.u, l))
    u = sysm.translate(g1.u, -l) + g2.u
    return GroupElement(g1.k + l, q, u, ctx)


def inverse(g):
    return GroupElement(-g.k, -g.q, -g.ctx.system.translate(g.u, g.k), g.ctx)


def commutator(g1, g2):
    return multiply(multiply(g1, g2), multiply(inverse(g1), inverse(g2)))


def element_distance(g1, g2):
    """``inf`` if the ``k`` differ, else ``max(|dq|, |du(0)|, |du'(0)|)``."""
    if g1.k != g2.k:
        return float("inf")
    return float(max(abs(g1.q - g2.q), np.max(np.abs(g1.u - g2.u))))


def act_on_M(g, x):
    u, udot = g.ctx.system.state(g.u, x.t)
    v = np.asarray(x.v, dtype=float)
    s = x.s + g.q - g.ctx.inner.inner(udot, 2 * v + u)
    return PointM(x.t + g.k * g.ctx.period, float(s), v + u)


def act_on_RE(g, y, tol=1e-9):
    """Action on ``R^2 x E``; ``y = (t, z, w)`` with ``w`` initial data in ``L``."""
    t, z, w = y
    w = np.asarray(w, dtype=float)
    sysm = g.ctx.system
    if not sysm.first_order.contains(w, tol):
        raise InputError("w is not in the first-order space L")
    z_new = z + g.q - g.ctx.omega(g.u, w)
    return (t + g.k * g.ctx.period, float(z_new), sysm.translate(w + g.u, g.k))


def equivariant_map(y, ctx):
    t, z, w = y
    wt, wdot = ctx.system.state(np.asarray(w, dtype=float), t)
    return PointM(t, float(z - ctx.inner.inner(wdot, wt)), wt)


def point_distance(x1, x2):
    return float(np.max(np.abs(x1.as_array() - x2.as_array())))


def power(g, m):
    out = g.ctx.identity()
    base = g if m >= 0 else inverse(g)
    for _ in range(abs(int(m))):
        out = multiply(out, base)
    return out


def group_axiom_residuals(ctx, rng, triples=1000, scale=1.0, k_max=2):
    """Worst residuals of associativity and the standard identities.

    For ``g = (k, q, u)`` and ``(0, r, w)``::

        (i)   g^-1 = (-k, -q, -T^k u), and g g^-1 = g^-1 g = 1
        (ii)  g (0, r, 0) = (0, r, 0) g = (k, q + r, u)
        (iii) (0, r, 0)^l g = (k, q + l r, u)
        (iv)  g (0, r, w) g^-1 = (0, r - 2 Omega(u, w), T^k w)
        (v)   [(0, q, u), (0, r, w)] = (0, 2 Omega(w, u), 0)
    """
    sysm = ctx.system
    out = dict.fromkeys(["associativity", "i_inverse", "ii_central", "iii_central_power",
                         "iv_conjugation", "v_commutator"], 0.0)
    dist = element_distance
    el = ctx.element
    for _ in range(triples):
        g1, g2, g3 = (ctx.random_element(rng, k_max=k_max, scale=scale) for _ in range(3))
        k, q, u = g1.k, g1.q, g1.u
        r, w = g2.q, g2.u
        out["associativity"] = max(out["associativity"],
                                   dist(multiply(multiply(g1, g2), g3), multiply(g1, multiply(g2, g3))))
        out["i_inverse"] = max(out["i_inverse"],
                               dist(inverse(g1), el(-k, -q, -sysm.translate(u, k))),
                               dist(multiply(g1, inverse(g1)), ctx.identity()),
                               dist(multiply(inverse(g1), g1), ctx.identity()))
        c = el(0, r)
        out["ii_central"] = max(out["ii_central"], dist(multiply(g1, c), el(k, q + r, u)),
                                dist(multiply(c, g1), el(k, q + r, u)))
        l = int(rng.integers(-3, 4))
        out["iii_central_power"] = max(out["iii_central_power"],
                                       dist(multiply(power(c, l), g1), el(k, q + l * r, u)))
        conj = multiply(multiply(g1, el(0, r, w)), inverse(g1))
        out["iv_conjugation"] = max(out["iv_conjugation"],
                                    dist(conj, el(0, r - 2 * ctx.omega(u, w), sysm.translate(w, k))))
        a, b = el(0, q, u), el(0, r, w)
        out["v_commutator"] = max(out["v_commutator"],
                                  dist(commutator(a, b), el(0, 2 * ctx.omega(w, u))))
    return out


# -- lattice data and the criterion -------------------------------------------


@dataclass(frozen=True, eq=False)
class SigmaLattice:
    """``Sigma = Z theta x Lambda`` inside ``R x L``.

    Stored as a product, so ``Sigma`` meets ``R x {0}`` exactly in
    ``Z theta x {0}``.
    """

    theta: float
    lattice: IntegerLattice

    def __post_init__(self):
        if not self.theta > 0:
            raise InputError("theta must be positive")

    def generators(self):
        return self.lattice.generators()


def check_ncsuf(path, sigma, inner, phi=None, int_tol=1e-6, det_tol=1e-8, omega_tol=1e-9):
    """Certify conditions (a), (b), (c) of the compact-quotient criterion.

    (a) ``Sigma`` meets ``R x {0}`` in ``Z theta x {0}``; (b) the map
    ``(r, w) -> (r + phi(w), T w)`` preserves ``Sigma``; (c) ``Omega`` takes
    values in ``Z theta`` on ``Lambda``. ``phi`` is given by its values on the
    basis ``u_i(0) = e_i``; ``None`` means the zero functional.
    """
    space = SolutionSpace(path)
    theta = sigma.theta
    G = sigma.lattice.basis_matrix
    checks = [Check("a_sigma_meets_I", 0.0, 0.0, True, note="Sigma stored as Z*theta x Lambda")]

    T = translation_operator(space, "closed" if space.diagonal else "integrate")
    M = lattice_monodromy(G, T)
    int_res = float(np.max(np.abs(M - np.rint(M))))
    det_res = abs(abs(float(np.linalg.det(M))) - 1)
    checks.append(Check("b_T_integer", int_res, int_tol, int_res < int_tol))
    checks.append(Check("b_T_unimodular", det_res, det_tol, det_res < det_tol))
    phi = np.zeros(space.dim) if phi is None else np.asarray(phi, dtype=float)
    phi_vals = phi @ G / theta
    phi_res = float(np.max(np.abs(phi_vals - np.rint(phi_vals))))
    checks.append(Check("b_phi_in_Z_theta", phi_res, int_tol, phi_res < int_tol))

    gens = [space.solution(g) for g in sigma.generators()]
    worst = 0.0
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            worst = max(worst, abs(omega(gens[i], gens[j], inner)[0]))
    # Lagrangian case: Omega vanishes on Lambda, so its values lie in Z theta
    checks.append(Check("c_omega_lagrangian", worst, omega_tol, worst < omega_tol))
    return Section("ncsuf", checks, extra={"theta": theta, "lattice_monodromy": M.tolist()})
