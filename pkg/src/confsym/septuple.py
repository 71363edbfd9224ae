"""Periodic Riccati septuples and their ``(x, r, s)`` coordinates.

A septuple ``(alpha, beta, gamma, f, a, b, c)`` consists of ``p``-periodic
functions with ``alpha > beta > gamma`` everywhere and constants with
``a + b + c = 0`` and ``b < min(a, c)``, ``a != c``, solving

    alpha' + alpha**2 = f + a
    beta'  + beta**2  = f + b
    gamma' + gamma**2 = f + c

It is equivalently described by the differences ``rho = alpha - beta``,
``sigma = beta - gamma`` together with ``r = a - b``, ``s = c - b``, or by
``x = log(sigma / rho)`` together with ``(r, s)``. The latter coordinates
are unconstrained apart from ``r > 0, s > 0, r != s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import ConsistencyError, InputError, check_positive
from .fncore import DEFAULT_N, PeriodicGridFunction

RICCATI_TOL = 1e-7
COMPAT_TOL = 1e-8
SPEC_PATH_TOL = 1e-6


@dataclass(frozen=True)
class Septuple:
    alpha: PeriodicGridFunction
    beta: PeriodicGridFunction
    gamma: PeriodicGridFunction
    f: PeriodicGridFunction
    a: float
    b: float

    @property
    def c(self):
        # stored implicitly so that a + b + c == 0 holds exactly
        return -self.a - self.b

    @property
    def period(self):
        return self.alpha.period

    @property
    def n(self):
        return self.alpha.n

    @property
    def constants(self):
        return self.a, self.b, self.c

    def riccati_residuals(self):
        """Max-norm residuals of the three Riccati equations."""
        out = []
        for fn, const in zip((self.alpha, self.beta, self.gamma), self.constants):
            res = fn.derivative() + fn * fn - self.f - const
            out.append(res.norm_inf())
        return tuple(out)

    def ordering_margin(self):
        """Smallest pointwise gap in ``alpha > beta > gamma``."""
        return float(min(np.min(self.alpha.samples - self.beta.samples),
                         np.min(self.beta.samples - self.gamma.samples)))

    def f_range(self):
        return self.f.max() - self.f.min()

    def validate(self, tol=RICCATI_TOL):
        a, b, c = self.constants
        if not (b < a and b < c and a != c):
            raise InputError(f"constants violate b < a, b < c, a != c: {(a, b, c)}")
        if self.ordering_margin() <= 0:
            raise InputError("alpha > beta > gamma fails on the grid")
        worst = max(self.riccati_residuals())
        if worst >= tol:
            raise ConsistencyError(f"Riccati residual {worst:.3e} exceeds {tol:.1e}")
        return self


@dataclass(frozen=True)
class XRS:
    x: PeriodicGridFunction
    r: float
    s: float

    def __post_init__(self):
        r, s = float(self.r), float(self.s)
        if not (r > 0 and s > 0 and r != s):
            raise InputError(f"(r, s) = ({r}, {s}) outside D = {{r > 0, s > 0, r != s}}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @property
    def period(self):
        return self.x.period


@dataclass(frozen=True)
class SpecTriple:
    """Monodromy eigenvalues ``(lambda, mu, nu)``.

    ``delta, epsilon, zeta`` are the three period integrals that produce the
    triple from ``(x, r, s)``; ``path_gap`` is the largest disagreement (in
    log coordinates) with the direct ``-int alpha`` route. Both are ``None``
    when the triple did not come from :func:`spec`.
    """

    lam: float
    mu: float
    nu: float
    delta: float | None = None
    epsilon: float | None = None
    zeta: float | None = None
    path_gap: float | None = None

    def as_array(self):
        return np.array([self.lam, self.mu, self.nu])

    def logs(self):
        return np.log(self.as_array())


def _radical(xrs):
    x = xrs.x
    xdot = x.derivative()
    ex = x.map(np.exp)
    disc = xdot * xdot + 4.0 * (1.0 + ex) * (xrs.r + xrs.s * x.map(lambda v: np.exp(-v)))
    if disc.min() <= 0:
        raise InputError("non-positive discriminant in the rho formula")
    return xdot, ex, disc.map(np.sqrt)


def xrs_to_rho_sigma(xrs):
    """Positive ``(rho, sigma)`` with ``sigma = e^x rho`` solving the compatibility ODE.

    The positive square-root branch is always taken; it is the one giving
    ``rho > 0``.
    """
    xdot, ex, root = _radical(xrs)
    rho = (xdot + root) / (2.0 * (1.0 + ex))
    sigma = ex * rho
    return rho, sigma


def compatibility_residual(rho, sigma, r, s):
    """``max |d log(sigma/rho)/dt - (rho + sigma - r/rho - s/sigma)|``."""
    lhs = (sigma / rho).map(np.log).derivative()
    rhs = rho + sigma - r / rho - s / sigma
    return (lhs - rhs).norm_inf()


def rho_sigma_to_septuple(rho, sigma, r, s, tol=COMPAT_TOL):
    if rho.min() <= 0 or sigma.min() <= 0:
        raise InputError("rho and sigma must be strictly positive")
    r, s = float(r), float(s)
    compat = compatibility_residual(rho, sigma, r, s)
    if compat > tol:
        raise ConsistencyError(f"compatibility ODE residual {compat:.3e} exceeds {tol:.1e}")
    a = (2 * r - s) / 3
    b = -(r + s) / 3
    rho_dot = rho.derivative()
    sigma_dot = sigma.derivative()
    common = (r - rho_dot) / rho
    alpha = 0.5 * (rho + common)
    beta = 0.5 * (-rho + common)
    beta_from_gamma_side = 0.5 * (sigma - (s + sigma_dot) / sigma)
    gap = (beta - beta_from_gamma_side).norm_inf()
    if gap > tol:
        raise ConsistencyError(f"two expressions for beta disagree by {gap:.3e}")
    gamma = 0.5 * (-sigma - (s + sigma_dot) / sigma)
    f = alpha.derivative() + alpha * alpha - a
    return Septuple(alpha, beta, gamma, f, a, b)


def septuple_to_xrs(sep):
    rho = sep.alpha - sep.beta
    sigma = sep.beta - sep.gamma
    x = (sigma / rho).map(np.log)
    return XRS(x, sep.a - sep.b, sep.c - sep.b)


def xrs_to_septuple(xrs):
    rho, sigma = xrs_to_rho_sigma(xrs)
    return rho_sigma_to_septuple(rho, sigma, xrs.r, xrs.s)


def spec_integrals(xrs):
    """The period integrals ``(delta, epsilon, zeta)``."""
    x = xrs.x
    _, ex, root = _radical(xrs)
    emx = x.map(lambda v: np.exp(-v))
    delta = (root / (1.0 + ex)).integrate_period()
    epsilon = (root / (1.0 + (xrs.s / xrs.r) * emx)).integrate_period()
    zeta = (root / (1.0 + emx)).integrate_period()
    return delta, epsilon, zeta


def spec_from_integrals(delta, epsilon, zeta):
    logs = np.array([-delta - epsilon, delta - epsilon, delta - epsilon + 2 * zeta]) / 4
    return np.exp(logs)


def spec_of_septuple(sep):
    """Direct route: ``log lambda = -int_0^p alpha`` and likewise for beta, gamma."""
    return np.exp([-sep.alpha.integrate_period(),
                   -sep.beta.integrate_period(),
                   -sep.gamma.integrate_period()])


def spec(xrs, tol=SPEC_PATH_TOL):
    """Spectrum ``(lambda, mu, nu)`` of ``(x, r, s)``, computed along two routes."""
    delta, epsilon, zeta = spec_integrals(xrs)
    lmn = spec_from_integrals(delta, epsilon, zeta)
    direct = spec_of_septuple(xrs_to_septuple(xrs))
    gap = float(np.max(np.abs(np.log(lmn) - np.log(direct))))
    if gap > tol:
        raise ConsistencyError(f"spec routes disagree by {gap:.3e} in log coordinates")
    return SpecTriple(*map(float, lmn), delta=delta, epsilon=epsilon, zeta=zeta, path_gap=gap)


def constant_septuple(alpha, beta, gamma, p, n=DEFAULT_N):
    """The constant member with the given ``(alpha, beta, gamma)``."""
    alpha, beta, gamma = float(alpha), float(beta), float(gamma)
    p = check_positive(p, "p")
    if not alpha > beta > gamma:
        raise InputError("need alpha > beta > gamma")
    if not abs(beta) < alpha:
        raise InputError("need |beta| < alpha")
    if not abs(beta) < -gamma:
        raise InputError("need |beta| < -gamma")
    if -gamma == alpha:
        raise InputError("need -gamma != alpha")
    f = (alpha ** 2 + beta ** 2 + gamma ** 2) / 3
    const = lambda v: PeriodicGridFunction.constant(v, p, n)
    return Septuple(const(alpha), const(beta), const(gamma), const(f),
                    alpha ** 2 - f, beta ** 2 - f)
