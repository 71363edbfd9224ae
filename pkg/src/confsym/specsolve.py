"""Integer cubics with prescribed real roots, and inversion of the spec map.

:func:`cubic_roots` isolates the three roots of ``-L^3 + k L^2 - l L + 1``
for integers ``2 <= k < l <= k^2/4``. :func:`invert_spec` then finds a
nonconstant septuple (in ``(x, r, s)`` coordinates) with a prescribed
spectrum, by Newton iteration over the slice ``x = x0 + eta cos(2 pi t/p)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import ConvergenceError, InputError, check_grid_size, check_integer, check_positive
from .fncore import DEFAULT_N, PeriodicGridFunction
from .septuple import XRS, SpecTriple, spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CubicSpec:
    k: int
    l: int
    roots: SpecTriple

    def polynomial(self, lam):
        return -lam ** 3 + self.k * lam ** 2 - self.l * lam + 1


def _cubic(k, l):
    return lambda x: -x ** 3 + k * x ** 2 - l * x + 1


def _bisect(P, lo, hi, tol=1e-15, max_iter=200):
    plo, phi = P(lo), P(hi)
    if plo == 0:
        return lo
    if phi == 0:
        return hi
    if np.sign(plo) == np.sign(phi):
        raise InputError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pm = P(mid)
        if pm == 0 or hi - lo < tol * max(1.0, abs(mid)):
            return mid
        if np.sign(pm) == np.sign(plo):
            lo, plo = mid, pm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_polish(k, l, x, steps=3):
    for _ in range(steps):
        p = -x ** 3 + k * x ** 2 - l * x + 1
        dp = -3 * x ** 2 + 2 * k * x - l
        if dp == 0:
            break
        x = x - p / dp
    return x


def cubic_roots(k, l):
    """Roots ``lambda < mu < nu`` of ``-L^3 + k L^2 - l L + 1``.

    Each root is bracketed by a sign change of the cubic: ``(1/l, 1)``,
    ``(1, k/2)`` and ``(k/2, k)``. Bisection isolates it and a few Newton
    steps polish it.
    """
    k = check_integer(k, "k")
    l = check_integer(l, "l")
    if not (2 <= k < l and 4 * l <= k * k):
        raise InputError(f"need 2 <= k < l <= k^2/4, got k={k}, l={l}")
    P = _cubic(k, l)
    brackets = [(1.0 / l, 1.0), (1.0, k / 2.0), (k / 2.0, float(k))]
    roots = []
    for lo, hi in brackets:
        x = _newton_polish(k, l, _bisect(P, lo, hi))
        if not lo < x < hi:
            raise InputError(f"root escaped its bracket ({lo}, {hi})")
        roots.append(x)
    return CubicSpec(k, l, SpecTriple(*roots))


@dataclass(frozen=True)
class LmnReport:
    passed: bool
    margins: dict

    def failures(self):
        return [name for name, m in self.margins.items() if m <= 0]


def verify_lmn(triple, lnu_tol=1e-9):
    """Margins for ``0<L<M<N``, ``L<1<N``, ``LM<1<MN`` and ``|LN - 1| > lnu_tol``.

    Every margin is positive exactly when the corresponding strict
    inequality holds.
    """
    lam, mu, nu = triple.lam, triple.mu, triple.nu
    margins = {
        "0<lambda": lam,
        "lambda<mu": mu - lam,
        "mu<nu": nu - mu,
        "lambda<1": 1 - lam,
        "1<nu": nu - 1,
        "lambda*mu<1": 1 - lam * mu,
        "1<mu*nu": mu * nu - 1,
        "lambda*nu!=1": abs(lam * nu - 1) - lnu_tol,
    }
    return LmnReport(all(m > 0 for m in margins.values()), margins)


@dataclass
class InversionResult:
    """Outcome of :func:`invert_spec`.

    ``residual`` is the max-norm of ``log spec(xrs) - log target``.
    """

    xrs: XRS
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    x0: float = 0.0
    eta: float = 0.0


def constant_guess(target, p):
    """``(x0, r, s)`` of the constant septuple whose spectrum is ``target``."""
    alpha, beta, gamma = -np.log(target.as_array()) / p
    r = alpha ** 2 - beta ** 2
    s = gamma ** 2 - beta ** 2
    x0 = np.log((beta - gamma) / (alpha - beta))
    return np.array([x0, r, s])


def _slice_xrs(z, eta, p, n):
    x0, r, s = z
    x = PeriodicGridFunction.from_callable(
        lambda t: x0 + eta * np.cos(2 * np.pi * t / p), p, n)
    return XRS(x, r, s)


def _in_domain(z):
    return z[1] > 0 and z[2] > 0 and z[1] != z[2]


def invert_spec(target, p, eta, n=DEFAULT_N, max_iter=30, tol=1e-12, fd_step=1e-6,
                max_halvings=20):
    """Find ``x = x0 + eta cos(2 pi t/p)`` and ``(r, s)`` with ``spec = target``.

    Damped Newton on the three unknowns ``(x0, r, s)``, central-difference
    Jacobian, started from the constant-septuple solution. ``tol`` is the
    stopping tolerance on the log-spectrum residual.
    """
    p = check_positive(p, "p")
    n = check_grid_size(n)
    eta = float(eta)
    report = verify_lmn(target)
    if not report.passed:
        raise InputError(f"target spectrum violates {report.failures()}")
    goal = target.logs()

    def residual(z):
        return spec(_slice_xrs(z, eta, p, n)).logs() - goal

    z = constant_guess(target, p)
    F = residual(z)
    err = float(np.max(np.abs(F)))
    history = [err]
    it = 0
    while err > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Newton stalled after {it} iterations, residual {err:.3e}", err, it)
        J = np.empty((3, 3))
        for j in range(3):
            h = fd_step * max(1.0, abs(z[j]))
            dz = np.zeros(3)
            dz[j] = h
            zp = z + dz if _in_domain(z + dz) else z
            zm = z - dz if _in_domain(z - dz) else z
            J[:, j] = (residual(zp) - residual(zm)) / (zp[j] - zm[j])
        step = -np.linalg.solve(J, F)
        scale = 1.0
        for _ in range(max_halvings + 1):
            cand = z + scale * step
            if _in_domain(cand):
                try:
                    Fc = residual(cand)
                except (InputError, FloatingPointError):
                    Fc = None
                if Fc is not None and np.max(np.abs(Fc)) < err:
                    break
            scale *= 0.5
        else:
            raise ConvergenceError(
                f"step damping failed at iteration {it}, residual {err:.3e}", err, it)
        z, F = cand, Fc
        err = float(np.max(np.abs(F)))
        history.append(err)
        it += 1
        logger.debug("newton iter %d: residual %.3e (step scale %.3g)", it, err, scale)
    return InversionResult(_slice_xrs(z, eta, p, n), it, err, history, float(z[0]), eta)
