"""The metric ``kappa dt^2 + dt ds + h`` on ``R^2 x V`` and its certificates.

Coordinates are ordered ``(t, s, v_1, ..., v_m)`` with ``v`` in the basis
where ``h = diag(signs)``. The symmetric product ``dt ds`` contributes
``g_ts = g_st = 1/2``. Only ``g_tt = kappa`` varies::

    kappa(t, s, v) = f(t) <v, v> + <A v, v> = sum_i signs_i (f(t) + a_i) v_i^2

so the analytic 3-jet is polynomial in ``v``, constant in ``s``, and uses
spectral derivatives of ``f`` up to third order in ``t``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import InputError, check_positive
from .certificate import Check, Section
from .curvature import curvature_from_jet, riemann_symmetry_residual, weyl_trace_residual
from .group import act_on_M, PointM

NONCONSTANT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MetricData:
    f: object  # PeriodicGridFunction
    a: np.ndarray
    inner: object  # InnerSpace

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        if a.size != self.inner.dim:
            raise InputError("A and the inner product have different dimensions")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @classmethod
    def from_path(cls, path, inner):
        return cls(path.f, path.a_entries, inner)

    @property
    def n(self):
        return self.inner.dim + 2

    @property
    def period(self):
        return self.f.period

    @cached_property
    def _f_derivs(self):
        return [self.f.derivative(k) for k in range(4)]

    def f_jet(self, t):
        """``(f, f', f'', f''')`` at ``t`` (shape ``(4,) + t.shape``)."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.asarray(d(t)) for d in self._f_derivs])

    def kappa(self, x):
        x = np.asarray(x, dtype=float)
        t, v = x[..., 0], x[..., 2:]
        ft = np.asarray(self.f(t))
        return np.sum(self.inner.signs * (ft[..., None] + self.a) * v * v, axis=-1)

    def metric_array(self, x, f_values=None):
        """Metric matrices at points ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        n = self.n
        t, v = x[..., 0], x[..., 2:]
        ft = np.asarray(self.f(t)) if f_values is None else f_values
        g = np.zeros(x.shape[:-1] + (n, n))
        g[..., 0, 0] = np.sum(self.inner.signs * (ft[..., None] + self.a) * v * v, axis=-1)
        g[..., 0, 1] = g[..., 1, 0] = 0.5
        idx = np.arange(2, n)
        g[..., idx, idx] = self.inner.signs
        return g


def metric_at(md, x):
    if isinstance(x, PointM):
        x = x.as_array()
    return md.metric_array(x)


def signature(md):
    plus, minus = md.inner.signature()
    return plus + 1, minus + 1


def _as_points(points):
    if isinstance(points, PointM):
        points = [points]
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], PointM):
        points = [p.as_array() for p in points]
    X = np.atleast_2d(np.asarray(points, dtype=float))
    return X


def analytic_jet(md, X):
    """Exact ``(g, dg, d2g, d3g)`` at points ``X`` of shape ``(P, n)``."""
    X = _as_points(X)
    P, n = X.shape
    m = n - 2
    t, v = X[:, 0], X[:, 2:]
    F = md.f_jet(t)  # (4, P)
    eps = md.inner.signs
    # w_k[P, i]: k-th t-derivative of signs_i (f + a_i)
    w = [eps * (F[0][:, None] + md.a)] + [eps * F[k][:, None] for k in (1, 2, 3)]
    g = md.metric_array(X, f_values=F[0])
    dg = np.zeros((P, n, n, n))
    d2g = np.zeros((P, n, n, n, n))
    d3g = np.zeros((P, n, n, n, n, n))

    def kappa_deriv(nt, vidx):
        # d_t^nt applied after the v-derivatives listed in vidx
        wk = w[nt]
        if not vidx:
            return np.sum(wk * v * v, axis=1)
        if len(vidx) == 1:
            return 2 * wk[:, vidx[0]] * v[:, vidx[0]]
        if len(vidx) == 2 and vidx[0] == vidx[1]:
            return 2 * wk[:, vidx[0]]
        return 0.0

    active = [0] + list(range(2, n))
    for order, target in ((1, dg), (2, d2g), (3, d3g)):
        for combo in itertools.product(active, repeat=order):
            nt = combo.count(0)
            vidx = sorted(c - 2 for c in combo if c != 0)
            val = kappa_deriv(nt, vidx)
            if np.any(val):
                target[(slice(None), 0, 0) + combo] = val
    return g, dg, d2g, d3g


def finite_difference_jet(md, X, h):
    """Composed central differences of the full metric function, step ``h``.

    Independent of :func:`analytic_jet`: it differentiates ``metric_array``
    numerically, so it shares only the interpolant of ``f``.
    """
    X = _as_points(X)
    P, n = X.shape
    E = np.eye(n)

    def offsets(order):
        combos = list(itertools.product(range(n), repeat=order))
        offs, wts = [], []
        for c in combos:
            for s in itertools.product((1.0, -1.0), repeat=order):
                offs.append(sum(si * E[ci] for si, ci in zip(s, c)) * h)
                wts.append(np.prod(s))
        return combos, np.array(offs), np.array(wts)

    def evaluate(offs):
        pts = X[:, None, :] + offs[None]
        tt = pts[..., 0]
        uniq, inv = np.unique(tt, return_inverse=True)
        fv = np.asarray(md.f(uniq))[inv.reshape(tt.shape)]
        return md.metric_array(pts, f_values=fv)

    g = md.metric_array(X)
    out = [g]
    for order in (1, 2, 3):
        combos, offs, wts = offsets(order)
        vals = evaluate(offs)  # (P, K, n, n)
        k = 2 ** order
        vals = vals.reshape(P, len(combos), k, n, n)
        wts = wts.reshape(len(combos), k)
        deriv = np.einsum("Pckab,ck->Pabc", vals, wts) / (2 * h) ** order
        out.append(deriv.reshape((P, n, n) + (n,) * order))
    return tuple(out)


def curvature_jet(md, points, mode="analytic", h_step=None):
    X = _as_points(points)
    if md.n < 4:
        raise InputError("curvature certificates need n >= 4")
    if mode == "analytic":
        jet = analytic_jet(md, X)
    elif mode in ("finite-difference", "fd"):
        h = check_positive(h_step if h_step is not None else 1e-2 * md.period, "h_step")
        jet = finite_difference_jet(md, X, h)
    else:
        raise InputError(f"unknown mode {mode!r}")
    return curvature_from_jet(*jet)


def sample_points(md, rng, count, v_box=2.0):
    """Points with ``t`` in ``[0, p)``, ``s`` in ``[-1, 1]``, ``|v| <= v_box``."""
    m = md.inner.dim
    t = rng.uniform(0, md.period, count)
    s = rng.uniform(-1, 1, count)
    direction = rng.normal(size=(count, m))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = v_box * rng.uniform(0, 1, count) ** (1.0 / m)
    return np.column_stack([t, s, direction * radius[:, None]])


def _pointwise_max(T):
    return np.max(np.abs(T.reshape(T.shape[0], -1)), axis=1)


def ecs_certificate(md, points, h_steps=None, nabla_weyl_tol=1e-6, ratio_band=(3.0, 5.0),
                    rel_nonzero=1e-4, minor_tol=1e-8, dt_tol=1e-9, ricci_off_tol=1e-9,
                    ricci_ratio_tol=1e-8, f_floor=1e-3):
    """Certify the metric is ECS and Ricci-recurrent at the sample points.

    Clauses: (1) parallel Weyl, analytically and through the finite-difference
    halving ratio; (2) not conformally flat; (3) not locally symmetric;
    (4) Ricci recurrence; (5) ``dt`` parallel. Two Ricci-shape checks are
    added: only ``Ric_tt`` is nonzero, and ``Ric_tt / f(t)`` is constant.
    The ratio uses only points where ``|f(t)| > f_floor * max|f|``.
    """
    if md.f.max() - md.f.min() <= NONCONSTANT_TOL:
        raise InputError("f is constant: the metric would be locally symmetric")
    X = _as_points(points)
    p = md.period
    h1, h2 = h_steps if h_steps is not None else (1e-2 * p, 5e-3 * p)
    J = curvature_jet(md, X)
    checks = []

    nw = _pointwise_max(J.nabla_weyl)
    worst = int(np.argmax(nw))
    checks.append(Check("1_nabla_weyl_analytic", float(nw[worst]), nabla_weyl_tol,
                        bool(nw[worst] < nabla_weyl_tol), point=X[worst].tolist()))
    fd1 = curvature_jet(md, X, "fd", h1)
    fd2 = curvature_jet(md, X, "fd", h2)
    r1 = _pointwise_max(fd1.nabla_weyl)
    r2 = _pointwise_max(fd2.nabla_weyl)
    ratio = r1 / np.maximum(r2, np.finfo(float).tiny)
    lo, hi = ratio_band
    checks.append(Check("1_nabla_weyl_fd_halving_min", float(ratio.min()), lo, bool(ratio.min() >= lo),
                        note="r(h)/r(h/2) per point", point=X[int(np.argmin(ratio))].tolist()))
    checks.append(Check("1_nabla_weyl_fd_halving_max", float(ratio.max()), hi, bool(ratio.max() <= hi),
                        note="r(h)/r(h/2) per point", point=X[int(np.argmax(ratio))].tolist()))
    floor = float(max(r1.max(), r2.max()))
    checks.append(Check("1_nabla_weyl_fd_floor", floor, nabla_weyl_tol, bool(floor < nabla_weyl_tol),
                        note="finite-difference nabla W at both steps"))
    e1 = _pointwise_max(fd1.nabla_riemann - J.nabla_riemann)
    e2 = _pointwise_max(fd2.nabla_riemann - J.nabla_riemann)
    conv = e1 / np.maximum(e2, np.finfo(float).tiny)
    conv_ok = bool(conv.min() >= lo and conv.max() <= hi)
    checks.append(Check("fd_oracle_convergence", float(conv.min() if conv.min() < lo else conv.max()),
                        hi, conv_ok, note="analytic vs finite-difference nabla R, e(h)/e(h/2) in band"))

    Rmax = _pointwise_max(J.riemann)
    Wmax = _pointwise_max(J.weyl)
    wr = Wmax / Rmax
    i = int(np.argmin(wr))
    checks.append(Check("2_weyl_nonzero", float(wr[i]), rel_nonzero, bool(wr[i] > rel_nonzero),
                        note="min over points of max|W| / max|R|", point=X[i].tolist()))

    dr = _pointwise_max(J.nabla_riemann) / (Rmax / p)
    i = int(np.argmax(dr))
    checks.append(Check("3_nabla_riemann_nonzero", float(dr[i]), rel_nonzero, bool(dr[i] > rel_nonzero),
                        note="max over points of max|nabla R| / (max|R| / p)", point=X[i].tolist()))

    Ric = J.ricci.reshape(len(X), -1)
    dRic = J.nabla_ricci.reshape(len(X), -1, md.n)
    scale_x = np.max(np.abs(Ric), axis=1)
    scale_y = np.max(np.abs(dRic), axis=(1, 2))
    minors = np.abs(np.einsum("Pi,Pje->Pije", Ric, dRic) - np.einsum("Pj,Pie->Pije", Ric, dRic))
    rel = np.max(minors.reshape(len(X), -1), axis=1) / np.maximum(scale_x * scale_y, np.finfo(float).tiny)
    i = int(np.argmax(rel))
    checks.append(Check("4_ricci_recurrent", float(rel[i]), minor_tol, bool(rel[i] < minor_tol),
                        note="2x2 minors of (Ric, nabla_w Ric), relative", point=X[i].tolist()))

    dt = _pointwise_max(J.nabla_dt)
    i = int(np.argmax(dt))
    checks.append(Check("5_dt_parallel", float(dt[i]), dt_tol, bool(dt[i] < dt_tol), point=X[i].tolist()))

    off = J.ricci.copy()
    off[:, 0, 0] = 0.0
    offmax = _pointwise_max(off)
    i = int(np.argmax(offmax))
    checks.append(Check("ricci_off_tt", float(offmax[i]), ricci_off_tol, bool(offmax[i] < ricci_off_tol),
                        point=X[i].tolist()))

    ft = np.asarray(md.f(X[:, 0]))
    use = np.abs(ft) > f_floor * md.f.norm_inf()
    ratios = J.ricci[use, 0, 0] / ft[use]
    const = float(np.median(ratios)) if ratios.size else float("nan")
    spread = float(np.max(np.abs(ratios - const))) if ratios.size else float("inf")
    checks.append(Check("ricci_tt_over_f_constant", spread, ricci_ratio_tol,
                        bool(ratios.size >= 2 and spread < ricci_ratio_tol),
                        note=f"{int(use.sum())} of {len(X)} points used"))

    extra = {
        "points": len(X),
        "ricci_constant": const,
        "fd_steps": [h1, h2],
        "fd_ratio_range": [float(ratio.min()), float(ratio.max())],
        "fd_ratio_outside_band": int(np.sum((ratio < lo) | (ratio > hi))),
        "fd_convergence_range": [float(conv.min()), float(conv.max())],
        "riemann_symmetry_residual": riemann_symmetry_residual(J.riemann),
        "weyl_trace_residual": weyl_trace_residual(J.weyl, J.ginv),
        "f_range": md.f.max() - md.f.min(),
    }
    return Section("ecs", checks, extra=extra)


# -- isometries ----------------------------------------------------------------


def _act_points(g, X):
    """``act_on_M`` on an array of points, shape ``(K, n)``."""
    ctx = g.ctx
    u, udot = ctx.system.state(g.u, X[:, 0])
    v = X[:, 2:]
    s = X[:, 1] + g.q - ctx.inner.inner(udot, 2 * v + u)
    return np.column_stack([X[:, 0] + g.k * ctx.period, s, v + u])


def isometry_residual(md, g, points, rel_step=1e-5):
    """``max |J^T g(F x) J - g(x)| / (1 + |g(x)|)`` with ``F = act_on_M(g, .)``.

    The Jacobian ``J`` of ``F`` uses the five-point central difference with
    step ``rel_step * (1 + |x_a|)`` in coordinate ``a``; the three-point
    rule leaves an ``O(h^2)`` truncation near 1e-7 when ``u`` varies fast.
    Comparing the matrices entrywise is the same as comparing
    ``g(dF X, dF Y)`` with ``g(X, Y)`` on coordinate basis vectors.
    """
    X = _as_points(points)
    P, n = X.shape
    steps = rel_step * (1 + np.abs(X))  # (P, n)
    E = np.eye(n)

    def shifted(mult):
        pts = (X[:, None, :] + mult * steps[:, :, None] * E[None]).reshape(-1, n)
        return _act_points(g, pts).reshape(P, n, n)

    diff = 8 * (shifted(1) - shifted(-1)) - (shifted(2) - shifted(-2))
    Jac = (diff / (12 * steps[:, :, None])).transpose(0, 2, 1)  # J[P, i, a] = dF_i/dx_a
    gF = md.metric_array(_act_points(g, X))
    pulled = np.einsum("Pia,Pij,Pjb->Pab", Jac, gF, Jac)
    g0 = md.metric_array(X)
    return float(np.max(np.abs(pulled - g0) / (1 + np.abs(g0))))


def act_point(g, x):
    return act_on_M(g, x)
