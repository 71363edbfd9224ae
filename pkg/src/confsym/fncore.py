"""Periodic scalar functions sampled on a uniform grid.

All calculus here is spectral: derivatives and antiderivatives act on the
discrete Fourier coefficients, period integrals use the trapezoidal rule
(which is spectrally accurate for smooth periodic integrands), and
evaluation between nodes uses band-limited trigonometric interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import InputError, check_finite_array, check_grid_size, check_positive

DEFAULT_N = 256


@dataclass(frozen=True, eq=False)
class PeriodicGridFunction:
    """A smooth ``period``-periodic function sampled at ``t_i = i * period / N``.

    Instances are immutable; arithmetic returns new instances. Binary
    operations require a matching period and grid size.
    """

    period: float
    samples: np.ndarray

    def __post_init__(self):
        period = check_positive(self.period, "period")
        samples = check_finite_array(self.samples, "samples").copy()
        if samples.ndim != 1:
            raise InputError("samples must be one-dimensional")
        check_grid_size(samples.size)
        samples.setflags(write=False)
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "samples", samples)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_callable(cls, func, period, n=DEFAULT_N):
        period = check_positive(period, "period")
        n = check_grid_size(n)
        t = np.arange(n) * (period / n)
        values = np.asarray(func(t), dtype=float)
        if values.shape == ():
            values = np.full(n, float(values))
        if not np.all(np.isfinite(values)):
            raise InputError("callable produced non-finite samples")
        return cls(period, values)

    @classmethod
    def constant(cls, value, period, n=DEFAULT_N):
        return cls(period, np.full(check_grid_size(n), float(value)))

    @classmethod
    def trig(cls, coeffs, period, n=DEFAULT_N):
        """``c0 + sum_k a_k cos(2 pi k t/p) + b_k sin(2 pi k t/p)``.

        ``coeffs`` is the flat list ``[c0, a1, b1, a2, b2, ...]``.
        """
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        if coeffs.size == 0 or coeffs.size % 2 == 0:
            raise InputError("trig coefficients must be [c0, a1, b1, ...] (odd length)")
        c0, rest = coeffs[0], coeffs[1:].reshape(-1, 2)

        def f(t):
            out = np.full_like(t, c0)
            for k, (a, b) in enumerate(rest, start=1):
                w = 2 * np.pi * k / period
                out = out + a * np.cos(w * t) + b * np.sin(w * t)
            return out

        return cls.from_callable(f, period, n)

    # -- basic properties ---------------------------------------------------

    @property
    def n(self):
        return self.samples.size

    @property
    def nodes(self):
        return np.arange(self.n) * (self.period / self.n)

    def node(self, i):
        """Sample at node ``i``; indices wrap modulo ``N``."""
        return float(self.samples[int(i) % self.n])

    def mean(self):
        return float(np.mean(self.samples))

    def max(self):
        return float(np.max(self.samples))

    def min(self):
        return float(np.min(self.samples))

    def norm_inf(self):
        return float(np.max(np.abs(self.samples)))

    def _angular(self):
        return 2 * np.pi * np.fft.rfftfreq(self.n, d=self.period / self.n)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        """Trigonometric interpolant evaluated at arbitrary real ``t``."""
        t = np.asarray(t, dtype=float)
        coef = np.fft.rfft(self.samples) / self.n
        w = self._angular()
        weights = np.full(coef.size, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0  # Nyquist mode is its own conjugate
        ph = np.multiply.outer(t, w)
        vals = (np.cos(ph) * coef.real - np.sin(ph) * coef.imag) @ weights
        return vals if vals.shape else float(vals)

    # -- calculus -----------------------------------------------------------

    def derivative(self, order=1):
        if order < 0:
            raise InputError("derivative order must be non-negative")
        if order == 0:
            return self
        coef = np.fft.rfft(self.samples)
        factor = (1j * self._angular()) ** order
        if order % 2:
            factor[-1] = 0.0
        return PeriodicGridFunction(self.period, np.fft.irfft(coef * factor, n=self.n))

    def antiderivative(self):
        """Return ``(mean, periodic_part)`` with
        ``int_0^t g = mean * t + periodic_part(t) - periodic_part(0)``."""
        coef = np.fft.rfft(self.samples)
        mean = coef[0].real / self.n
        w = self._angular()
        out = np.zeros_like(coef)
        out[1:-1] = coef[1:-1] / (1j * w[1:-1])
        return float(mean), PeriodicGridFunction(self.period, np.fft.irfft(out, n=self.n))

    def integrate_period(self):
        return float(np.sum(self.samples) * (self.period / self.n))

    def integral_from_zero(self, t):
        """``int_0^t g`` at arbitrary ``t`` (not necessarily within one period)."""
        mean, per = self.antiderivative()
        t = np.asarray(t, dtype=float)
        return mean * t + per(t) - per(0.0)

    # -- pointwise algebra --------------------------------------------------

    def map(self, ufunc):
        return PeriodicGridFunction(self.period, ufunc(self.samples))

    def _coerce(self, other):
        if isinstance(other, PeriodicGridFunction):
            if other.n != self.n or other.period != self.period:
                raise InputError("grid functions must share period and grid size")
            return other.samples
        return float(other)

    def __add__(self, other):
        return PeriodicGridFunction(self.period, self.samples + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PeriodicGridFunction(self.period, self.samples - self._coerce(other))

    def __rsub__(self, other):
        return PeriodicGridFunction(self.period, self._coerce(other) - self.samples)

    def __mul__(self, other):
        return PeriodicGridFunction(self.period, self.samples * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return PeriodicGridFunction(self.period, self.samples / self._coerce(other))

    def __rtruediv__(self, other):
        return PeriodicGridFunction(self.period, self._coerce(other) / self.samples)

    def __neg__(self):
        return PeriodicGridFunction(self.period, -self.samples)

    def __pow__(self, k):
        return PeriodicGridFunction(self.period, self.samples ** k)

    def __repr__(self):
        return (f"PeriodicGridFunction(period={self.period!r}, n={self.n}, "
                f"range=[{self.min():.6g}, {self.max():.6g}])")


def from_callable(func, period, n=DEFAULT_N):
    return PeriodicGridFunction.from_callable(func, period, n)


def derivative(g):
    return g.derivative()


def antiderivative(g):
    return g.antiderivative()


def integrate_period(g):
    return g.integrate_period()
