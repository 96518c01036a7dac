"""Closed-form algebra for integration kernels on a pulse window.

Every kernel that appears in the linear solution is a finite sum of terms
``c * x**k * exp(-mu * x)`` in the backward time ``x = tau - s``, with
``mu >= 0``. Products of such terms stay in the family, so inner products and
integrals over ``[0, tau]`` are available in closed form through

    phi_k(z) = int_0^1 t**k exp(-z t) dt.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

__all__ = ["Kernel", "phi", "one_minus_exp_over_rate", "gram_matrix", "orthonormal_coefficients"]

_SERIES_TERMS = 40
_TAYLOR_SWITCH = 0.05  # below this mu*tau, (1 - e^{-mu x})/mu is expanded in powers of x
_TAYLOR_ORDER = 10


def phi(k, z):
    """``int_0^1 t**k exp(-z t) dt`` for integer ``k >= 0`` and ``z >= 0``.

    Uses the alternating power series for small ``z`` and the regularized
    incomplete gamma function elsewhere.
    """
    k = np.asarray(k, dtype=float)
    z = np.asarray(z, dtype=float)
    k, z = np.broadcast_arrays(k, z)
    out = np.empty(k.shape)
    small = z < 2.0
    if np.any(small):
        ks, zs = k[small], z[small]
        acc = np.zeros(ks.shape)
        term = np.ones(ks.shape)  # (-z)^n / n!
        for n in range(_SERIES_TERMS):
            acc += term / (n + ks + 1.0)
            term = term * (-zs) / (n + 1.0)
        out[small] = acc
    big = ~small
    if np.any(big):
        kb, zb = k[big], z[big]
        # Gamma(k+1)/z^(k+1) evaluated in log space to stay finite for large k.
        scale = np.exp(special.gammaln(kb + 1.0) - (kb + 1.0) * np.log(zb))
        out[big] = special.gammainc(kb + 1.0, zb) * scale
    return out


class Kernel:
    """Real function of ``s`` on ``[0, tau]`` stored as a poly-exponential sum.

    Each term ``(c, k, mu)`` contributes ``c * (tau - s)**k * exp(-mu * (tau - s))``.
    """

    __slots__ = ("tau", "coef", "power", "rate")

    def __init__(self, tau, coef=(), power=(), rate=()):
        self.tau = float(tau)
        self.coef = np.asarray(coef, dtype=float).reshape(-1)
        self.power = np.asarray(power, dtype=int).reshape(-1)
        self.rate = np.asarray(rate, dtype=float).reshape(-1)
        if not (len(self.coef) == len(self.power) == len(self.rate)):
            raise ValueError("coef, power and rate must have equal length")
        if np.any(self.rate < 0) or np.any(self.power < 0):
            raise ValueError("kernel terms need nonnegative powers and rates")

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, tau):
        return cls(tau)

    @classmethod
    def constant(cls, tau, c):
        return cls(tau, [c], [0], [0.0])

    @classmethod
    def exponential(cls, tau, c, mu):
        """``c * exp(-mu * (tau - s))``."""
        return cls(tau, [c], [0], [mu])

    @classmethod
    def monomial(cls, tau, c, k, mu=0.0):
        return cls(tau, [c], [k], [mu])

    # algebra ----------------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        if other.tau != self.tau:
            raise ValueError(f"kernels live on different windows: {self.tau} vs {other.tau}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Kernel(
            self.tau,
            np.concatenate([self.coef, other.coef]),
            np.concatenate([self.power, other.power]),
            np.concatenate([self.rate, other.rate]),
        ).simplify()

    def __neg__(self):
        return Kernel(self.tau, -self.coef, self.power, self.rate)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, Kernel):
            return NotImplemented
        return Kernel(self.tau, self.coef * float(scalar), self.power, self.rate)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def simplify(self):
        """Merge terms with identical (power, rate) and drop exact zeros."""
        if len(self.coef) == 0:
            return self
        keys = {}
        for c, k, mu in zip(self.coef, self.power, self.rate):
            keys[(int(k), float(mu))] = keys.get((int(k), float(mu)), 0.0) + c
        items = [(c, k, mu) for (k, mu), c in keys.items() if c != 0.0]
        if not items:
            return Kernel(self.tau)
        c, k, mu = zip(*items)
        return Kernel(self.tau, c, k, mu)

    @property
    def is_zero(self) -> bool:
        return len(self.coef) == 0 or not np.any(self.coef)

    def __repr__(self):
        terms = " + ".join(f"{c:.4g}*x^{k}*e^(-{mu:.4g}x)" for c, k, mu in zip(self.coef, self.power, self.rate))
        return f"Kernel(tau={self.tau:g}: {terms or '0'})"

    # evaluation -------------------------------------------------------------
    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x = self.tau - s
        out = np.zeros(np.shape(s))
        for c, k, mu in zip(self.coef, self.power, self.rate):
            out = out + c * x**k * np.exp(-mu * x)
        return out

    def integral(self) -> float:
        """``int_0^tau k(s) ds``."""
        if self.is_zero:
            return 0.0
        t = self.tau
        vals = self.coef * t ** (self.power + 1.0) * phi(self.power, self.rate * t)
        return float(math.fsum(vals))

    def inner(self, other: "Kernel") -> float:
        """``int_0^tau self(s) other(s) ds`` in closed form."""
        self._check(other)
        if self.is_zero or other.is_zero:
            return 0.0
        t = self.tau
        c = np.multiply.outer(self.coef, other.coef)
        k = np.add.outer(self.power, other.power)
        mu = np.add.outer(self.rate, other.rate)
        vals = c * t ** (k + 1.0) * phi(k, mu * t)
        return float(math.fsum(vals.ravel()))

    def norm2(self) -> float:
        return self.inner(self)

    def quad_inner(self, other: "Kernel", epsrel: float = 1e-10) -> float:
        """Adaptive-quadrature cross-check of :meth:`inner`."""
        self._check(other)
        return _quad(lambda s: self(s) * other(s), self.tau, np.concatenate([self.rate, other.rate]), epsrel)

    def quad_integral(self, epsrel: float = 1e-10) -> float:
        return _quad(self, self.tau, self.rate, epsrel)


def _quad(f, tau, rates, epsrel):
    # Split near s = tau where fast exponentials live.
    rates = np.asarray(rates, dtype=float)
    points = sorted({tau - m / mu for mu in rates if mu * tau > 1.0 for m in (1.0, 10.0, 40.0) if m / mu < tau})
    total = 0.0
    edges = [0.0, *points, tau]
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=500)
        total += val
    return total


def one_minus_exp_over_rate(tau, mu, c=1.0) -> Kernel:
    """Kernel ``c * (1 - exp(-mu x)) / mu`` with ``x = tau - s``.

    Reduces to ``c * x`` at ``mu = 0``. For small ``mu * tau`` the Taylor series
    is used so that inner products do not suffer from cancellation.
    """
    if mu * tau < _TAYLOR_SWITCH:
        ks = np.arange(1, _TAYLOR_ORDER + 1)
        coefs = [c * (-mu) ** (k - 1) / math.factorial(k) for k in ks]
        return Kernel(tau, coefs, ks, np.zeros(len(ks))).simplify()
    return Kernel(tau, [c / mu, -c / mu], [0, 0], [0.0, mu])


def gram_matrix(kernels) -> np.ndarray:
    n = len(kernels)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = kernels[i].inner(kernels[j])
    return G


def orthonormal_coefficients(kernels, rtol: float = 1e-12) -> np.ndarray:
    """Expand ``kernels`` in an orthonormal basis built by Gram-Schmidt.

    The basis is generated in order, so the first nonzero kernel (normalized)
    is the first basis function. Returns ``C`` with ``kernels[i] = sum_j C[i, j] e_j``.
    Kernels whose component outside the current span is below ``rtol`` of their
    squared norm do not open a new direction.
    """
    G = gram_matrix(kernels)
    n = len(kernels)
    B = np.zeros((0, n))  # basis vectors as combinations of the input kernels
    C = np.zeros((n, 0))
    for i in range(n):
        if G[i, i] <= 0.0:
            continue
        w = np.zeros(n)
        w[i] = 1.0
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            if len(B):
                w -= (B @ G @ w) @ B
        res2 = float(w @ G @ w)
        if res2 > rtol * G[i, i]:
            e = w / math.sqrt(res2)
            B = np.vstack([B, e])
            C = np.hstack([C, np.zeros((n, 1))])
    # Coefficients <k_i, e_j> from the Gram matrix.
    if len(B):
        C = G @ B.T
    return C
