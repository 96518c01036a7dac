"""Wigner functions of Fock states sent through the effective beamsplitter channel.

Conventions: quadratures with vacuum variance 1, ``W(x, p)`` normalized to 1,
characteristic function ``chi(u, v) = <exp(i (u X + v P))>``. A Fock state
``|n>`` has ``chi = L_n(u^2 + v^2) exp(-(u^2 + v^2)/2)``. The channel

    q_f = -sqrt(T) Y_in + sqrt(1 - T) X_N,    p_f = sqrt(T) X_in + sqrt(1 - T) Y_N

multiplies a rotation-invariant input by a Gaussian factor, so

    chi_out(u, v) = L_n(T (u^2 + v^2)) exp(-(a_x u^2 + a_p v^2) / 2),
    a_x = T + (1 - T) V_XN,   a_p = T + (1 - T) V_YN.

Expanding the Laguerre polynomial turns the Fourier transform into sums of
Hermite-Gaussian products, which is what :func:`transferred_fock_wigner`
evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .channel import ChannelDecomposition, negativity_bound
from .errors import ParameterDomainError

__all__ = [
    "WignerGrid",
    "make_grid",
    "fock_wigner",
    "transferred_fock_wigner",
    "channel_wigner",
    "wigner_at_origin",
    "negativity_boundary",
    "negativity_boundary_scan",
    "MAX_FOCK",
    "QUADRATURE_RELABEL",
]

MAX_FOCK = 3
# Mechanical axes in terms of the input quadratures; used to map grids between frames.
QUADRATURE_RELABEL = {"q_f": "-Y_in", "p_f": "X_in", "rotation_deg": 90}


@dataclass
class WignerGrid:
    """Wigner function sampled on a rectangle; ``W[i, j] = W(x[i], p[j])``."""

    x: np.ndarray
    p: np.ndarray
    W: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if self.W.shape != (len(self.x), len(self.p)):
            raise ParameterDomainError(f"W has shape {self.W.shape}, expected {(len(self.x), len(self.p))}", "W")

    def integral(self) -> float:
        """Trapezoid-rule integral of ``W`` over the grid."""
        return float(np.trapezoid(np.trapezoid(self.W, self.p, axis=1), self.x))

    def value_at(self, x: float, p: float) -> float:
        i = int(np.argmin(np.abs(self.x - x)))
        j = int(np.argmin(np.abs(self.p - p)))
        if not (math.isclose(self.x[i], x, abs_tol=1e-12) and math.isclose(self.p[j], p, abs_tol=1e-12)):
            raise ParameterDomainError(f"({x}, {p}) is not a grid node", "x")
        return float(self.W[i, j])

    def triples(self) -> np.ndarray:
        """Rows ``(x, p, W)`` with ``p`` varying fastest."""
        X, P = np.meshgrid(self.x, self.p, indexing="ij")
        return np.column_stack([X.ravel(), P.ravel(), self.W.ravel()])


def make_grid(extent: float = 5.0, n: int = 101, p_extent: float | None = None, n_p: int | None = None):
    """Symmetric axes ``[-extent, extent]`` with ``n`` points (odd ``n`` keeps the origin)."""
    if extent <= 0 or n < 2:
        raise ParameterDomainError("grid needs extent > 0 and at least two points", "extent")
    p_extent = extent if p_extent is None else p_extent
    n_p = n if n_p is None else n_p
    x = np.linspace(-extent, extent, n)
    p = np.linspace(-p_extent, p_extent, n_p)
    return x, p


def _check_n(n):
    if int(n) != n or not 0 <= n <= MAX_FOCK:
        raise ParameterDomainError(f"Fock number must be an integer in [0, {MAX_FOCK}], got {n!r}", "n")
    return int(n)


def fock_wigner(n: int, x=None, p=None) -> WignerGrid:
    """``W_n(x, p) = (-1)^n / (2 pi) L_n(x^2 + p^2) exp(-(x^2 + p^2) / 2)``."""
    n = _check_n(n)
    if x is None or p is None:
        x, p = make_grid()
    X, P = np.meshgrid(np.asarray(x, float), np.asarray(p, float), indexing="ij")
    r2 = X**2 + P**2
    W = (-1) ** n / (2 * math.pi) * special.eval_laguerre(n, r2) * np.exp(-r2 / 2)
    return WignerGrid(x, p, W, {"state": f"fock_{n}", "channel": None, "frame": "input"})


def _hermite_gaussian(j, x, a):
    """Inverse Fourier transform of ``u^(2j) exp(-a u^2 / 2)``:
    ``(-1)^j a^-j He_2j(x / sqrt(a)) exp(-x^2 / (2a)) / sqrt(2 pi a)``."""
    y = x / math.sqrt(a)
    return (-1) ** j * a ** (-j) * special.eval_hermitenorm(2 * j, y) * np.exp(-y * y / 2) / math.sqrt(2 * math.pi * a)


def _check_channel(T, V_XN, V_YN):
    if not 0.0 <= T <= 1.0:
        raise ParameterDomainError(f"transmittivity must lie in [0, 1], got {T}", "T")
    if not (V_XN > 0 and V_YN > 0) or V_XN * V_YN < 1.0 - 1e-12:
        raise ParameterDomainError(
            f"noise variances ({V_XN}, {V_YN}) do not describe a physical state (need V_XN * V_YN >= 1)", "V_N"
        )


def transferred_fock_wigner(n: int, x, p, T: float, V_XN: float, V_YN: float) -> np.ndarray:
    """Wigner function of ``|n>`` after the channel, in mechanical coordinates ``(q_f, p_f)``.

    ``x`` and ``p`` broadcast against each other.
    """
    n = _check_n(n)
    _check_channel(T, V_XN, V_YN)
    a_x = T + (1 - T) * V_XN
    a_p = T + (1 - T) * V_YN
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    fx = [_hermite_gaussian(j, x, a_x) for j in range(n + 1)]
    fp = [_hermite_gaussian(j, p, a_p) for j in range(n + 1)]
    out = np.zeros(np.broadcast(x, p).shape)
    for k in range(n + 1):
        lk = (-1) ** k * math.comb(n, k) / math.factorial(k) * T**k
        if lk == 0.0:
            continue
        for j in range(k + 1):
            out = out + lk * math.comb(k, j) * fx[j] * fp[k - j]
    return out


def _channel_values(ch):
    if isinstance(ch, ChannelDecomposition):
        return ch.T, ch.V_XN, ch.V_YN
    T, V_XN, V_YN = ch
    return float(T), float(V_XN), float(V_YN)


def channel_wigner(n: int, ch, x=None, p=None, frame: str = "mechanical") -> WignerGrid:
    """Grid of the transferred Fock state.

    ``ch`` is a :class:`ChannelDecomposition` or a ``(T, V_XN, V_YN)`` triple.
    With ``frame="mechanical"`` the axes are ``(q_f, p_f)``; ``frame="input"``
    undoes the quadrature swap so the axes are ``(X_in, Y_in)``.
    """
    T, V_XN, V_YN = _channel_values(ch)
    if x is None or p is None:
        x, p = make_grid()
    X, P = np.meshgrid(np.asarray(x, float), np.asarray(p, float), indexing="ij")
    if frame == "mechanical":
        W = transferred_fock_wigner(n, X, P, T, V_XN, V_YN)
    elif frame == "input":
        # X_in = p_f, Y_in = -q_f
        W = transferred_fock_wigner(n, -P, X, T, V_XN, V_YN)
    else:
        raise ParameterDomainError(f"frame must be 'mechanical' or 'input', got {frame!r}", "frame")
    meta = {
        "state": f"fock_{n}",
        "channel": {"T": T, "V_XN": V_XN, "V_YN": V_YN},
        "frame": frame,
        "relabel": dict(QUADRATURE_RELABEL),
    }
    return WignerGrid(x, p, W, meta)


def wigner_at_origin(n: int, ch) -> float:
    """``W(0, 0)`` of the transferred Fock state.

    Uses ``He_2j(0) = (-1)^j (2j - 1)!!``, so only even moments survive.
    """
    n = _check_n(n)
    T, V_XN, V_YN = _channel_values(ch)
    _check_channel(T, V_XN, V_YN)
    a_x = T + (1 - T) * V_XN
    a_p = T + (1 - T) * V_YN
    f = lambda j, a: math.factorial(2 * j) / (2**j * math.factorial(j)) / a**j  # noqa: E731
    total = 0.0
    for k in range(n + 1):
        lk = (-1) ** k * math.comb(n, k) / math.factorial(k) * T**k
        total += lk * sum(math.comb(k, j) * f(j, a_x) * f(k - j, a_p) for j in range(k + 1))
    return total / (2 * math.pi * math.sqrt(a_x * a_p))


def negativity_boundary(T: float, n: int = 1, v_max: float = 1e6, xtol: float = 1e-9) -> float:
    """Largest symmetric noise ``V`` with ``W(0, 0) < 0`` at transmittivity ``T``.

    Returns ``nan`` when the origin is not negative even for ``V = 1``.
    """
    f = lambda v: wigner_at_origin(n, (T, v, v))  # noqa: E731
    if not 0.0 < T < 1.0:
        return math.nan
    f1 = f(1.0)
    if f1 > 1e-14:
        return math.nan
    if f1 >= -1e-14:  # boundary sits at the vacuum-noise edge
        return 1.0
    if f(v_max) < 0.0:
        return math.inf
    return float(optimize.brentq(f, 1.0, v_max, xtol=xtol, rtol=4 * np.finfo(float).eps))


def negativity_boundary_scan(T_values, n: int = 1, rtol: float = 1e-6) -> list[dict]:
    """Oracle-side negativity boundary next to the quoted bound ``V_N^2 < T / (1 - T)``.

    Each row holds ``T``, the boundary ``V_boundary`` from the closed-form
    origin value, the quoted bound expressed as a limit on ``V_N`` and a flag
    marking rows where the two differ by more than ``rtol``.
    """
    rows = []
    for T in np.asarray(T_values, dtype=float):
        vb = negativity_boundary(float(T), n)
        quoted = math.sqrt(negativity_bound(float(T)))
        agree = math.isfinite(vb) and abs(vb - quoted) <= rtol * max(1.0, quoted)
        rows.append({"T": float(T), "V_boundary": vb, "V_quoted": quoted, "disagree": not agree})
    return rows
