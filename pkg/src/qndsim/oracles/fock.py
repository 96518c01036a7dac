"""Truncated Fock-space implementation of the beamsplitter channel.

The noise mode is a squeezed thermal state ``sum_k p_k S|k><k|S^dag`` with
quadrature variances ``(V_XN, V_YN)``. Each pure component is combined with
the Fock input on a beamsplitter of transmittivity ``T`` and the ancilla is
traced out. Nothing here reuses the characteristic-function algebra of
:mod:`qndsim.nongaussian`, so the two serve as independent checks.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special
from scipy.linalg import expm

from ..errors import ParameterDomainError, TruncationError
from ..nongaussian import WignerGrid, make_grid

__all__ = [
    "annihilation",
    "beamsplitter_blocks",
    "beamsplitter_unitarity_defect",
    "squeezed_thermal_components",
    "fock_channel_oracle",
    "wigner_from_density",
    "photon_distribution",
    "parity_at_origin",
    "oracle_negativity_boundary",
]

TRACE_TOL = 1e-8
MIN_TRUNCATION = 40


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def beamsplitter_blocks(T: float, n_max: int) -> list[np.ndarray]:
    """Beamsplitter ``exp(theta (a^dag b - a b^dag))`` restricted to each total photon number.

    ``cos(theta) = sqrt(T)``. Block ``N`` acts on amplitudes ``psi[m, N - m]``,
    ``m = 0..N``, and is built from the exact generator on that subspace.
    """
    if not 0.0 <= T <= 1.0:
        raise ParameterDomainError(f"transmittivity must lie in [0, 1], got {T}", "T")
    theta = math.acos(math.sqrt(T))
    blocks = []
    for N in range(n_max + 1):
        m = np.arange(N + 1)
        # a^dag b |m, N-m> = sqrt((m+1)(N-m)) |m+1, N-m-1>
        up = np.sqrt((m[:-1] + 1.0) * (N - m[:-1]))
        gen = np.zeros((N + 1, N + 1))
        gen[m[1:], m[:-1]] = up
        gen -= gen.T
        blocks.append(expm(theta * gen))
    return blocks


def beamsplitter_unitarity_defect(T: float, n_max: int) -> float:
    """Largest ``|U^dag U - 1|`` entry over all photon-number blocks."""
    return max(float(np.max(np.abs(U.T @ U - np.eye(len(U))))) for U in beamsplitter_blocks(T, n_max))


def squeezed_thermal_components(V_XN: float, V_YN: float, dim: int, weight_tol: float = 1e-14):
    """Weights ``p_k`` and Fock vectors ``S|k>`` of the squeezed thermal ancilla.

    Occupation comes from ``V = sqrt(V_XN V_YN) = 2 n + 1``; the squeezing
    parameter ``r = -ln(V_XN / V_YN) / 4`` with ``S = exp(r/2 (a^2 - a^dag^2))``
    scales the ``X`` variance by ``exp(-2 r)``. Vectors are built in a doubled
    space and cut to ``dim``, so their norm deficit reveals truncation loss.
    """
    V = math.sqrt(V_XN * V_YN)
    if V < 1.0 - 1e-12:
        raise ParameterDomainError(f"noise mode below vacuum: sqrt(V_XN V_YN) = {V}", "V_N")
    nbar = max(0.0, (V - 1.0) / 2.0)
    r = -0.25 * math.log(V_XN / V_YN)
    big = 2 * dim
    a = annihilation(big)
    S = expm(0.5 * r * (a @ a - a.T @ a.T)) if r != 0.0 else np.eye(big)
    weights, vectors = [], []
    for k in range(dim):
        pk = 1.0 if nbar == 0.0 and k == 0 else (0.0 if nbar == 0.0 else nbar**k / (1.0 + nbar) ** (k + 1))
        if pk < weight_tol and k > 0:
            break
        weights.append(pk)
        vectors.append(S[:dim, k].copy())
    return np.array(weights), vectors


def fock_channel_oracle(n: int, T: float, V_XN: float, V_YN: float, truncation: int = 60) -> np.ndarray:
    """Density matrix of the output mode ``sqrt(T) a + sqrt(1 - T) b`` for input ``|n>``.

    Raises :class:`TruncationError` if the output trace falls below ``1 - 1e-8``.
    """
    if truncation < MIN_TRUNCATION:
        raise ParameterDomainError(f"truncation must be >= {MIN_TRUNCATION}, got {truncation}", "truncation")
    if int(n) != n or n < 0 or n >= truncation:
        raise ParameterDomainError(f"Fock number {n!r} does not fit the truncation", "n")
    if V_XN <= 0 or V_YN <= 0:
        raise ParameterDomainError("noise variances must be positive", "V_N")
    dim = truncation
    blocks = beamsplitter_blocks(T, 2 * dim - 2)
    weights, vectors = squeezed_thermal_components(V_XN, V_YN, dim)
    rho = np.zeros((dim, dim))
    for pk, anc in zip(weights, vectors):
        psi = np.zeros((dim, dim))
        psi[n, :] = anc
        out = np.zeros((dim, dim))
        for N in range(2 * dim - 1):
            lo, hi = max(0, N - dim + 1), min(N, dim - 1)
            m = np.arange(lo, hi + 1)
            vec = np.zeros(N + 1)
            vec[m] = psi[m, N - m]
            if not vec.any():
                continue
            new = blocks[N] @ vec
            out[m, N - m] = new[m]
        rho += pk * (out @ out.T)
    tr = float(np.trace(rho))
    if tr < 1.0 - TRACE_TOL:
        raise TruncationError(f"output trace {tr:.12f} below 1 - {TRACE_TOL:g}; raise the truncation above {truncation}")
    return rho


def photon_distribution(rho: np.ndarray) -> np.ndarray:
    return np.real(np.diag(rho)).copy()


def wigner_from_density(rho: np.ndarray, x=None, p=None, cutoff: float = 1e-15) -> WignerGrid:
    """Wigner function by displaced parity, ``W = Tr[rho D(beta) P] / (2 pi)``, ``beta = x + i p``.

    ``D(alpha) P D(alpha)^dag = D(2 alpha) P`` turns the displaced-parity sum
    with ``alpha = (x + i p)/2`` into single matrix elements of ``D(beta)``.
    Entries of ``rho`` below ``cutoff`` are skipped.
    """
    rho = np.asarray(rho)
    if x is None or p is None:
        x, p = make_grid()
    X, P = np.meshgrid(np.asarray(x, float), np.asarray(p, float), indexing="ij")
    beta = X + 1j * P
    y = np.abs(beta) ** 2
    gauss = np.exp(-y / 2)
    dim = rho.shape[0]
    W = np.zeros(beta.shape, dtype=complex)
    scale = max(float(np.max(np.abs(rho))), 1e-300)
    for n in range(dim):
        for m in range(n, dim):
            r_nm, r_mn = rho[n, m], rho[m, n]
            if abs(r_nm) < cutoff * scale and abs(r_mn) < cutoff * scale:
                continue
            d = m - n
            core = math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(m + 1))) * gauss * special.eval_genlaguerre(n, d, y)
            # <m|D|n> = core beta^d, <n|D|m> = core (-conj(beta))^d
            W += r_nm * core * beta**d * (-1) ** n
            if m != n:
                W += r_mn * core * (-np.conj(beta)) ** d * (-1) ** m
    W = W.real / (2 * math.pi)
    return WignerGrid(x, p, W, {"state": "density", "channel": None, "frame": "mechanical"})


def parity_at_origin(rho: np.ndarray) -> float:
    """``W(0, 0) = sum_k (-1)^k rho_kk / (2 pi)``."""
    d = np.real(np.diag(rho))
    return float(np.sum(d * (-1.0) ** np.arange(len(d))) / (2 * math.pi))


def oracle_negativity_boundary(T: float, n: int = 1, truncation: int = 60, tol: float = 1e-6,
                               v_max: float = 5.0) -> float:
    """Largest symmetric noise ``V`` in ``[1, v_max]`` keeping ``W(0, 0) < 0``, from the Fock oracle."""
    f = lambda v: parity_at_origin(fock_channel_oracle(n, T, v, v, truncation))  # noqa: E731
    f1 = f(1.0)
    if f1 > 1e-12:
        return math.nan
    if f1 >= -1e-12:
        return 1.0
    if f(v_max) < 0:
        return math.inf
    return float(optimize.brentq(f, 1.0, v_max, xtol=tol / 2))
