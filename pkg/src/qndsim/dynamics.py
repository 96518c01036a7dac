"""Exact solution of the linearized cavity-optomechanical Langevin system.

State ordering is ``(q, p, X, Y)``: mechanical quadratures followed by the
intracavity optical quadratures. Quadratures obey ``[X, Y] = 2i`` so vacuum
has unit variance. Input channels are the mechanical bath forces
``xi_q, xi_p`` and the optical input field ``X_in, Y_in``.

The solution over one pulse of duration ``tau`` is represented by
:class:`TransferKernels`: for each output functional the coefficients on the
initial state and a :class:`~qndsim.kernels.Kernel` against every input
channel. :func:`project_onto_pulse` turns these kernels into a
:class:`LinearInputOutputMap` over a finite set of independent modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ConsistencyError, ParameterDomainError
from .kernels import Kernel, one_minus_exp_over_rate, orthonormal_coefficients, phi
from .params import InterfaceParams, ModelTier

__all__ = [
    "STATE",
    "INPUTS",
    "OUTPUTS",
    "drift_matrix",
    "noise_matrix",
    "propagator",
    "theta",
    "adiabatic_K",
    "PulseMode",
    "TransferKernels",
    "output_kernels",
    "LinearInputOutputMap",
    "project_onto_pulse",
]

STATE = ("q", "p", "X", "Y")
INITIAL = ("q0", "p0", "X0", "Y0")
INPUTS = ("xi_q", "xi_p", "X_in", "Y_in")
OUTPUTS = ("q", "p", "Xout", "Yout")


def drift_matrix(params: InterfaceParams) -> np.ndarray:
    """Drift matrix ``A`` of ``d(q, p, X, Y)/dt = A (q, p, X, Y) + B w``."""
    kappa, g, gamma = params.rates
    A = np.diag([-gamma / 2, -gamma / 2, -kappa, -kappa])
    A[1, 2] = g  # p <- X
    A[3, 0] = g  # Y <- q
    return A


def noise_matrix(params: InterfaceParams) -> np.ndarray:
    """Input matrix ``B`` acting on ``w = (xi_q, xi_p, X_in, Y_in)``."""
    kappa, _, gamma = params.rates
    return np.diag([math.sqrt(gamma), math.sqrt(gamma), math.sqrt(2 * kappa), math.sqrt(2 * kappa)])


def propagator(params: InterfaceParams, t: float) -> np.ndarray:
    """``exp(A t)``, evaluated numerically (see :func:`theta` for the closed form)."""
    if t < 0:
        raise ParameterDomainError(f"propagation time must be >= 0, got {t}", "t")
    return expm(drift_matrix(params) * t)


def theta(params: InterfaceParams, t):
    """Response of ``p`` to an initial cavity amplitude ``X(0)`` after time ``t``.

    ``theta(t) = g / (kappa - gamma/2) * (exp(-gamma t / 2) - exp(-kappa t))``
    """
    kappa, g, gamma = params.rates
    if kappa <= gamma / 2:
        raise ParameterDomainError("theta needs kappa > gamma/2", "gamma")
    t = np.asarray(t, dtype=float)
    val = g / (kappa - gamma / 2) * (np.exp(-gamma * t / 2) - np.exp(-kappa * t))
    return float(val) if val.ndim == 0 else val


def adiabatic_K(params: InterfaceParams) -> float:
    """QND transfer coefficient ``K = g sqrt(2 tau / kappa)`` of the adiabatic model."""
    kappa, g, _ = params.rates
    return g * math.sqrt(2 * params.tau / kappa)


def _window_integral(mu, tau):
    """``int_0^tau exp(-mu t) dt``, stable at ``mu -> 0``."""
    return tau * float(phi(0, mu * tau))


@dataclass(frozen=True)
class PulseMode:
    """Temporal mode ``u(s)`` on ``[0, duration]`` with unit L2 norm."""

    duration: float
    shape: Kernel

    def __post_init__(self):
        if self.shape.tau != self.duration:
            raise ParameterDomainError("pulse shape window does not match duration", "duration")
        norm = self.shape.norm2()
        if abs(norm - 1.0) > 1e-12:
            raise ParameterDomainError(f"pulse mode must have unit norm, got {norm!r}", "shape")

    @classmethod
    def rectangular(cls, duration: float) -> "PulseMode":
        return cls(duration, Kernel.constant(duration, 1.0 / math.sqrt(duration)))


@dataclass(frozen=True)
class TransferKernels:
    """Linear response of the output functionals over one pulse.

    ``initial[o]`` holds the coefficients of output ``o`` on ``(q0, p0, X0, Y0)``;
    ``kernels[o][w]`` is its kernel against input channel ``w``. Outputs are the
    mechanical quadratures at the end of the pulse and the rectangular-pulse
    averages of the output field, ``Xout`` and ``Yout``.
    """

    params: InterfaceParams
    tier: ModelTier
    initial: dict
    kernels: dict

    @property
    def tau(self) -> float:
        return self.params.tau

    def kernel(self, output: str, channel: str) -> Kernel:
        return self.kernels[output].get(channel, Kernel.zero(self.tau))


def _effective_gamma(params: InterfaceParams, tier: ModelTier) -> float:
    return params.rates.gamma if tier.bath else 0.0


def output_kernels(params: InterfaceParams, tier=ModelTier.FULL) -> TransferKernels:
    """Transfer kernels of the model tier ``tier``.

    Full tiers solve the four coupled equations exactly. Adiabatic tiers set
    the cavity derivatives to zero first, which gives ``X = sqrt(2/kappa) X_in``
    and ``Y = (g q + sqrt(2 kappa) Y_in) / kappa``. Tiers without the bath drop
    mechanical damping altogether.
    """
    tier = ModelTier.parse(tier)
    if tier.adiabatic:
        return _adiabatic_kernels(params, tier)
    return _full_kernels(params, tier)


def _full_kernels(params: InterfaceParams, tier: ModelTier) -> TransferKernels:
    kappa, g, _ = params.rates
    gamma = _effective_gamma(params, tier)
    tau = params.tau
    h = gamma / 2
    lam = kappa - h
    if lam <= 0:
        raise ParameterDomainError("full solution needs kappa > gamma/2", "gamma")
    sg = math.sqrt(gamma)
    s2k = math.sqrt(2 * kappa)

    theta_k = Kernel(tau, [g / lam, -g / lam], [0, 0], [h, kappa]).simplify()
    big_theta_k = one_minus_exp_over_rate(tau, h, g / lam) - one_minus_exp_over_rate(tau, kappa, g / lam)
    theta_tau = g / lam * (math.exp(-h * tau) - math.exp(-kappa * tau))
    big_theta_tau = g / lam * (_window_integral(h, tau) - _window_integral(kappa, tau))
    e_kappa_tau = _window_integral(kappa, tau)
    decay = math.exp(-h * tau)
    field_out = Kernel(tau, [1 / math.sqrt(tau), -2 / math.sqrt(tau)], [0, 0], [0.0, kappa])
    bath = Kernel.exponential(tau, sg, h) if gamma > 0 else Kernel.zero(tau)

    initial = {
        "q": np.array([decay, 0.0, 0.0, 0.0]),
        "p": np.array([0.0, decay, theta_tau, 0.0]),
        "Xout": np.array([0.0, 0.0, s2k * e_kappa_tau / math.sqrt(tau), 0.0]),
        "Yout": np.array([s2k * big_theta_tau / math.sqrt(tau), 0.0, 0.0, s2k * e_kappa_tau / math.sqrt(tau)]),
    }
    kernels = {
        "q": {"xi_q": bath},
        "p": {"xi_p": bath, "X_in": s2k * theta_k},
        "Xout": {"X_in": field_out},
        "Yout": {
            "Y_in": field_out,
            "xi_q": (s2k * sg / math.sqrt(tau)) * big_theta_k if gamma > 0 else Kernel.zero(tau),
        },
    }
    return TransferKernels(params, tier, initial, kernels)


def _adiabatic_kernels(params: InterfaceParams, tier: ModelTier) -> TransferKernels:
    kappa, g, _ = params.rates
    gamma = _effective_gamma(params, tier)
    tau = params.tau
    h = gamma / 2
    sg = math.sqrt(gamma)
    coupling = g * math.sqrt(2 / kappa)  # p <- X_in and Yout <- q after elimination
    decay = math.exp(-h * tau)
    bath = Kernel.exponential(tau, sg, h) if gamma > 0 else Kernel.zero(tau)
    avg = Kernel.constant(tau, 1 / math.sqrt(tau))

    initial = {
        "q": np.array([decay, 0.0, 0.0, 0.0]),
        "p": np.array([0.0, decay, 0.0, 0.0]),
        "Xout": np.zeros(4),
        "Yout": np.array([coupling * _window_integral(h, tau) / math.sqrt(tau), 0.0, 0.0, 0.0]),
    }
    kernels = {
        "q": {"xi_q": bath},
        "p": {"xi_p": bath, "X_in": Kernel.exponential(tau, coupling, h)},
        "Xout": {"X_in": avg},
        "Yout": {
            "Y_in": avg,
            "xi_q": one_minus_exp_over_rate(tau, h, coupling * sg / math.sqrt(tau)) if gamma > 0 else Kernel.zero(tau),
        },
    }
    return TransferKernels(params, tier, initial, kernels)


@dataclass(frozen=True)
class LinearInputOutputMap:
    """Output operators expanded over independent input modes.

    ``coeffs[i, m, 0]`` is the coefficient of output ``outputs[i]`` on the first
    quadrature of mode ``labels[m]`` and ``coeffs[i, m, 1]`` on the second.
    ``variances[m]`` are the symmetric-ordered variances of the two quadratures.
    Modes of kind ``"opo"`` carry a single classical-like quadrature and do not
    enter commutators; every other mode is a canonical pair.
    """

    outputs: tuple
    labels: tuple
    kinds: tuple
    coeffs: np.ndarray
    variances: np.ndarray
    tier: ModelTier
    S: float | None = None
    opo_variance: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n_out, n_modes = len(self.outputs), len(self.labels)
        if self.coeffs.shape != (n_out, n_modes, 2):
            raise ConsistencyError(f"coefficient array has shape {self.coeffs.shape}, expected {(n_out, n_modes, 2)}")
        if self.variances.shape != (n_modes, 2):
            raise ConsistencyError("variance array does not match the mode list")

    def row(self, output: str) -> np.ndarray:
        return self.coeffs[self.outputs.index(output)]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def signal_index(self) -> int:
        return self.kinds.index("signal")

    @property
    def canonical_mask(self) -> np.ndarray:
        return np.array([k != "opo" for k in self.kinds])

    def commutators(self) -> np.ndarray:
        """Matrix of ``[O_a, O_b] / 2i`` over all output pairs."""
        c = self.coeffs[:, self.canonical_mask, :]
        x, y = c[..., 0], c[..., 1]
        return x @ y.T - y @ x.T

    def symplectic_defect(self) -> float:
        """Largest deviation of :meth:`commutators` from the canonical values."""
        target = np.zeros((len(self.outputs),) * 2)
        for a, b in (("q", "p"), ("Xout", "Yout")):
            if a in self.outputs and b in self.outputs:
                i, j = self.outputs.index(a), self.outputs.index(b)
                target[i, j], target[j, i] = 1.0, -1.0
        return float(np.max(np.abs(self.commutators() - target)))

    def noise_variance(self, row: np.ndarray) -> float:
        """Variance of ``row`` with the signal mode's own quadratures left out."""
        r2 = row**2 * self.variances
        total = float(np.sum(r2))
        i = self.signal_index
        return total - float(np.sum(r2[i]))


def project_onto_pulse(kernels: TransferKernels, mode: PulseMode | None = None) -> LinearInputOutputMap:
    """Expand the transfer kernels over the signal pulse mode and its complement.

    Optical kernels on ``X_in`` and ``Y_in`` share one orthonormal basis whose
    first element is the pulse mode ``u``; each basis function then defines a
    canonical quadrature pair of the input field. The bath kernels get their
    own shared basis. A kernel ``f`` thus splits into ``<f, u> u`` plus
    residual modes whose coefficients have squared sum ``int (f - <f,u> u)^2``.
    """
    params = kernels.params
    tau = params.tau
    if mode is None:
        mode = PulseMode.rectangular(tau)
    if not math.isclose(mode.duration, tau, rel_tol=1e-12):
        raise ParameterDomainError(f"pulse mode duration {mode.duration} differs from tau {tau}", "tau")

    outs = OUTPUTS
    labels, kinds, columns, variances = [], [], [], []

    # optical field: signal first, then whatever residual directions the kernels need
    opt_list = [mode.shape]
    opt_index = {}
    for o in outs:
        for ch in ("X_in", "Y_in"):
            k = kernels.kernel(o, ch)
            if not k.is_zero:
                opt_index[(o, ch)] = len(opt_list)
                opt_list.append(k)
    C = orthonormal_coefficients(opt_list)
    for j in range(C.shape[1]):
        col = np.zeros((len(outs), 2))
        for i, o in enumerate(outs):
            for q, ch in enumerate(("X_in", "Y_in")):
                if (o, ch) in opt_index:
                    col[i, q] = C[opt_index[(o, ch)], j]
        labels.append("signal" if j == 0 else f"field_{j}")
        kinds.append("signal" if j == 0 else "field")
        columns.append(col)
        variances.append((1.0, 1.0))

    # mechanical bath
    bath_list, bath_index = [], {}
    for o in outs:
        for ch in ("xi_q", "xi_p"):
            k = kernels.kernel(o, ch)
            if not k.is_zero:
                bath_index[(o, ch)] = len(bath_list)
                bath_list.append(k)
    if bath_list:
        C = orthonormal_coefficients(bath_list)
        v_bath = 2 * params.n_th + 1
        for j in range(C.shape[1]):
            col = np.zeros((len(outs), 2))
            for i, o in enumerate(outs):
                for q, ch in enumerate(("xi_q", "xi_p")):
                    if (o, ch) in bath_index:
                        col[i, q] = C[bath_index[(o, ch)], j]
            labels.append(f"bath_{j + 1}")
            kinds.append("bath")
            columns.append(col)
            variances.append((v_bath, v_bath))

    # initial conditions
    for label, (a, b), n in (("mech_0", (0, 1), params.n_0), ("cav_0", (2, 3), params.n_cav0)):
        col = np.array([[kernels.initial[o][a], kernels.initial[o][b]] for o in outs])
        if np.any(col):
            labels.append(label)
            kinds.append("initial")
            columns.append(col)
            variances.append((2 * n + 1, 2 * n + 1))

    coeffs = np.stack(columns, axis=1)
    return LinearInputOutputMap(
        outputs=outs,
        labels=tuple(labels),
        kinds=tuple(kinds),
        coeffs=coeffs,
        variances=np.array(variances, dtype=float),
        tier=kernels.tier,
        meta={"tau": tau},
    )
