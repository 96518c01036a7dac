"""Presqueezing, homodyne feedforward and reduction to a beamsplitter channel.

After the pulse the mechanical quadratures are displaced by the measured
output field, ``q -> q - gain * Yout``, and formally squeezed so that both
quadratures carry the signal with the same weight ``sqrt(T)``::

    q_f = -sqrt(T) Y_in + sqrt(1 - T) X_N
    p_f =  sqrt(T) X_in + sqrt(1 - T) Y_N

``V_N = sqrt(V_XN * V_YN)`` is the added-noise variance in shot-noise units.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import LinearInputOutputMap, PulseMode, adiabatic_K, output_kernels, project_onto_pulse
from .errors import ConsistencyError, NumericalError, ParameterDomainError
from .params import InterfaceParams, ModelTier

__all__ = [
    "SqueezerModel",
    "ChannelDecomposition",
    "apply_presqueeze",
    "adiabatic_gain",
    "adiabatic_transmittivity",
    "optimize_gain",
    "decompose",
    "assemble_map",
    "compute_channel",
    "vn_cavity_approx",
    "vn_thermal_estimate",
    "tau_window",
    "negativity_bound",
]

MISMATCH_TOL = 1e-6


@dataclass(frozen=True)
class SqueezerModel:
    """Measurement-induced squeezer: ``X -> S X``, ``Y -> Y/S + sqrt(1 - 1/S^2) Y_sq``.

    ``opo_Y_variance`` is the variance of the OPO's squeezed quadrature ``Y_sq``;
    0 is the ideal limit, 1 means an unsqueezed ancilla.
    """

    S: float
    opo_Y_variance: float = 0.0

    def __post_init__(self):
        if not self.S > 0 or not math.isfinite(self.S):
            raise ParameterDomainError(f"squeezer gain must be > 0, got {self.S}", "S")
        if not 0.0 <= self.opo_Y_variance <= 1.0:
            raise ParameterDomainError(
                f"OPO variance must lie in [0, 1], got {self.opo_Y_variance}", "opo_Y_variance"
            )

    @property
    def bs_transmittivity(self) -> float:
        return 1.0 / self.S**2


@dataclass(frozen=True)
class ChannelDecomposition:
    """Effective beamsplitter reduction of the transfer."""

    T: float
    V_XN: float
    V_YN: float
    V_N: float
    gain: float
    sym_factor: float
    model_tier: ModelTier
    mismatch: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model_tier"] = self.model_tier.value
        return d


def apply_presqueeze(iomap: LinearInputOutputMap, sq: SqueezerModel) -> LinearInputOutputMap:
    """Rescale every optical input mode by the squeezer and add OPO noise if any.

    Squeezing acts on the whole input field inside the pulse window, so the
    residual field modes are rescaled along with the signal.
    """
    if iomap.S is not None:
        raise ConsistencyError("presqueezing has already been applied to this map")
    S = sq.S
    coeffs = iomap.coeffs.copy()
    optical = [i for i, k in enumerate(iomap.kinds) if k in ("signal", "field")]
    coeffs[:, optical, 0] *= S
    coeffs[:, optical, 1] /= S
    labels, kinds, variances = list(iomap.labels), list(iomap.kinds), [tuple(v) for v in iomap.variances]
    extra = []
    V = sq.opo_Y_variance
    if V > 0 and S != 1.0:
        w = math.sqrt(1.0 - sq.bs_transmittivity)
        for i in optical:
            col = np.zeros((len(iomap.outputs), 2))
            col[:, 1] = iomap.coeffs[:, i, 1] * w
            extra.append(col)
            labels.append(f"opo:{iomap.labels[i]}")
            kinds.append("opo")
            variances.append((0.0, V))
    if extra:
        coeffs = np.concatenate([coeffs, np.stack(extra, axis=1)], axis=1)
    return replace(
        iomap,
        labels=tuple(labels),
        kinds=tuple(kinds),
        coeffs=coeffs,
        variances=np.array(variances, dtype=float),
        S=S,
        opo_variance=V,
    )


def adiabatic_gain(K: float, S: float) -> float:
    """Feedforward coefficient ``K' = KS / (1 + (KS)^2)`` of the adiabatic protocol."""
    if K < 0 or S <= 0:
        raise ParameterDomainError("adiabatic gain needs K >= 0 and S > 0")
    x = K * S
    return x / (1.0 + x * x)


def adiabatic_transmittivity(K: float, S: float = 1.0) -> float:
    x2 = (K * S) ** 2
    return x2 / (1.0 + x2)


def _signal_coefficients(iomap: LinearInputOutputMap, gain: float):
    i = iomap.signal_index
    q_row = iomap.row("q") - gain * iomap.row("Yout")
    p_row = iomap.row("p")
    return q_row, p_row, -q_row[i, 1], p_row[i, 0]


def _from_moments(a, b, var_q, var_p):
    """Beamsplitter parameters from signal weights and raw noise variances."""
    T = a * b + 0.0  # no negative zero
    if a > 0 and b > 0:
        r = math.sqrt(b / a)
        mismatch = abs(r * a - b / r) / math.sqrt(T)
    else:
        r, mismatch = 1.0, 0.0
    V_XN = r * r * var_q / (1.0 - T)
    V_YN = var_p / (r * r * (1.0 - T))
    return T, V_XN, V_YN, r, mismatch


def decompose(iomap: LinearInputOutputMap, gain: float) -> ChannelDecomposition:
    """Reduce ``iomap`` with feedforward ``gain`` to ``(T, V_XN, V_YN)``.

    ``T`` is the product of the signal weights on the two quadratures, i.e. the
    squared common weight after the formal symmetrizing squeeze whose amplitude
    is reported as ``sym_factor``.
    """
    q_row, p_row, a, b = _signal_coefficients(iomap, gain)
    i = iomap.signal_index
    cross = max(abs(q_row[i, 0]), abs(p_row[i, 1]))
    if cross > MISMATCH_TOL * max(abs(a), abs(b), 1.0):
        raise ConsistencyError(f"signal leaks into the wrong quadrature (weight {cross:.3g})")
    T = a * b + 0.0  # no negative zero
    if not (0.0 <= T < 1.0):
        raise ConsistencyError(f"feedforward gain {gain!r} gives transmittivity {T!r} outside [0, 1)")
    var_q = iomap.noise_variance(q_row)
    var_p = iomap.noise_variance(p_row)
    T, V_XN, V_YN, r, mismatch = _from_moments(a, b, var_q, var_p)
    if mismatch > MISMATCH_TOL:
        raise ConsistencyError(f"signal weights differ after symmetrization (relative {mismatch:.3g})")
    V_N = math.sqrt(V_XN * V_YN)
    if not all(math.isfinite(v) for v in (V_XN, V_YN)):
        raise NumericalError("non-finite added-noise variance")
    return ChannelDecomposition(float(T), float(V_XN), float(V_YN), float(V_N), float(gain), float(r), iomap.tier,
                                float(mismatch))


def _gain_bound(iomap: LinearInputOutputMap) -> float:
    """Gain at which ``T`` would reach 1 (0 if nothing can be fed forward)."""
    _, _, a1, b = _signal_coefficients(iomap, 1.0)
    _, _, a0, _ = _signal_coefficients(iomap, 0.0)
    slope = a1 - a0
    if b <= 0 or slope <= 0:
        return 0.0
    return (1.0 - a0 * b) / (slope * b)


def optimize_gain(iomap: LinearInputOutputMap, xrtol: float = 1e-10) -> float:
    """Feedforward gain that minimizes the mean added noise ``(V_XN + V_YN) / 2``.

    The geometric mean ``V_N`` alone is flat in the gain for the adiabatic
    model, so the arithmetic mean is used; it is smallest where the two noise
    quadratures balance and coincides with ``S * adiabatic_gain`` there.
    """
    if iomap.S is None:
        raise ConsistencyError("apply presqueezing before optimizing the feedforward gain")
    g_max = _gain_bound(iomap)
    if g_max <= 0.0:
        return 0.0

    def objective(gain):
        ch = decompose(iomap, gain)
        val = 0.5 * (ch.V_XN + ch.V_YN)
        if not math.isfinite(val):
            raise NumericalError(f"non-finite noise objective at gain {gain!r}")
        return val

    eps = 1e-9
    res = minimize_scalar(
        objective,
        bounds=(g_max * eps, g_max * (1 - eps)),
        method="bounded",
        options={"xatol": xrtol * g_max * 1e-2, "maxiter": 500},
    )
    if not res.success:
        raise NumericalError(f"gain optimization failed: {res.message}")
    return float(res.x)


def assemble_map(params: InterfaceParams, tier=ModelTier.FULL, *, opo_variance: float = 0.0,
                 mode: PulseMode | None = None) -> LinearInputOutputMap:
    """Kernels, pulse projection and presqueezing for one parameter point."""
    tier = ModelTier.parse(tier)
    iomap = project_onto_pulse(output_kernels(params, tier), mode)
    return apply_presqueeze(iomap, SqueezerModel(params.S, opo_variance))


def compute_channel(params: InterfaceParams, tier=ModelTier.FULL, *, gain="optimal",
                    opo_variance: float = 0.0) -> ChannelDecomposition:
    """Channel parameters of ``params`` in model tier ``tier``.

    ``gain`` is ``"optimal"`` (numerical minimization), ``"adiabatic"`` (the
    closed-form ``S * K'`` of the adiabatic protocol) or an explicit number.
    """
    iomap = assemble_map(params, tier, opo_variance=opo_variance)
    if gain == "optimal":
        G = optimize_gain(iomap)
    elif gain == "adiabatic":
        G = params.S * adiabatic_gain(adiabatic_K(params), params.S)
    else:
        try:
            G = float(gain)
        except (TypeError, ValueError):
            raise ParameterDomainError(f"gain must be 'optimal', 'adiabatic' or a number, got {gain!r}", "gain") from None
    return decompose(iomap, G)


# closed-form estimates ---------------------------------------------------------

def vn_cavity_approx(params: InterfaceParams) -> float:
    """Added noise from cavity memory alone: ``sqrt(1 + 4 g^2 S^4 / kappa^2)``."""
    kappa, g, _ = params.rates
    return math.sqrt(1.0 + 4.0 * g**2 * params.S**4 / kappa**2)


def vn_thermal_estimate(params: InterfaceParams) -> float:
    """Bath-dominated added noise ``1 + 2 gamma (g tau S)^2 (2 n_th + 1) / kappa``."""
    kappa, g, gamma = params.rates
    return 1.0 + 2.0 * gamma * (g * params.tau * params.S) ** 2 * (2 * params.n_th + 1) / kappa


def tau_window(params: InterfaceParams, epsilon: float | None = None) -> tuple[float, float]:
    """Pulse-duration window ``S^2 eps / kappa << tau << 1 / (eps gamma n_th)``.

    ``epsilon`` defaults to ``g^2 S^2 tau / kappa`` of ``params``. Only the bounds
    are reported; the upper one is infinite without bath heating.
    """
    kappa, g, gamma = params.rates
    if epsilon is None:
        epsilon = g**2 * params.S**2 * params.tau / kappa
    if epsilon <= 0:
        raise ParameterDomainError("epsilon must be > 0", "epsilon")
    lower = params.S**2 * epsilon / kappa
    upper = math.inf if gamma * params.n_th == 0 else 1.0 / (epsilon * gamma * params.n_th)
    return lower, upper


def negativity_bound(T: float) -> float:
    """Largest ``V_N**2`` quoted as compatible with single-photon negativity, ``T / (1 - T)``."""
    if not 0.0 < T < 1.0:
        raise ParameterDomainError(f"transmittivity must lie in (0, 1), got {T}", "T")
    return T / (1.0 - T)
