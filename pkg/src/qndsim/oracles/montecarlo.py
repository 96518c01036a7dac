"""Stochastic-trajectory simulation of the Langevin system.

Each trajectory integrates the state together with the running output-field
integral ``A = int Y_out dt`` so that ``Yout = A / sqrt(tau)``. The optical
signal amplitudes are drawn once per trajectory and injected as constant
displacements of the input field; regressing the final quadratures on them
gives the signal weights, and the regression residuals give the noise.

Random numbers come from a counter-based SplitMix64 hash keyed by
``(seed, trajectory)``, so results do not depend on block size or threads.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field

import numba as nb
import numpy as np
from scipy.linalg import expm

from ..channel import assemble_map, compute_channel, decompose, _from_moments
from ..errors import ConfigError, NumericalError, ParameterDomainError
from ..params import InterfaceParams, ModelTier

__all__ = [
    "MonteCarloConfig",
    "OracleReport",
    "LinearSDE",
    "build_sde",
    "simulate",
    "discretized_channel",
    "mc_channel",
    "set_threads",
]

BLOCK = 256

# numba falls back to another threading layer on its own; the notice is noise here
warnings.filterwarnings("ignore", message="The TBB threading layer")
_MASK53 = 2.0**-53


@dataclass(frozen=True)
class MonteCarloConfig:
    """Settings of a Monte Carlo run.

    ``dt`` defaults to ``0.05 / kappa``; the step actually used divides ``tau``
    evenly and never exceeds it. ``increments`` selects symmetric ``+-sqrt(dt)``
    coin flips (same first and second moments as Gaussian increments, much
    cheaper) or Box-Muller Gaussians. ``integrator`` is Euler-Maruyama or the
    exact linear-Gaussian step. ``gain`` of ``None`` takes the channel
    module's optimal feedforward gain, scaled by ``gain_scale``.
    """

    n_traj: int = 100_000
    dt: float | None = None
    seed: int = 1
    signal_sigma: float = 5.0
    increments: str = "rademacher"
    integrator: str = "euler"
    batches: int = 50
    sigma_level: float = 5.0
    gain: float | None = None
    gain_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_traj) != self.n_traj or self.n_traj < 1000:
            raise ConfigError(f"n_traj must be an integer >= 1000, got {self.n_traj!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.increments not in ("rademacher", "gaussian"):
            raise ConfigError(f"increments must be 'rademacher' or 'gaussian', got {self.increments!r}")
        if self.integrator not in ("euler", "exact"):
            raise ConfigError(f"integrator must be 'euler' or 'exact', got {self.integrator!r}")
        if not 2 <= self.batches <= self.n_traj // 10:
            raise ConfigError("batches must lie between 2 and n_traj / 10")
        if not self.signal_sigma > 0 or not self.sigma_level > 0:
            raise ConfigError("signal_sigma and sigma_level must be > 0")

    def step(self, params: InterfaceParams) -> tuple[float, int]:
        """``(dt, n_steps)`` for ``params``; rejects steps above ``0.1 / kappa``."""
        kappa = params.rates.kappa
        dt = 0.05 / kappa if self.dt is None else float(self.dt)
        if dt > 0.1 / kappa * (1 + 1e-12):
            raise ParameterDomainError(f"dt = {dt:g} exceeds the stability bound 0.1/kappa = {0.1 / kappa:g}", "dt")
        n = int(math.ceil(params.tau / dt - 1e-9))
        return params.tau / n, n

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LinearSDE:
    """Linear SDE ``dz = F z dt + G dW + (H_x a_x + H_y a_y) dt`` with readout rows."""

    labels: tuple
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray  # (d, 2): drift per unit signal amplitude
    P0: np.ndarray  # (d, m): initial state = P0 @ standard normals
    readout: dict  # name -> row vector over z


def build_sde(params: InterfaceParams, tier=ModelTier.FULL) -> LinearSDE:
    """Presqueezed input field, thermal bath and the ``Yout`` accumulator as one linear SDE."""
    tier = ModelTier.parse(tier)
    kappa, g, gamma = params.rates
    if not tier.bath:
        gamma = 0.0
    tau, S = params.tau, params.S
    h = gamma / 2
    sb = math.sqrt(gamma * (2 * params.n_th + 1))
    s2k = math.sqrt(2 * kappa)
    rt = math.sqrt(tau)
    v0 = math.sqrt(2 * params.n_0 + 1)
    if tier.adiabatic:
        labels = ("q", "p", "A")
        c = g * math.sqrt(2 / kappa)
        F = np.array([[-h, 0, 0], [0, -h, 0], [c, 0, 0]], dtype=float)
        G = np.zeros((3, 4))
        G[0, 0] = sb
        G[1, 1] = sb
        G[1, 2] = c * S
        G[2, 3] = 1 / S
        H = np.zeros((3, 2))
        H[1, 0] = c * S / rt
        H[2, 1] = 1 / (S * rt)
        P0 = np.zeros((3, 2))
        P0[0, 0] = P0[1, 1] = v0
    else:
        labels = ("q", "p", "X", "Y", "A")
        F = np.zeros((5, 5))
        F[0, 0] = F[1, 1] = -h
        F[2, 2] = F[3, 3] = -kappa
        F[1, 2] = g
        F[3, 0] = g
        F[4, 3] = s2k
        G = np.zeros((5, 4))
        G[0, 0] = G[1, 1] = sb
        G[2, 2] = s2k * S
        G[3, 3] = s2k / S
        G[4, 3] = -1 / S
        H = np.zeros((5, 2))
        H[2, 0] = s2k * S / rt
        H[3, 1] = s2k / (S * rt)
        H[4, 1] = -1 / (S * rt)
        vc = math.sqrt(2 * params.n_cav0 + 1)
        P0 = np.zeros((5, 4))
        P0[0, 0] = P0[1, 1] = v0
        P0[2, 2] = P0[3, 3] = vc
    d = len(labels)
    readout = {"q": np.eye(d)[0], "p": np.eye(d)[1], "Yout": np.eye(d)[d - 1] / rt}
    return LinearSDE(labels, F, G, H, P0, readout)


def _discretize(sde: LinearSDE, dt: float, integrator: str):
    """One-step map ``z -> M z + L w + (c_x a_x + c_y a_y)`` with unit-variance ``w``."""
    d, k = sde.G.shape
    if integrator == "euler":
        M = np.eye(d) + sde.F * dt
        L = sde.G * math.sqrt(dt)
        C = sde.H * dt
        return M, L, C
    # exact step via Van Loan block exponentials
    Z = np.zeros((d, d))
    blk = np.block([[-sde.F, sde.G @ sde.G.T], [Z, sde.F.T]]) * dt
    E = expm(blk)
    M = E[d:, d:].T
    Q = M @ E[:d, d:]
    Q = 0.5 * (Q + Q.T)
    w, V = np.linalg.eigh(Q)
    w = np.clip(w, 0.0, None)
    keep = w > 1e-300
    L = V[:, keep] * np.sqrt(w[keep])
    blk2 = np.zeros((d + 2, d + 2))
    blk2[:d, :d] = sde.F * dt
    blk2[:d, d:] = sde.H * dt
    C = expm(blk2)[:d, d:]
    return M, L, C


def _sparse(A, tol=0.0):
    r, c = np.nonzero(np.abs(A) > tol)
    return r.astype(np.int64), c.astype(np.int64), A[r, c].astype(np.float64)


# numba kernels -------------------------------------------------------------------

@nb.njit(inline="always")
def _mix(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    z = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def _normal_pair(key, counter):
    u1 = (float(_mix(key + counter) >> np.uint64(11)) + 0.5) * _MASK53
    u2 = float(_mix(key + counter + np.uint64(1)) >> np.uint64(11)) * _MASK53
    rad = math.sqrt(-2.0 * math.log(u1))
    return rad * math.cos(2 * math.pi * u2), rad * math.sin(2 * math.pi * u2)


@nb.njit(cache=True)
def _trajectory_keys(seed, j0, B):
    keys = np.empty(B, np.uint64)
    for i in range(B):
        keys[i] = _mix(np.uint64(seed) ^ _mix(np.uint64(j0 + i)))
    return keys


@nb.njit(cache=True)
def _init_block(j0, B, C, P0, sigma, seed, d, out):
    """Trajectory keys, injected amplitudes (stored in ``out``), drift and initial state."""
    keys = _trajectory_keys(seed, j0, B)
    z = np.zeros((d, B))
    drift = np.zeros((d, B))
    m0 = P0.shape[1]
    # per-trajectory draws live at counters >= 2^62, away from the step stream
    base = np.uint64(1) << np.uint64(62)
    for i in range(B):
        ax, ay = _normal_pair(keys[i], base)
        ax *= sigma
        ay *= sigma
        out[j0 + i, d] = ax
        out[j0 + i, d + 1] = ay
        for r in range(d):
            drift[r, i] = C[r, 0] * ax + C[r, 1] * ay
        for m in range(0, m0, 2):
            g1, g2 = _normal_pair(keys[i], base + np.uint64(2 + m))
            for r in range(d):
                z[r, i] += P0[r, m] * g1
                if m + 1 < m0:
                    z[r, i] += P0[r, m + 1] * g2
    return keys, z, drift


@nb.njit(cache=True, fastmath=True)
def _run_block(j0, B, n_steps, Mr, Mc, Mv, Lr, Lc, Lv, k, C, P0, sigma, seed, gaussian, d, out):
    keys, z, drift = _init_block(j0, B, C, P0, sigma, seed, d, out)
    zn = np.zeros((d, B))
    w = np.zeros((k, B))
    words = np.zeros(B, np.uint64)
    per_word = 64 // k
    one = np.uint64(1)
    for n in range(n_steps):
        if gaussian:
            for j in range(0, k, 2):
                ctr = np.uint64(n) * np.uint64(2 * k) + np.uint64(2 * j)
                for i in range(B):
                    g1, g2 = _normal_pair(keys[i], ctr)
                    w[j, i] = g1
                    if j + 1 < k:
                        w[j + 1, i] = g2
        else:
            slot = n % per_word
            if slot == 0:
                c = np.uint64(n // per_word)
                for i in range(B):
                    words[i] = _mix(keys[i] + c)
            sh = np.uint64(k * slot)
            for j in range(k):
                sj = sh + np.uint64(j)
                for i in range(B):
                    w[j, i] = 2.0 * float((words[i] >> sj) & one) - 1.0
        for r in range(d):
            for i in range(B):
                zn[r, i] = drift[r, i]
        for e in range(len(Mv)):
            r = Mr[e]
            c_ = Mc[e]
            v = Mv[e]
            for i in range(B):
                zn[r, i] += v * z[c_, i]
        for e in range(len(Lv)):
            r = Lr[e]
            c_ = Lc[e]
            v = Lv[e]
            for i in range(B):
                zn[r, i] += v * w[c_, i]
        z, zn = zn, z
    for i in range(B):
        for r in range(d):
            out[j0 + i, r] = z[r, i]


# Fused Euler step for the full tier with coin-flip increments: same noise bits
# as the generic kernel, one pass per step so the loop over trajectories vectorizes.
FUSED_M = ((0, 0), (1, 1), (1, 2), (2, 2), (3, 0), (3, 3), (4, 3), (4, 4))
FUSED_L = ((0, 0), (1, 1), (2, 2), (3, 3), (4, 3))


@nb.njit(cache=True, fastmath=True)
def _fused_block(j0, B, n_steps, M, L, C, P0, sigma, seed, out):
    keys, z, drift = _init_block(j0, B, C, P0, sigma, seed, 5, out)
    q = z[0].copy()
    p = z[1].copy()
    X = z[2].copy()
    Y = z[3].copy()
    A = z[4].copy()
    dq, dp, dX, dY, dA = drift[0].copy(), drift[1].copy(), drift[2].copy(), drift[3].copy(), drift[4].copy()
    mqq, mpp, mpx, mxx, myq, myy, may, maa = M[0, 0], M[1, 1], M[1, 2], M[2, 2], M[3, 0], M[3, 3], M[4, 3], M[4, 4]
    lq, lp, lx, ly, la = L[0, 0], L[1, 1], L[2, 2], L[3, 3], L[4, 3]
    words = np.zeros(B, np.uint64)
    one = np.uint64(1)
    for n in range(n_steps):
        slot = n % 16
        if slot == 0:
            c = np.uint64(n // 16)
            for i in range(B):
                words[i] = _mix(keys[i] + c)
        sh = np.uint64(4 * slot)
        for i in range(B):
            b = words[i] >> sh
            w1 = 2.0 * float(b & one) - 1.0
            w2 = 2.0 * float((b >> one) & one) - 1.0
            w3 = 2.0 * float((b >> np.uint64(2)) & one) - 1.0
            w4 = 2.0 * float((b >> np.uint64(3)) & one) - 1.0
            qi, pi, Xi, Yi, Ai = q[i], p[i], X[i], Y[i], A[i]
            q[i] = dq[i] + mqq * qi + lq * w1
            p[i] = dp[i] + mpp * pi + mpx * Xi + lp * w2
            X[i] = dX[i] + mxx * Xi + lx * w3
            Y[i] = dY[i] + myq * qi + myy * Yi + ly * w4
            A[i] = dA[i] + may * Yi + maa * Ai + la * w4
    for i in range(B):
        out[j0 + i, 0] = q[i]
        out[j0 + i, 1] = p[i]
        out[j0 + i, 2] = X[i]
        out[j0 + i, 3] = Y[i]
        out[j0 + i, 4] = A[i]


@nb.njit(parallel=True, cache=True)
def _run(n_traj, n_steps, Mr, Mc, Mv, Lr, Lc, Lv, k, C, P0, sigma, seed, gaussian, d, block):
    out = np.empty((n_traj, d + 2))
    n_blocks = (n_traj + block - 1) // block
    for b in nb.prange(n_blocks):
        j0 = b * block
        B = min(block, n_traj - j0)
        _run_block(j0, B, n_steps, Mr, Mc, Mv, Lr, Lc, Lv, k, C, P0, sigma, seed, gaussian, d, out)
    return out


@nb.njit(parallel=True, cache=True)
def _run_fused(n_traj, n_steps, M, L, C, P0, sigma, seed, block):
    out = np.empty((n_traj, 7))
    n_blocks = (n_traj + block - 1) // block
    for b in nb.prange(n_blocks):
        j0 = b * block
        B = min(block, n_traj - j0)
        _fused_block(j0, B, n_steps, M, L, C, P0, sigma, seed, out)
    return out


def _fits_pattern(A, pattern):
    mask = np.zeros(A.shape, dtype=bool)
    for r, c in pattern:
        mask[r, c] = True
    return not np.any(A[~mask])


def set_threads(n: int | None = None) -> int:
    """Bound numba parallelism by ``n`` or ``QND_SIM_THREADS``; returns the count in use."""
    if n is None:
        env = os.environ.get("QND_SIM_THREADS")
        if env is None:
            return nb.get_num_threads()
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"QND_SIM_THREADS must be an integer, got {env!r}") from None
    n = max(1, min(int(n), nb.config.NUMBA_NUM_THREADS))
    nb.set_num_threads(n)
    return n


def simulate(params: InterfaceParams, tier=ModelTier.FULL, cfg: MonteCarloConfig | None = None) -> dict:
    """Run the trajectories; returns final ``q``, ``p``, ``Yout`` and the injected amplitudes."""
    cfg = cfg or MonteCarloConfig()
    sde = build_sde(params, tier)
    dt, n_steps = cfg.step(params)
    M, L, C = _discretize(sde, dt, cfg.integrator)
    Mr, Mc, Mv = _sparse(M)
    Lr, Lc, Lv = _sparse(L)
    k = L.shape[1]
    P0 = np.ascontiguousarray(sde.P0)
    set_threads()
    C = np.ascontiguousarray(C)
    fused = (cfg.integrator == "euler" and cfg.increments == "rademacher" and M.shape == (5, 5) and k == 4
             and _fits_pattern(M, FUSED_M) and _fits_pattern(L, FUSED_L))
    if fused:
        raw = _run_fused(int(cfg.n_traj), n_steps, M, L, C, P0, float(cfg.signal_sigma), np.uint64(cfg.seed), BLOCK)
    else:
        raw = _run(int(cfg.n_traj), n_steps, Mr, Mc, Mv, Lr, Lc, Lv, k, C, P0,
                   float(cfg.signal_sigma), np.uint64(cfg.seed), cfg.increments == "gaussian", len(sde.labels), BLOCK)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("non-finite values in Monte Carlo trajectories")
    d = len(sde.labels)
    Z = raw[:, :d]
    return {
        "q": Z @ sde.readout["q"],
        "p": Z @ sde.readout["p"],
        "Yout": Z @ sde.readout["Yout"],
        "a_x": raw[:, d].copy(),
        "a_y": raw[:, d + 1].copy(),
        "dt": dt,
        "n_steps": n_steps,
    }


def discretized_channel(params: InterfaceParams, tier=ModelTier.FULL, cfg: MonteCarloConfig | None = None) -> dict:
    """Channel the integrator converges to as ``n_traj -> inf``, from exact moment recursion.

    Propagates the mean response to the signal amplitudes and the noise
    covariance of the one-step map by repeated squaring, so the only
    difference from the analytic channel is the time-discretization bias.
    """
    cfg = cfg or MonteCarloConfig()
    tier = ModelTier.parse(tier)
    sde = build_sde(params, tier)
    dt, n_steps = cfg.step(params)
    M, L, C = _discretize(sde, dt, cfg.integrator)
    d = M.shape[0]
    # (Phi, Psi, Q) after n steps: z_n = Phi z_0 + Psi a + noise with covariance Q
    acc = (np.eye(d), np.zeros((d, 2)), np.zeros((d, d)))
    pw = (M, C, L @ L.T)
    n = n_steps
    while n:
        if n & 1:
            Pa, Ca, Qa = acc
            Pb, Cb, Qb = pw
            acc = (Pb @ Pa, Pb @ Ca + Cb, Pb @ Qa @ Pb.T + Qb)
        Pb, Cb, Qb = pw
        pw = (Pb @ Pb, Pb @ Cb + Cb, Pb @ Qb @ Pb.T + Qb)
        n >>= 1
    Phi, Psi, Q = acc
    cov = Phi @ sde.P0 @ sde.P0.T @ Phi.T + Q
    gain = compute_channel(params, tier).gain if cfg.gain is None else float(cfg.gain)
    gain *= cfg.gain_scale
    r_q = sde.readout["q"] - gain * sde.readout["Yout"]
    r_p = sde.readout["p"]
    a = -float(r_q @ Psi[:, 1])
    b = float(r_p @ Psi[:, 0])
    var_q = float(r_q @ cov @ r_q) - a * a
    var_p = float(r_p @ cov @ r_p) - b * b
    T, V_XN, V_YN, _, _ = _from_moments(a, b, var_q, var_p)
    return {"T": T, "V_XN": V_XN, "V_YN": V_YN, "V_N": math.sqrt(V_XN * V_YN), "gain": gain,
            "dt": dt, "n_steps": n_steps}


# estimation --------------------------------------------------------------------

def _channel_from_moments(Mom, gain):
    """Channel estimate from the moment matrix of ``(1, a_x, a_y, q, p, Yout)``."""
    n = Mom[0, 0]
    # design (1, a_x, a_y); responses q_ff and p
    D = Mom[:3, :3]
    W = np.zeros((6, 2))
    W[3, 0], W[5, 0], W[4, 1] = 1.0, -gain, 1.0  # q_ff = q - gain * Yout
    Dy = Mom[:3, :] @ W
    Yy = W.T @ Mom @ W
    beta = np.linalg.solve(D, Dy)
    resid = (Yy - Dy.T @ beta) / (n - 3)
    a = -beta[2, 0]
    b = beta[1, 1]
    var_q = resid[0, 0] - a * a
    var_p = resid[1, 1] - b * b
    T, V_XN, V_YN, r, _ = _from_moments(a, b, var_q, var_p)
    return {
        "T": T,
        "V_XN": V_XN,
        "V_YN": V_YN,
        "V_N": math.sqrt(V_XN * V_YN) if V_XN > 0 and V_YN > 0 else math.nan,
        "coef_qff_Ysig": beta[2, 0],
        "coef_qff_Xsig": beta[1, 0],
        "coef_p_Xsig": beta[1, 1],
        "coef_p_Ysig": beta[2, 1],
        "var_q_noise": var_q,
        "var_p_noise": var_p,
    }


@dataclass
class OracleReport:
    """Monte Carlo estimates, jackknife standard errors and the analytic comparison."""

    estimates: dict
    std_errors: dict
    analytic: dict
    z_scores: dict
    passed: dict
    sigma_level: float
    gain: float
    tier: str
    params: dict
    config: dict
    n_steps: int
    dt: float
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.passed.items() if not v]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


CHECKED = ("T", "V_XN", "V_YN", "V_N")


def mc_channel(params: InterfaceParams, tier=ModelTier.FULL, cfg: MonteCarloConfig | None = None) -> OracleReport:
    """Estimate the channel by simulation and compare with :func:`qndsim.channel.decompose`.

    Standard errors come from a delete-one-batch jackknife over ``cfg.batches``
    contiguous trajectory groups. ``T``, ``V_XN``, ``V_YN`` and ``V_N`` pass when within
    ``cfg.sigma_level`` standard errors of the analytic values.
    """
    cfg = cfg or MonteCarloConfig()
    tier = ModelTier.parse(tier)
    iomap = assemble_map(params, tier)
    if cfg.gain is None:
        base_gain = compute_channel(params, tier).gain
    else:
        base_gain = float(cfg.gain)
    gain = base_gain * cfg.gain_scale
    analytic_ch = decompose(iomap, base_gain)
    sim = simulate(params, tier, cfg)

    cols = np.column_stack([np.ones(cfg.n_traj), sim["a_x"], sim["a_y"], sim["q"], sim["p"], sim["Yout"]])
    groups = np.array_split(np.arange(cfg.n_traj), cfg.batches)
    moments = np.array([cols[g].T @ cols[g] for g in groups])
    total = moments.sum(axis=0)
    est = _channel_from_moments(total, gain)
    loo = [_channel_from_moments(total - m, gain) for m in moments]
    B = cfg.batches
    se = {}
    for key in est:
        vals = np.array([r[key] for r in loo])
        se[key] = float(math.sqrt((B - 1) / B * np.sum((vals - vals.mean()) ** 2)))

    sig = iomap.signal_index
    analytic = analytic_ch.to_dict()
    analytic["coef_qff_Ysig"] = float(iomap.row("q")[sig, 1] - base_gain * iomap.row("Yout")[sig, 1])
    analytic["coef_qff_Xsig"] = float(iomap.row("q")[sig, 0] - base_gain * iomap.row("Yout")[sig, 0])
    analytic["coef_p_Xsig"] = float(iomap.row("p")[sig, 0])
    analytic["coef_p_Ysig"] = float(iomap.row("p")[sig, 1])
    q_ff = iomap.row("q") - base_gain * iomap.row("Yout")
    analytic["var_q_noise"] = iomap.noise_variance(q_ff)
    analytic["var_p_noise"] = iomap.noise_variance(iomap.row("p"))

    z, passed = {}, {}
    for key in est:
        if key in analytic and se[key] > 0:
            z[key] = float((est[key] - analytic[key]) / se[key])
    for key in CHECKED:
        passed[key] = bool(abs(z.get(key, math.inf)) <= cfg.sigma_level)
    return OracleReport(
        estimates={k: float(v) for k, v in est.items()},
        std_errors=se,
        analytic={k: analytic[k] for k in est if k in analytic},
        z_scores=z,
        passed=passed,
        sigma_level=cfg.sigma_level,
        gain=gain,
        tier=tier.value,
        params=params.to_dict(),
        config=cfg.to_dict(),
        n_steps=sim["n_steps"],
        dt=sim["dt"],
    )
