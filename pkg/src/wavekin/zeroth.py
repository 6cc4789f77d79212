"""Exact treatment of the zeroth Picard iterate.

The zeroth iterate is the damped free evolution of the random data plus the
stochastic forcing integral, an Ornstein-Uhlenbeck process per mode.  This
module provides exact joint path sampling and the closed-form one- and
two-time second moments that the rest of the toolkit checks against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wavekin.lattice import TorusSpec
from wavekin.microsim import ou_step_coefficients, trajectory_rng
from wavekin.scaling import ScalingLaw


@dataclass(frozen=True)
class OUParams:
    """Single-mode OU parameters.

    rate is vartheta for horizon-T (rescaled-time) runs or varrho for
    kinetic-time formulas; the formulas are identical under the time
    dictionary s = t * T_kin / T.
    """

    gamma_k: float
    rate: float
    c_k: float
    b_k: float

    def __post_init__(self):
        if self.gamma_k < 1.0:
            raise ValueError("gamma_k must be >= 1")
        if self.rate < 0 or self.c_k < 0 or self.b_k < 0:
            raise ValueError("rate, c_k, b_k must be nonnegative")


def w0_second_moment(p: OUParams, t: float) -> float:
    """E|w^(0)(t)|^2 = c^2 e^{-2 rho g t} + (b^2/g)(1 - e^{-2 rho g t})."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    decay = np.exp(-2.0 * p.rate * p.gamma_k * t)
    return float(p.c_k**2 * decay + (p.b_k**2 / p.gamma_k) * (1.0 - decay))


def w0_two_time_cov(p: OUParams, t1: float, t2: float) -> float:
    """E[w^(0)(t1) conj(w^(0)(t2))], real-valued.

    c^2 e^{-rho g (t1+t2)} + (b^2/g)(e^{-rho g |t1-t2|} - e^{-rho g (t1+t2)}).
    The pairing without conjugation, E[w(t1) w(t2)], vanishes.
    """
    if t1 < 0 or t2 < 0:
        raise ValueError("times must be nonnegative")
    rg = p.rate * p.gamma_k
    sum_decay = np.exp(-rg * (t1 + t2))
    return float(p.c_k**2 * sum_decay + (p.b_k**2 / p.gamma_k) * (np.exp(-rg * abs(t1 - t2)) - sum_decay))


def sample_w0_path(p: OUParams, times, rng: np.random.Generator) -> np.ndarray:
    """Exact joint sample of the zeroth iterate at sorted times >= 0.

    w(0) = c eta with eta standard complex Gaussian; subsequent values use
    the exact OU transition (the same step-exact variance the simulator
    uses), so marginals match w0_second_moment in law for any spacing.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-d array")
    if (np.diff(times) <= 0).any() or times[0] < 0:
        raise ValueError("times must be strictly increasing and nonnegative")
    out = np.empty(times.size, dtype=np.complex128)
    eta = rng.standard_normal(2)
    w = p.c_k * (eta[0] + 1j * eta[1]) / np.sqrt(2.0)
    t_prev = 0.0
    for i, t in enumerate(times):
        dt = t - t_prev
        if dt > 0:
            decay, sigma = ou_step_coefficients(np.asarray([p.gamma_k]), p.rate, dt)
            z = rng.standard_normal(2)
            w = decay[0] * w + p.b_k * np.sqrt(p.rate) * sigma[0] * (z[0] + 1j * z[1])
        out[i] = w
        t_prev = t
    return out


def sample_w0_lattice_paths(
    law: ScalingLaw,
    spec: TorusSpec,
    c_vals: np.ndarray,
    b_vals: np.ndarray,
    times: np.ndarray,
    rng: np.random.Generator,
    r: float = 1.0,
    rate: float | None = None,
) -> np.ndarray:
    """Joint exact zeroth-iterate paths for every lattice mode, shape (T, N).

    One RNG stream drives all modes (initial eta draw first, then one
    complex increment per mode per grid interval, in time order).
    """
    times = np.asarray(times, dtype=np.float64)
    if times[0] != 0.0:
        raise ValueError("lattice paths start at t = 0")
    if rate is None:
        rate = law.vartheta
    N = spec.n_modes()
    gam = spec.gammas(r)
    out = np.empty((times.size, N), dtype=np.complex128)
    eta = rng.standard_normal((2, N))
    out[0] = c_vals * (eta[0] + 1j * eta[1]) / np.sqrt(2.0)
    for i in range(1, times.size):
        dt = times[i] - times[i - 1]
        decay, sigma = ou_step_coefficients(gam, rate, dt)
        z = rng.standard_normal((2, N))
        out[i] = decay * out[i - 1] + b_vals * np.sqrt(rate) * sigma * (z[0] + 1j * z[1])
    return out


def ou_rng(seed: int, traj_index: int = 0) -> np.random.Generator:
    return trajectory_rng(seed, traj_index)
