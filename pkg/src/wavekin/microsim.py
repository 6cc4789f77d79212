"""Monte Carlo simulator of the rescaled Fourier-mode system.

Exponential integrator for the linear (dissipation) part, pseudospectral cubic
nonlinearity with exact Wick correction, and an exact per-step
Ornstein-Uhlenbeck stochastic increment, so the pure-forcing marginal is exact
for any time step.  Trajectories use counter-based per-trajectory RNG streams,
making ensembles order-independent and thread-count-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fftn, ifftn, next_fast_len

from wavekin.lattice import TorusSpec
from wavekin.profiles import SpectralProfile, eval_on_lattice
from wavekin.scaling import ScalingLaw


@dataclass
class FieldState:
    """Complex mode amplitudes on the truncated lattice at one rescaled time."""

    time: float
    amplitudes: np.ndarray  # complex, aligned with spec.mode_nums

    def as_dict(self, spec: TorusSpec) -> dict:
        return {tuple(m): a for m, a in zip(spec.mode_nums, self.amplitudes)}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    t_end: float = 1.0
    ensemble_size: int = 1
    seed: int = 0
    dealias: bool = True
    store_every: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.dt > self.t_end:
            raise ValueError("need 0 < dt <= t_end")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer multiple of dt")
        return n


@dataclass
class EnsembleStats:
    times: np.ndarray                 # stored rescaled times, shape (S,)
    mean_mode_energy: np.ndarray      # E|w_k|^2 estimates, shape (S, N)
    std_error: np.ndarray             # standard error of the mean, shape (S, N)
    mass_trace: np.ndarray            # ensemble-mean normalized mass, shape (S,)
    mass_stderr: np.ndarray
    n_samples: int
    n_flagged: int
    mode_nums: np.ndarray


class ConvolutionPlan:
    """Padded-FFT plan for the truncated-lattice cubic convolution.

    With dealias=True the grid is padded to at least 4*M+1 points per axis
    (M the largest integer numerator), which makes the cyclic convolution of
    ball-supported modes exactly alias-free; dealias=False uses the compact
    2*M+1 grid and accepts aliasing.
    """

    def __init__(self, spec: TorusSpec, dealias: bool = True):
        self.spec = spec
        M = spec.max_num
        n = 4 * M + 1 if dealias else 2 * M + 1
        self.n_grid = next_fast_len(n)
        self.shape = (self.n_grid,) * spec.dim
        idx = np.mod(spec.mode_nums, self.n_grid)
        self.flat_idx = np.ravel_multi_index(idx.T, self.shape)
        self.norm = float(self.n_grid**spec.dim)

    def cubic(self, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
        """sum_{k1-k2+k3=k} a_{k1} conj(b_{k2}) c_{k3} over the truncated lattice.

        Inputs may carry leading batch axes; the convolution runs on the last
        mode axis.
        """
        batch = a.shape[:-1]
        ga = np.zeros(batch + self.shape, dtype=np.complex128)
        flat = ga.reshape(batch + (-1,))
        flat[..., self.flat_idx] = a
        axes = tuple(range(-self.spec.dim, 0))
        psi_a = ifftn(ga, axes=axes) * self.norm
        if b is a:
            psi_b = psi_a
        else:
            gb = np.zeros(batch + self.shape, dtype=np.complex128)
            gb.reshape(batch + (-1,))[..., self.flat_idx] = b
            psi_b = ifftn(gb, axes=axes) * self.norm
        if c is a:
            psi_c = psi_a
        elif c is b:
            psi_c = psi_b
        else:
            gc = np.zeros(batch + self.shape, dtype=np.complex128)
            gc.reshape(batch + (-1,))[..., self.flat_idx] = c
            psi_c = ifftn(gc, axes=axes) * self.norm
        with np.errstate(over="ignore", invalid="ignore"):
            prod = psi_a * np.conj(psi_b) * psi_c
        coeffs = fftn(prod, axes=axes) / self.norm
        return coeffs.reshape(batch + (-1,))[..., self.flat_idx]


def trilinear_w(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    t: float,
    law: ScalingLaw,
    spec: TorusSpec,
    plan: ConvolutionPlan,
) -> np.ndarray:
    """Interaction operator W(a,b,c)_k = (i lam T / L^d) sum eps a1 conj(b2) c3 e^{iTt Omega}.

    The epsilon exclusions collapse exactly to two diagonal subtractions: the
    k2=k1 and k2=k3 slices sum to (sum_j a_j conj(b_j)) c_k + (sum_j conj(b_j) c_j) a_k,
    and the doubly-counted k1=k2=k3 term cancels against the eps=-1 case.
    """
    s = spec.sq_norms_zeta
    phase = np.exp(1j * law.T * t * s)
    A = a * phase
    B = b * phase
    C = c * phase
    conv = plan.cubic(A, B, C)
    with np.errstate(over="ignore", invalid="ignore"):
        sAB = (A * np.conj(B)).sum(axis=-1, keepdims=True)
        sBC = (np.conj(B) * C).sum(axis=-1, keepdims=True)
        corrected = conv - sAB * C - sBC * A
    pref = 1j * law.lam * law.T / spec.size_L**spec.dim
    return pref * np.conj(phase) * corrected


def nonlinear_term(
    state: FieldState,
    law: ScalingLaw,
    spec: TorusSpec,
    plan: ConvolutionPlan | None = None,
) -> np.ndarray:
    """W(w,w,w) for a single field state; aligned with spec.mode_nums."""
    if plan is None:
        plan = ConvolutionPlan(spec, dealias=True)
    w = np.asarray(state.amplitudes)
    if not np.isfinite(w).all():
        raise FloatingPointError("non-finite amplitudes entering the nonlinear term")
    return trilinear_w(w, w, w, state.time, law, spec, plan)


def ou_step_coefficients(
    gammas: np.ndarray, vartheta: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """(decay, sigma) with decay = e^{-vartheta gamma dt} and
    sigma^2 = (1 - e^{-2 vartheta gamma dt}) / (2 vartheta gamma),
    the step-exact OU marginal; series fallback keeps the vartheta -> 0 limit
    sigma^2 -> dt."""
    x = vartheta * gammas * dt
    decay = np.exp(-x)
    small = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        sig2 = np.where(small, dt * (1.0 - x), dt * (1.0 - np.exp(-2.0 * x)) / (2.0 * x))
    return decay, np.sqrt(sig2)


def step(
    state: FieldState,
    cfg: SimConfig,
    law: ScalingLaw,
    spec: TorusSpec,
    rng: np.random.Generator,
    r: float = 1.0,
    b_vals: np.ndarray | None = None,
    plan: ConvolutionPlan | None = None,
) -> FieldState:
    """One exponential Euler-Maruyama step of the rescaled mode system.

    w <- e^{-vt g dt} w + dt e^{-vt g dt} W(w,w,w) + b sqrt(vt) sigma(dt) xi,
    with xi independent standard complex Gaussians (E|xi|^2 = 2).
    """
    if plan is None:
        plan = ConvolutionPlan(spec, dealias=cfg.dealias)
    gam = spec.gammas(r)
    decay, sigma = ou_step_coefficients(gam, law.vartheta, cfg.dt)
    if b_vals is None:
        b_vals = np.zeros(spec.n_modes())
    w = state.amplitudes
    if law.lam != 0.0:
        wcal = trilinear_w(w, w, w, state.time, law, spec, plan)
    else:
        wcal = 0.0
    xi = rng.standard_normal((2, spec.n_modes()))
    noise = b_vals * np.sqrt(law.vartheta) * sigma * (xi[0] + 1j * xi[1])
    new = decay * (w + cfg.dt * wcal) + noise
    if not np.isfinite(new).all():
        raise FloatingPointError("NaN/overflow during time step")
    return FieldState(time=state.time + cfg.dt, amplitudes=new)


def trajectory_rng(seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, trajectory index)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(traj_index,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class BatchRecord:
    """Stored quantities for a batch of trajectories sharing the time grid."""

    times: np.ndarray                  # (S,)
    mode_energy: np.ndarray            # (B, S, N) |w_k|^2 at stored times
    mass: np.ndarray                   # (B, S) normalized mass
    dissipation: np.ndarray            # (B, S) accumulated 2 vt int g|w|^2 (normalized)
    injection: np.ndarray              # (B, S) accumulated exact noise-energy input
    martingale: np.ndarray             # (B, S) accumulated stochastic mass flux
    flagged: np.ndarray                # (B,) bool
    stored_fields: np.ndarray | None = None  # (B, S, N) complex, optional


def run_batch(
    w0: np.ndarray,
    noise: np.ndarray | None,
    cfg: SimConfig,
    law: ScalingLaw,
    spec: TorusSpec,
    r: float = 1.0,
    b_vals: np.ndarray | None = None,
    rngs: list | None = None,
    store_fields: bool = False,
    plan: ConvolutionPlan | None = None,
) -> BatchRecord:
    """Integrate a batch of trajectories w0 of shape (B, N).

    Noise can be supplied explicitly as an array of shape (B, steps, N) of
    standard complex Gaussians (for path-coupled comparisons), or drawn from
    per-trajectory generators.
    """
    if plan is None:
        plan = ConvolutionPlan(spec, dealias=cfg.dealias)
    B, N = w0.shape
    Ld = spec.size_L**spec.dim
    gam = spec.gammas(r)
    decay, sigma = ou_step_coefficients(gam, law.vartheta, cfg.dt)
    if b_vals is None:
        b_vals = np.zeros(N)
    amp = b_vals * np.sqrt(law.vartheta) * sigma
    # Injection accrues at the Ito rate 2 vartheta B dt (the energy-balance
    # form); the O(dt^2) gap to the step-exact noise variance cancels against
    # the trapezoidal dissipation bias, leaving an O(dt^3)-per-step residual.
    inj_step = 2.0 * law.vartheta * float((b_vals**2).sum()) * cfg.dt / Ld

    n_steps = cfg.n_steps
    store_idx = list(range(0, n_steps + 1, cfg.store_every))
    if store_idx[-1] != n_steps:
        store_idx.append(n_steps)
    S = len(store_idx)
    times = np.asarray([i * cfg.dt for i in store_idx])

    w = w0.astype(np.complex128).copy()
    flagged = np.zeros(B, dtype=bool)
    mode_energy = np.zeros((B, S, N))
    mass = np.zeros((B, S))
    dissip = np.zeros((B, S))
    inject = np.zeros((B, S))
    mart = np.zeros((B, S))
    fields = np.zeros((B, S, N), dtype=np.complex128) if store_fields else None

    diss_acc = np.zeros(B)
    inj_acc = np.zeros(B)
    mart_acc = np.zeros(B)

    def record(slot):
        e = np.abs(w) ** 2
        mode_energy[:, slot] = e
        mass[:, slot] = e.sum(axis=1) / Ld
        dissip[:, slot] = diss_acc
        inject[:, slot] = inj_acc
        mart[:, slot] = mart_acc
        if store_fields:
            fields[:, slot] = w

    slot = 0
    record(slot)
    slot += 1
    diss_rate_prev = (2.0 * law.vartheta * gam * np.abs(w) ** 2).sum(axis=1) / Ld
    t = 0.0
    for istep in range(n_steps):
        if noise is not None:
            xi = noise[:, istep]
        else:
            xi = np.empty((B, N), dtype=np.complex128)
            for bidx in range(B):
                z = rngs[bidx].standard_normal((2, N))
                xi[bidx] = z[0] + 1j * z[1]
        if law.lam != 0.0:
            wcal = trilinear_w(w, w, w, t, law, spec, plan)
        else:
            wcal = 0.0
        w_det = decay * (w + cfg.dt * wcal)
        dnoise = amp * xi
        w = w_det + dnoise
        t += cfg.dt

        bad = ~np.isfinite(w).all(axis=1)
        if bad.any():
            flagged |= bad
            w[bad] = 0.0

        # Energy accounting: trapezoid for dissipation, exact per-step noise
        # injection, pathwise martingale from the sampled increments.
        diss_rate = (2.0 * law.vartheta * gam * np.abs(w) ** 2).sum(axis=1) / Ld
        diss_acc = diss_acc + 0.5 * cfg.dt * (diss_rate_prev + diss_rate)
        diss_rate_prev = diss_rate
        inj_acc = inj_acc + inj_step
        cross = 2.0 * (w_det * np.conj(dnoise)).real.sum(axis=1) / Ld
        quad = ((np.abs(dnoise) ** 2).sum(axis=1) - 2.0 * (amp**2).sum()) / Ld
        mart_acc = mart_acc + cross + quad

        if istep + 1 == store_idx[slot]:
            record(slot)
            slot += 1

    return BatchRecord(
        times=times,
        mode_energy=mode_energy,
        mass=mass,
        dissipation=dissip,
        injection=inject,
        martingale=mart,
        flagged=flagged,
        stored_fields=fields,
    )


def energy_balance_residual(record: BatchRecord) -> np.ndarray:
    """Pathwise residual of the energy identity at the stored times.

    residual = (M(t) - M(0)) + dissipation - injection - martingale; its
    ensemble mean vanishes up to time-discretization error, which makes it an
    integrator self-test.  Shape (B, S).
    """
    dM = record.mass - record.mass[:, :1]
    return dM + record.dissipation - record.injection - record.martingale


def run_ensemble(
    cfg: SimConfig,
    law: ScalingLaw,
    spec: TorusSpec,
    c: SpectralProfile,
    b: SpectralProfile,
    r: float = 1.0,
    batch_size: int | None = None,
    threads: int = 1,
) -> EnsembleStats:
    """Ensemble statistics of |w_k(t)|^2 with w_k(0) = c_k eta_k, E|eta|^2 = 1.

    Results are bitwise independent of batch size and thread count: every
    trajectory owns a counter-based stream keyed by (seed, index), and batch
    partial sums are reduced in fixed index order.
    """
    c_vals = eval_on_lattice(c, spec)
    b_vals = eval_on_lattice(b, spec)
    N = spec.n_modes()
    plan = ConvolutionPlan(spec, dealias=cfg.dealias)

    if batch_size is None:
        per_traj = cfg.n_steps * N * 16
        batch_size = max(1, min(64, int(2.5e8 / max(per_traj, 1))))

    starts = list(range(0, cfg.ensemble_size, batch_size))

    def run_one_batch(start):
        idxs = range(start, min(start + batch_size, cfg.ensemble_size))
        rngs = [trajectory_rng(cfg.seed, i) for i in idxs]
        w0 = np.empty((len(rngs), N), dtype=np.complex128)
        for j, rng in enumerate(rngs):
            eta = rng.standard_normal((2, N))
            w0[j] = c_vals * (eta[0] + 1j * eta[1]) / np.sqrt(2.0)
        rec = run_batch(w0, None, cfg, law, spec, r=r, b_vals=b_vals, rngs=rngs, plan=plan)
        ok = ~rec.flagged
        e = rec.mode_energy[ok]
        m = rec.mass[ok]
        return (
            e.sum(axis=0),
            (e**2).sum(axis=0),
            m.sum(axis=0),
            (m**2).sum(axis=0),
            int(ok.sum()),
            int(rec.flagged.sum()),
            rec.times,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_one_batch, starts))
    else:
        parts = [run_one_batch(s) for s in starts]

    times = parts[0][6]
    S = times.shape[0]
    sum_e = np.zeros((S, N))
    sum_e2 = np.zeros((S, N))
    sum_m = np.zeros(S)
    sum_m2 = np.zeros(S)
    n_ok = 0
    n_flagged = 0
    # Fixed-order pairwise reduction keeps results independent of threading.
    for part in parts:
        sum_e += part[0]
        sum_e2 += part[1]
        sum_m += part[2]
        sum_m2 += part[3]
        n_ok += part[4]
        n_flagged += part[5]

    if n_flagged > 0.01 * cfg.ensemble_size:
        raise RuntimeError(
            f"{n_flagged}/{cfg.ensemble_size} trajectories flagged non-finite; aborting"
        )
    if n_ok < 2:
        raise RuntimeError("need at least 2 valid trajectories for standard errors")

    mean_e = sum_e / n_ok
    var_e = np.maximum(sum_e2 - n_ok * mean_e**2, 0.0) / (n_ok - 1)
    se_e = np.sqrt(var_e / n_ok)
    mean_m = sum_m / n_ok
    var_m = np.maximum(sum_m2 - n_ok * mean_m**2, 0.0) / (n_ok - 1)
    se_m = np.sqrt(var_m / n_ok)

    return EnsembleStats(
        times=times,
        mean_mode_energy=mean_e,
        std_error=se_e,
        mass_trace=mean_m,
        mass_stderr=se_m,
        n_samples=n_ok,
        n_flagged=n_flagged,
        mode_nums=spec.mode_nums,
    )


def gronwall_envelope(
    law: ScalingLaw,
    spec: TorusSpec,
    c: SpectralProfile,
    b: SpectralProfile,
    times: np.ndarray,
) -> np.ndarray:
    """Mean-mass upper bound B + (M0 - B) e^{-2 vartheta t} in normalized units."""
    Ld = spec.size_L**spec.dim
    B = float((eval_on_lattice(b, spec) ** 2).sum()) / Ld
    M0 = float((eval_on_lattice(c, spec) ** 2).sum()) / Ld
    return B + (M0 - B) * np.exp(-2.0 * law.vartheta * np.asarray(times))


def default_dt(law: ScalingLaw, peak_energy: float = 1.0) -> float:
    """Step heuristic: resolve the nonlinear rotation rate lam*T*|w|^2."""
    rate = law.lambda_T * max(peak_energy, 1e-12)
    return min(0.01, 0.1 / rate) if rate > 0 else 0.01
