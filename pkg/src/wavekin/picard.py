"""Picard iterates of the mode system and the discrete lattice sums bridging
to the kinetic limit.

Iterates are built pathwise on a shared time grid by quadrature of the
Duhamel integral; second-moment formulas for the first iterates are evaluated
with an exact inner time integral and Gauss-Legendre outer quadrature; the
Sigma sums are exact truncated-lattice sums with a numba fast path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from wavekin._accel import HAVE_NUMBA, njit
from wavekin.lattice import TorusSpec
from wavekin.microsim import ConvolutionPlan, trilinear_w
from wavekin.scaling import ScalingLaw
from wavekin.zeroth import OUParams, w0_two_time_cov


@dataclass
class IterateStack:
    """Pathwise iterates w^(0..N) on a common uniform grid over [0, 1]."""

    order_N: int
    time_grid: np.ndarray           # (T,)
    iterates: list[np.ndarray]      # each (T, N) complex

    def partial_sum(self, n: int) -> np.ndarray:
        return sum(self.iterates[: n + 1])


def max_abs_omega(spec: TorusSpec) -> float:
    """Upper bound for |Omega| over truncated-lattice quadruples."""
    return 2.0 * float(spec.sq_norms_zeta.max())


def mode_index_table(spec: TorusSpec) -> np.ndarray:
    """Dense numerator -> mode-index table over the bounding box, -1 outside."""
    M = spec.max_num
    shape = (2 * M + 1,) * spec.dim
    table = np.full(shape, -1, dtype=np.int64)
    idx = tuple((spec.mode_nums[:, d] + M) for d in range(spec.dim))
    table[idx] = np.arange(spec.n_modes())
    return table


def duhamel_cumulative(F: np.ndarray, times: np.ndarray, decay_rates: np.ndarray) -> np.ndarray:
    """I(t_i) = int_0^{t_i} e^{-rate (t_i - s)} F(s) ds by exponential trapezoid.

    F has shape (T, N); decay_rates (N,).  The recurrence
    I_{i+1} = e^{-rate dt} I_i + dt/2 (e^{-rate dt} F_i + F_{i+1}) is exact for
    piecewise-linear F.
    """
    out = np.zeros_like(F)
    for i in range(1, times.size):
        dt = times[i] - times[i - 1]
        decay = np.exp(-decay_rates * dt)
        out[i] = decay * out[i - 1] + 0.5 * dt * (decay * F[i - 1] + F[i])
    return out


def build_iterates(
    N: int,
    time_grid: np.ndarray,
    sampled_w0: np.ndarray,
    law: ScalingLaw,
    spec: TorusSpec,
    r: float = 1.0,
    nyquist_factor: float = 8.0,
) -> IterateStack:
    """w^(n) = sum_{n1+n2+n3=n-1} I W(w^(n1), w^(n2), w^(n3)) on the grid.

    The grid must resolve the fastest interaction phase: dt <= 2 pi / (factor
    * T * max|Omega|); violating grids raise instead of silently aliasing.
    """
    if N < 0 or N > 4:
        raise ValueError("iterate order must satisfy 0 <= N <= 4 (cost grows combinatorially)")
    time_grid = np.asarray(time_grid, dtype=np.float64)
    if time_grid.ndim != 1 or time_grid[0] != 0.0:
        raise ValueError("time grid must start at 0")
    dt = np.diff(time_grid)
    if (dt <= 0).any():
        raise ValueError("time grid must be increasing")
    om_rate = law.T * max_abs_omega(spec) if law.lam != 0.0 else 0.0
    if om_rate > 0 and dt.max() > 2.0 * np.pi / (nyquist_factor * om_rate):
        raise ValueError(
            f"grid too coarse: dt={dt.max():.3g} exceeds Nyquist budget "
            f"{2*np.pi/(nyquist_factor*om_rate):.3g} for T*max|Omega|={om_rate:.3g}"
        )
    if sampled_w0.shape != (time_grid.size, spec.n_modes()):
        raise ValueError("sampled_w0 shape must be (len(time_grid), n_modes)")

    plan = ConvolutionPlan(spec, dealias=True)
    gam_rate = law.vartheta * spec.gammas(r)
    iterates = [sampled_w0.astype(np.complex128)]
    for n in range(1, N + 1):
        F = np.zeros_like(sampled_w0, dtype=np.complex128)
        for n1 in range(n):
            for n2 in range(n - n1):
                n3 = n - 1 - n1 - n2
                F += trilinear_w(
                    iterates[n1], iterates[n2], iterates[n3], time_grid, law, spec, plan
                )
        iterates.append(duhamel_cumulative(F, time_grid, gam_rate))
    return IterateStack(order_N=N, time_grid=time_grid, iterates=iterates)


# ---------------------------------------------------------------------------
# First-iterate second moment (rescaled-time convention: vartheta, T)
# ---------------------------------------------------------------------------


def _inner_cos_integral(tau, a, b):
    """int_0^tau e^{-a u} cos(b u) du, elementwise closed form."""
    den = a**2 + b**2
    degenerate = den < 1e-300
    den = np.where(degenerate, 1.0, den)
    val = (a + np.exp(-a * tau) * (b * np.sin(b * tau) - a * np.cos(b * tau))) / den
    return np.where(degenerate, tau, val)


def f_on_lattice(c_vals, b_vals, gammas, rate, t):
    """f(k, t) = c^2 e^{-2 rate g t} + (b^2/g)(1 - e^{-2 rate g t}), per mode."""
    dec = np.exp(-2.0 * rate * gammas * t)
    return c_vals**2 * dec + (b_vals**2 / gammas) * (1.0 - dec)


def first_iterate_second_moment(
    k_index: int,
    t: float,
    law: ScalingLaw,
    spec: TorusSpec,
    c_vals: np.ndarray,
    b_vals: np.ndarray,
    r: float = 1.0,
    n_nodes: int = 24,
) -> float:
    """E|w^(1)_k(t)|^2 on the truncated lattice, rescaled time.

    4 (lam T/L^d)^2 sum over eps=+1 lattice triples of
    int_0^t dt2 e^{-2 vt g_k (t-t2)} prod_j f(k_j,t2)
    int_0^{t-t2} e^{-vt Gamma_- u} cos(T Omega u) du,
    inner integral closed-form, outer Gauss-Legendre; the eps=-1 diagonal
    k1=k2=k3=k is added exactly from the sixth moment of the OU law.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1] (rescaled time)")
    nums = spec.mode_nums
    s = spec.sq_norms_zeta
    gam = spec.gammas(r)
    vt = law.vartheta
    N = spec.n_modes()
    M = spec.max_num
    mk = nums[k_index]
    sk = s[k_index]
    gk = gam[k_index]
    idx_table = mode_index_table(spec)

    xq, wq = roots_legendre(n_nodes)
    t2 = 0.5 * t * (xq + 1.0)
    wq = 0.5 * t * wq
    outer_decay = np.exp(-2.0 * vt * gk * (t - t2))
    f_tab = np.stack([f_on_lattice(c_vals, b_vals, gam, vt, tt) for tt in t2])  # (Q, N)

    is_k = (nums == mk).all(axis=1)
    total = 0.0
    chunk = max(1, int(4e6 // max(N, 1)))
    for start in range(0, N, chunk):
        sl = slice(start, min(start + chunk, N))
        m1 = nums[sl]
        m2 = m1[:, None, :] + nums[None, :, :] - mk[None, None, :]
        inside = (np.abs(m2) <= M).all(axis=-1)
        m2c = np.clip(m2, -M, M)
        i2 = idx_table[tuple(m2c[..., d] + M for d in range(spec.dim))]
        valid = inside & (i2 >= 0) & ~is_k[sl][:, None] & ~is_k[None, :]
        i2 = np.where(valid, i2, 0)

        om = s[sl][:, None] - s[i2] + s[None, :] - sk
        gm = gam[sl][:, None] + gam[i2] + gam[None, :] - gk
        inner = _inner_cos_integral(
            (t - t2)[:, None, None], vt * gm[None, :, :], law.T * om[None, :, :]
        )
        prod = f_tab[:, sl][:, :, None] * f_tab[:, i2] * f_tab[:, None, :]
        total += float(
            (wq[:, None, None] * outer_decay[:, None, None] * prod * inner * valid[None]).sum()
        )
    pref = 4.0 * (law.lam * law.T / spec.size_L**spec.dim) ** 2
    main = pref * total

    # eps=-1 diagonal: E[(|w|^2 w)(t1) conj((|w|^2 w)(t2))] = 4 R11 R22 R12 + 2 R12^3
    p = OUParams(gamma_k=float(gk), rate=vt, c_k=float(c_vals[k_index]), b_k=float(b_vals[k_index]))
    xg, wg = roots_legendre(32)
    tg = 0.5 * t * (xg + 1.0)
    wg = 0.5 * t * wg
    R = np.array([[w0_two_time_cov(p, a, b) for b in tg] for a in tg])
    diagR = np.diag(R)
    sixth = 4.0 * diagR[:, None] * diagR[None, :] * R + 2.0 * R**3
    ker = np.exp(-vt * gk * (2.0 * t - tg[:, None] - tg[None, :])) * sixth
    diag = (law.lam * law.T / spec.size_L**spec.dim) ** 2 * float(
        (wg[:, None] * wg[None, :] * ker).sum()
    )
    return main + diag


# ---------------------------------------------------------------------------
# Sigma lattice sums (kinetic-time convention: varrho, T_kin)
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _sigma_kernel(
    m1x, m1y, s1, g1, f1, m3x, m3y, s3, g3, f3, fk, f2tab, g2tab, s2tab, off,
    mkx, mky, sk, gk, inv_nu, phase_rate, damp_rate, kind,
):  # pragma: no cover - jit
    """Accumulate (Sigma1, Sigma2) over active (k1, k3) pairs.

    f2tab/g2tab/s2tab are dense tables over numerators shifted by `off`;
    f2tab < 0 marks numerators outside the truncated lattice.  kind 0 uses
    the product f1 f2 f3; kind 1 the cross-term product
    fk (f1 f3 - f2 f3 - f1 f2).
    """
    acc1 = 0.0
    acc2 = 0.0
    n1 = m1x.shape[0]
    n3 = m3x.shape[0]
    for i in range(n1):
        a1x = m1x[i] - mkx + off
        a1y = m1y[i] - mky + off
        for j in range(n3):
            ix = a1x + m3x[j]
            iy = a1y + m3y[j]
            f2 = f2tab[ix, iy]
            if f2 < 0.0:
                continue
            om = s1[i] - s2tab[ix, iy] + s3[j] - sk
            gm = g1[i] + g2tab[ix, iy] + g3[j] - gk
            x = inv_nu * om
            den = gm * gm + x * x
            if kind == 0:
                prod = f1[i] * f2 * f3[j]
            else:
                prod = fk * (f1[i] * f3[j] - f2 * f3[j] - f1[i] * f2)
            acc1 += (gm / den) * prod
            phi = phase_rate * om
            acc2 += ((gm * np.cos(phi) - x * np.sin(phi)) / den) * np.exp(
                -damp_rate * (gm + 2.0 * gk)
            ) * prod
    return acc1, acc2


def _sigma_fallback(
    m1, s1, g1, f1, m3, s3, g3, f3, fk, f2tab, g2tab, s2tab, off,
    mk, sk, gk, inv_nu, phase_rate, damp_rate, kind,
):
    acc1 = 0.0
    acc2 = 0.0
    chunk = max(1, int(4e6 // max(m3.shape[0], 1)))
    for start in range(0, m1.shape[0], chunk):
        sl = slice(start, min(start + chunk, m1.shape[0]))
        idx = m1[sl][:, None, :] + m3[None, :, :] - mk[None, None, :] + off
        f2 = f2tab[idx[..., 0], idx[..., 1]]
        ok = f2 >= 0.0
        f2 = np.where(ok, f2, 0.0)
        om = s1[sl][:, None] - s2tab[idx[..., 0], idx[..., 1]] + s3[None, :] - sk
        gm = g1[sl][:, None] + g2tab[idx[..., 0], idx[..., 1]] + g3[None, :] - gk
        x = inv_nu * om
        den = gm**2 + x**2
        if kind == 0:
            prod = f1[sl][:, None] * f2 * f3[None, :]
        else:
            prod = fk * (f1[sl][:, None] * f3[None, :] - f2 * f3[None, :] - f1[sl][:, None] * f2)
        prod = np.where(ok, prod, 0.0)
        acc1 += float(((gm / den) * prod).sum())
        phi = phase_rate * om
        acc2 += float(
            (((gm * np.cos(phi) - x * np.sin(phi)) / den) * np.exp(-damp_rate * (gm + 2.0 * gk)) * prod).sum()
        )
    return acc1, acc2


def sigma_sums(
    k_index: int,
    t: float,
    tau: float,
    law: ScalingLaw,
    spec: TorusSpec,
    f1,
    f2,
    f3,
    r: float = 1.0,
    nu: float | None = None,
    active_tol: float = 1e-9,
    kind: int = 0,
    fk_val: float | None = None,
) -> tuple[float, float]:
    """Exact truncated-lattice sums (Sigma1, Sigma2) with prefactor 4 L^{-2d}.

    Sigma1 carries the kernel nu^{-1} Gamma_-/(Gamma_-^2 + (nu^{-1} Omega)^2);
    Sigma2 carries Re(nu^{-1} e^{i T_kin Omega tau} / (Gamma_- - i nu^{-1} Omega))
    damped by e^{-varrho Gamma_+ tau}.  f1, f2, f3 are spectra as callables
    (t, pts) -> values.  Pairs whose f1*f3 weight is below active_tol times
    the peak are skipped; the neglected mass is O(active_tol) relative.
    """
    if nu is None:
        nu = law.nu
    nums = spec.mode_nums
    pts = nums.astype(np.float64) / spec.size_L
    s = spec.sq_norms_zeta
    gam = spec.gammas(r)
    f1v = np.asarray(f1(t, pts), dtype=np.float64)
    f2v = np.asarray(f2(t, pts), dtype=np.float64)
    f3v = np.asarray(f3(t, pts), dtype=np.float64)
    mk = nums[k_index]
    sk = float(s[k_index])
    gk = float(gam[k_index])
    fk = float(f1v[k_index]) if (kind == 1 and fk_val is None) else float(fk_val or 0.0)

    act1 = np.flatnonzero(np.abs(f1v) > active_tol * max(np.abs(f1v).max(), 1e-300))
    act3 = np.flatnonzero(np.abs(f3v) > active_tol * max(np.abs(f3v).max(), 1e-300))
    if kind == 1:
        # cross-term products are not jointly factorized; keep every mode
        act1 = np.arange(nums.shape[0])
        act3 = act1

    M = spec.max_num
    off = 2 * M + int(np.abs(mk).max())
    side = 2 * off + 1
    f2tab = np.full((side, side), -1.0)
    g2tab = np.ones((side, side))
    s2tab = np.zeros((side, side))
    ix = nums[:, 0] + off
    iy = nums[:, 1] + off
    f2tab[ix, iy] = f2v
    g2tab[ix, iy] = gam
    s2tab[ix, iy] = s

    args = (
        np.ascontiguousarray(nums[act1, 0]),
        np.ascontiguousarray(nums[act1, 1]),
        np.ascontiguousarray(s[act1]),
        np.ascontiguousarray(gam[act1]),
        np.ascontiguousarray(f1v[act1]),
        np.ascontiguousarray(nums[act3, 0]),
        np.ascontiguousarray(nums[act3, 1]),
        np.ascontiguousarray(s[act3]),
        np.ascontiguousarray(gam[act3]),
        np.ascontiguousarray(f3v[act3]),
        fk,
        f2tab,
        g2tab,
        s2tab,
        off,
    )
    inv_nu = 1.0 / nu
    phase_rate = law.T_kin * tau
    damp_rate = law.varrho * tau
    if HAVE_NUMBA and spec.dim == 2:
        acc1, acc2 = _sigma_kernel(
            *args, int(mk[0]), int(mk[1]), sk, gk, inv_nu, phase_rate, damp_rate, kind
        )
    else:
        acc1, acc2 = _sigma_fallback(
            nums[act1], s[act1], gam[act1], f1v[act1],
            nums[act3], s[act3], gam[act3], f3v[act3],
            fk, f2tab, g2tab, s2tab, off, mk, sk, gk, inv_nu, phase_rate, damp_rate, kind,
        )
    pref = 4.0 / spec.size_L ** (2 * spec.dim)
    return pref * inv_nu * acc1, pref * inv_nu * acc2


def I1_I2(
    k_index: int,
    t: float,
    law: ScalingLaw,
    spec: TorusSpec,
    f,
    r: float = 1.0,
    nu: float | None = None,
    n_nodes: int = 16,
) -> tuple[float, float]:
    """Duhamel-in-time integrals of the Sigma sums (kinetic-time convention).

    I1(k,t) = int_0^t e^{-2 vr g_k (t-s)} Sigma1(k,s) ds;
    I2(k,t) = int_0^t Sigma2(k,s,t-s) ds.
    """
    gk = float(spec.gammas(r)[k_index])
    xq, wq = roots_legendre(n_nodes)
    sq = 0.5 * t * (xq + 1.0)
    wq = 0.5 * t * wq
    i1 = 0.0
    i2 = 0.0
    for snode, wnode in zip(sq, wq):
        s1, _ = sigma_sums(k_index, snode, 0.0, law, spec, f, f, f, r=r, nu=nu)
        _, s2 = sigma_sums(k_index, snode, t - snode, law, spec, f, f, f, r=r, nu=nu)
        i1 += wnode * np.exp(-2.0 * law.varrho * gk * (t - snode)) * s1
        i2 += wnode * s2
    return i1, i2


def w0w2_cross_terms(
    k_index: int,
    t: float,
    law: ScalingLaw,
    spec: TorusSpec,
    f,
    r: float = 1.0,
    nu: float | None = None,
    n_nodes: int = 16,
) -> tuple[float, float]:
    """(I1~, I2~): the 2 Re E[w0 conj(w2)] Duhamel integrals.

    Same kernels as I1/I2 with the product replaced by
    K[f] = f(k1) f(k3) f(k) - f(k2) f(k3) f(k) - f(k1) f(k2) f(k), and the
    I2~ damping carrying e^{-2 vr Gamma_+ (t-s)} as printed in the source
    derivation.
    """
    gk = float(spec.gammas(r)[k_index])
    xq, wq = roots_legendre(n_nodes)
    sq = 0.5 * t * (xq + 1.0)
    wq = 0.5 * t * wq
    i1 = 0.0
    i2 = 0.0
    for snode, wnode in zip(sq, wq):
        s1, _ = sigma_sums(k_index, snode, 0.0, law, spec, f, f, f, r=r, nu=nu, kind=1)
        # doubled Gamma_+ damping: reuse the Sigma2 kernel at doubled tau,
        # with the phase restored to the undoubled value
        _, s2 = _sigma2_doubled(k_index, snode, t - snode, law, spec, f, r=r, nu=nu)
        i1 += wnode * np.exp(-2.0 * law.varrho * gk * (t - snode)) * s1
        i2 += wnode * s2
    return i1, i2


def _sigma2_doubled(k_index, t, tau, law, spec, f, r=1.0, nu=None):
    """Sigma2 variant with damping e^{-2 varrho Gamma_+ tau} and K[f] product."""
    if nu is None:
        nu = law.nu
    return _sigma_custom(k_index, t, law.T_kin * tau, 2.0 * law.varrho * tau, law, spec, f, r, nu)


def _sigma_custom(k_index, t, phase_rate, damp_rate, law, spec, f, r, nu):
    nums = spec.mode_nums
    pts = nums.astype(np.float64) / spec.size_L
    s = spec.sq_norms_zeta
    gam = spec.gammas(r)
    fv = np.asarray(f(t, pts), dtype=np.float64)
    mk = nums[k_index]
    sk = float(s[k_index])
    gk = float(gam[k_index])
    fk = float(fv[k_index])
    M = spec.max_num
    off = 2 * M + int(np.abs(mk).max())
    side = 2 * off + 1
    f2tab = np.full((side, side), -1.0)
    g2tab = np.ones((side, side))
    s2tab = np.zeros((side, side))
    f2tab[nums[:, 0] + off, nums[:, 1] + off] = fv
    g2tab[nums[:, 0] + off, nums[:, 1] + off] = gam
    s2tab[nums[:, 0] + off, nums[:, 1] + off] = s
    act = np.arange(nums.shape[0])
    inv_nu = 1.0 / nu
    if HAVE_NUMBA and spec.dim == 2:
        _, acc2 = _sigma_kernel(
            np.ascontiguousarray(nums[act, 0]), np.ascontiguousarray(nums[act, 1]),
            np.ascontiguousarray(s), np.ascontiguousarray(gam), np.ascontiguousarray(fv),
            np.ascontiguousarray(nums[act, 0]), np.ascontiguousarray(nums[act, 1]),
            np.ascontiguousarray(s), np.ascontiguousarray(gam), np.ascontiguousarray(fv),
            fk, f2tab, g2tab, s2tab, off,
            int(mk[0]), int(mk[1]), sk, gk, inv_nu, phase_rate, damp_rate, 1,
        )
    else:
        _, acc2 = _sigma_fallback(
            nums, s, gam, fv, nums, s, gam, fv, fk, f2tab, g2tab, s2tab, off,
            mk, sk, gk, inv_nu, phase_rate, damp_rate, 1,
        )
    return 4.0 / spec.size_L ** (2 * spec.dim) * inv_nu * acc2
