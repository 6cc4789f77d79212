"""Torus geometry, Fourier lattice, dispersion, dissipation and resonance
quantities shared by every other module.

Wavevectors are stored as integer numerators over the shared box size L so
that momentum constraints and pair-matching are exact; no floating-point
equality is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from wavekin._accel import HAVE_NUMBA, njit


@dataclass(frozen=True)
class Wavevector:
    """Lattice wavevector k = nums / L, held as exact integer numerators."""

    nums: tuple[int, ...]
    L: float

    def __post_init__(self):
        object.__setattr__(self, "nums", tuple(int(n) for n in self.nums))

    @property
    def dim(self) -> int:
        return len(self.nums)

    @property
    def components(self) -> tuple[float, ...]:
        return tuple(n / self.L for n in self.nums)

    def __add__(self, other: "Wavevector") -> "Wavevector":
        self._check(other)
        return Wavevector(tuple(a + b for a, b in zip(self.nums, other.nums)), self.L)

    def __sub__(self, other: "Wavevector") -> "Wavevector":
        self._check(other)
        return Wavevector(tuple(a - b for a, b in zip(self.nums, other.nums)), self.L)

    def __neg__(self) -> "Wavevector":
        return Wavevector(tuple(-a for a in self.nums), self.L)

    def norm(self) -> float:
        return float(np.sqrt(sum((n / self.L) ** 2 for n in self.nums)))

    def _check(self, other: "Wavevector") -> None:
        if self.L != other.L or len(self.nums) != len(other.nums):
            raise ValueError("wavevectors live on different lattices")


@dataclass(frozen=True)
class TorusSpec:
    """Torus of size L with aspect ratios zeta and Euclidean mode cutoff."""

    dim: int
    size_L: float
    zeta: tuple[float, ...]
    cutoff: float

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise ValueError(f"dim must be 1..3, got {self.dim}")
        if self.size_L <= 0:
            raise ValueError("size_L must be positive")
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        zeta = tuple(float(z) for z in self.zeta)
        if len(zeta) != self.dim:
            raise ValueError("zeta length must equal dim")
        if any(not 1.0 <= z <= 2.0 for z in zeta):
            raise ValueError(f"zeta components must lie in [1,2], got {zeta}")
        object.__setattr__(self, "zeta", zeta)

    @cached_property
    def max_num(self) -> int:
        """Largest integer numerator magnitude retained (|k| <= cutoff)."""
        return int(np.floor(self.cutoff * self.size_L + 1e-9))

    @cached_property
    def mode_nums(self) -> np.ndarray:
        """Integer numerators of all retained modes, shape (N, dim).

        The lattice is { k in (Z/L)^dim : |k| <= cutoff }, boundary included,
        and is symmetric under k -> -k by construction.
        """
        M = self.max_num
        axes = [np.arange(-M, M + 1)] * self.dim
        grids = np.meshgrid(*axes, indexing="ij")
        nums = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
        r2 = (nums.astype(np.float64) / self.size_L) ** 2
        keep = r2.sum(axis=1) <= self.cutoff**2 + 1e-12
        return np.ascontiguousarray(nums[keep])

    @cached_property
    def sq_norms_zeta(self) -> np.ndarray:
        """|k|^2_zeta for every retained mode, aligned with mode_nums."""
        return self.sq_norm_zeta_of(self.mode_nums)

    def sq_norm_zeta_of(self, nums: np.ndarray) -> np.ndarray:
        z = np.asarray(self.zeta)
        k = np.asarray(nums, dtype=np.float64) / self.size_L
        return (z * k**2).sum(axis=-1)

    def gammas(self, r: float) -> np.ndarray:
        """(1+|k|^2_zeta)^r for every retained mode."""
        _check_r(r)
        return (1.0 + self.sq_norms_zeta) ** r

    def n_modes(self) -> int:
        return self.mode_nums.shape[0]

    def wavevector(self, nums) -> Wavevector:
        return Wavevector(tuple(nums), self.size_L)

    def index_of(self, wv: Wavevector) -> int:
        """Position of wv in mode_nums; raises KeyError if off-lattice."""
        key = tuple(wv.nums)
        table = self._index_table
        if key not in table:
            raise KeyError(f"wavevector {key} not on the truncated lattice")
        return table[key]

    @cached_property
    def _index_table(self) -> dict:
        return {tuple(row): i for i, row in enumerate(self.mode_nums)}


def _check_r(r: float) -> None:
    if not 0 < r <= 1:
        raise ValueError(f"dissipation exponent r must lie in (0,1], got {r}")


def _check_dim(k: Wavevector, spec: TorusSpec) -> None:
    if k.dim != spec.dim:
        raise ValueError(f"wavevector dim {k.dim} != torus dim {spec.dim}")
    if k.L != spec.size_L:
        raise ValueError("wavevector box size does not match torus")


def dispersion(k: Wavevector, spec: TorusSpec) -> float:
    """|k|^2_zeta = sum_j zeta_j |k^(j)|^2."""
    _check_dim(k, spec)
    return float(sum(z * (n / spec.size_L) ** 2 for z, n in zip(spec.zeta, k.nums)))


def gamma(k: Wavevector, spec: TorusSpec, r: float) -> float:
    """Dissipation multiplier (1+|k|^2_zeta)^r; always >= 1."""
    _check_r(r)
    return (1.0 + dispersion(k, spec)) ** r


def zeta_dot(a: Wavevector, b: Wavevector, spec: TorusSpec) -> float:
    """zeta-weighted dot product a . b."""
    return float(
        sum(
            z * (na / spec.size_L) * (nb / spec.size_L)
            for z, na, nb in zip(spec.zeta, a.nums, b.nums)
        )
    )


def _require_momentum(k1, k2, k3, k) -> None:
    if (k1 - k2 + k3).nums != k.nums:
        raise ValueError("momentum constraint k = k1 - k2 + k3 violated")


def omega(k1: Wavevector, k2: Wavevector, k3: Wavevector, k: Wavevector, spec: TorusSpec) -> float:
    """Resonance function |k1|^2_z - |k2|^2_z + |k3|^2_z - |k|^2_z.

    Enforces k = k1 - k2 + k3; equals -2 (k1-k) .zeta (k3-k) identically.
    """
    _require_momentum(k1, k2, k3, k)
    return (
        dispersion(k1, spec)
        - dispersion(k2, spec)
        + dispersion(k3, spec)
        - dispersion(k, spec)
    )


def gamma_pm(
    k1: Wavevector,
    k2: Wavevector,
    k3: Wavevector,
    k: Wavevector,
    spec: TorusSpec,
    r: float,
) -> tuple[float, float]:
    """(Gamma_+, Gamma_-) = (+-gamma_k + sum_j gamma_kj); Gamma_+ = Gamma_- + 2 gamma_k."""
    _require_momentum(k1, k2, k3, k)
    gk = gamma(k, spec, r)
    gsum = gamma(k1, spec, r) + gamma(k2, spec, r) + gamma(k3, spec, r)
    return gsum + gk, gsum - gk


def epsilon_factor(k1: Wavevector, k2: Wavevector, k3: Wavevector) -> int:
    """Interaction sign: +1 if k2 not in {k1,k3}; -1 if k1=k2=k3; 0 otherwise."""
    if k2.nums != k1.nums and k2.nums != k3.nums:
        return 1
    if k1.nums == k2.nums == k3.nums:
        return -1
    return 0


# ---------------------------------------------------------------------------
# Exhaustive resonance-gap scan
# ---------------------------------------------------------------------------


@dataclass
class ResonanceGapReport:
    """Result of the exhaustive quadruple scan at one (spec, bound)."""

    bound: float
    r_values: tuple[float, ...]
    min_gap_sq: dict = field(default_factory=dict)      # r -> min Gamma_-^2 + Omega^2
    min_gamma_minus_res: dict = field(default_factory=dict)  # r -> min Gamma_- on |Omega|<=1
    n_representatives: int = 0

    def ok(self, r: float) -> bool:
        return self.min_gap_sq[r] >= 1.0 - 1e-12 and self.min_gamma_minus_res[r] >= 1.0 - 1e-12

    def all_ok(self) -> bool:
        return all(self.ok(r) for r in self.r_values)


def _gamma_of(s: np.ndarray, r: float) -> np.ndarray:
    x = 1.0 + s
    if r == 1.0:
        return x
    if r == 0.5:
        return np.sqrt(x)
    if r == 0.25:
        return np.sqrt(np.sqrt(x))
    return x**r


@njit(cache=True, fastmath=True)
def _scan_kernel_2d(mx, my, s_arr, gam, in_h, z1, z2, Lsq, r_codes):  # pragma: no cover - jit
    # gam has shape (nr, N); r_codes holds the dissipation exponents.
    n = mx.shape[0]
    nr = r_codes.shape[0]
    min_gap = np.full(nr, 1e300)
    min_gm = np.full(nr, 1e300)
    n_reps = 0
    for i in range(n):
        if not in_h[i]:
            continue
        m1x = mx[i]
        m1y = my[i]
        s1 = s_arr[i]
        for j in range(i, n):
            Mx = m1x + mx[j]
            My = m1y + my[j]
            sM = (z1 * Mx * Mx + z2 * My * My) / Lsq
            bx = 2.0 * z1 * Mx / Lsq
            by = 2.0 * z2 * My / Lsq
            c0 = s1 + s_arr[j] - sM
            n_reps += n
            for q in range(n):
                s2 = s_arr[q]
                dot = bx * mx[q] + by * my[q]
                sk = sM - dot + s2
                om = c0 + dot - 2.0 * s2
                x = 1.0 + sk
                u = np.sqrt(x)
                om2 = om * om
                on_res = -1.0 <= om <= 1.0
                for ri in range(nr):
                    rc = r_codes[ri]
                    if rc == 1.0:
                        gk = x
                    elif rc == 0.5:
                        gk = u
                    elif rc == 0.25:
                        gk = np.sqrt(u)
                    else:
                        gk = x**rc
                    gm = gam[ri, i] + gam[ri, j] + gam[ri, q] - gk
                    val = gm * gm + om2
                    if val < min_gap[ri]:
                        min_gap[ri] = val
                    if on_res and gm < min_gm[ri]:
                        min_gm[ri] = gm
    return min_gap, min_gm, n_reps


def _scan_fallback(nums, s_arr, gam, in_h, zeta, Lsq, r_values):
    """Pure-NumPy scan: python (i,j) loops, vectorized inner k2 loop."""
    n = nums.shape[0]
    nr = len(r_values)
    min_gap = np.full(nr, np.inf)
    min_gm = np.full(nr, np.inf)
    z = np.asarray(zeta)
    n_reps = 0
    for i in range(n):
        if not in_h[i]:
            continue
        for j in range(i, n):
            M = nums[i] + nums[j]
            sM = float((z * M.astype(np.float64) ** 2).sum()) / Lsq
            dot = 2.0 * (nums @ (z * M)) / Lsq
            sk = sM - dot + s_arr
            om = (s_arr[i] + s_arr[j] - sM) + dot - 2.0 * s_arr
            n_reps += n
            on_res = np.abs(om) <= 1.0
            for ri, r in enumerate(r_values):
                gk = _gamma_of(sk, r)
                gm = gam[i, ri] + gam[j, ri] + gam[:, ri] - gk
                val = gm**2 + om**2
                m = val.min()
                if m < min_gap[ri]:
                    min_gap[ri] = m
                if on_res.any():
                    mg = gm[on_res].min()
                    if mg < min_gm[ri]:
                        min_gm[ri] = mg
    return min_gap, min_gm, n_reps


def resonance_gap_scan(spec: TorusSpec, r, bound: float) -> ResonanceGapReport:
    """Exhaustively enumerate quadruples k = k1 - k2 + k3 with |k_j| <= bound.

    Returns the minimum of Gamma_-^2 + Omega^2 over all quadruples and the
    minimum of Gamma_- over quadruples with |Omega| <= 1.  Both minima are
    asserted >= 1 downstream (the dissipation/resonance separation claim).

    ``r`` may be one exponent or a sequence; all requested exponents are
    evaluated in a single pass.  Enumeration uses the symmetry group
    generated by (k1,k2,k3) -> (-k1,-k2,-k3) and k1 <-> k3, under which
    Gamma_- and Omega are invariant, so minima over representatives equal
    minima over the full set.
    """
    r_values = tuple(float(x) for x in (r if np.iterable(r) else [r]))
    for rv in r_values:
        _check_r(rv)

    M = int(np.floor(bound * spec.size_L + 1e-9))
    if M < 0:
        raise ValueError("empty lattice: bound below the mode spacing")
    axes = [np.arange(-M, M + 1)] * spec.dim
    grids = np.meshgrid(*axes, indexing="ij")
    nums = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    keep = ((nums.astype(np.float64) / spec.size_L) ** 2).sum(axis=1) <= bound**2 + 1e-12
    nums = nums[keep]
    if nums.shape[0] == 0:
        raise ValueError("empty lattice for the requested bound")

    z = np.asarray(spec.zeta)
    Lsq = spec.size_L**2
    s_arr = (z * (nums.astype(np.float64)) ** 2).sum(axis=1) / Lsq

    # Sort by a negation-invariant key, members of the half-space H first
    # within ties, so enumerating i <= j with mode[i] in H covers every
    # symmetry orbit (negation and k1 <-> k3 leave Gamma_- and Omega fixed).
    abs_nums = np.abs(nums)
    in_h = (nums[:, 0] > 0) | ((nums[:, 0] == 0) & (nums[:, -1] >= 0))
    if spec.dim == 3:
        in_h = (
            (nums[:, 0] > 0)
            | ((nums[:, 0] == 0) & (nums[:, 1] > 0))
            | ((nums[:, 0] == 0) & (nums[:, 1] == 0) & (nums[:, 2] >= 0))
        )
    # Pairwise-product signs are invariant under global negation in any dim
    # and separate the +-classes sharing one |component| pattern.
    sign_keys = [np.sign(nums[:, d] * nums[:, d + 1]) for d in range(spec.dim - 1)]
    order = np.lexsort(
        tuple([~in_h] + sign_keys + [abs_nums[:, d] for d in range(spec.dim - 1, -1, -1)])
    )
    nums = np.ascontiguousarray(nums[order])
    s_arr = np.ascontiguousarray(s_arr[order])
    in_h = np.ascontiguousarray(in_h[order])

    gam = np.stack([_gamma_of(s_arr, rv) for rv in r_values], axis=1)
    r_codes = np.asarray(r_values, dtype=np.float64)

    if HAVE_NUMBA and spec.dim == 2:
        min_gap, min_gm, n_reps = _scan_kernel_2d(
            np.ascontiguousarray(nums[:, 0].astype(np.float64)),
            np.ascontiguousarray(nums[:, 1].astype(np.float64)),
            s_arr,
            np.ascontiguousarray(gam.T),
            in_h,
            z[0],
            z[1],
            Lsq,
            r_codes,
        )
    else:
        min_gap, min_gm, n_reps = _scan_fallback(nums, s_arr, gam, in_h, spec.zeta, Lsq, r_values)

    report = ResonanceGapReport(bound=bound, r_values=r_values, n_representatives=int(n_reps))
    for ri, rv in enumerate(r_values):
        report.min_gap_sq[rv] = float(min_gap[ri])
        report.min_gamma_minus_res[rv] = float(min_gm[ri])
    return report
