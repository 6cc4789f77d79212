"""Initial-data and forcing spectral envelopes c(k), b(k) and derived aggregates.

Profiles are real, nonnegative and (for the gaussian/bump families) smooth and
rapidly decaying, standing in for Schwartz-class envelopes.  Tabulated profiles
support spectra pinned to specific lattice modes, including ones vanishing
linearly at k = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wavekin.lattice import TorusSpec, Wavevector


@dataclass(frozen=True)
class SpectralProfile:
    """Pointwise-evaluable spectral envelope.

    family 'gaussian': amplitude * exp(-|k-center|^2 / width^2)
    family 'bump':     amplitude * exp(1 - 1/(1-rho^2)) on rho=|k-center|/width < 1, else 0
    family 'table':    explicit map from lattice numerators to values
    """

    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] = (0.0, 0.0)
    table: dict = field(default_factory=dict)
    table_L: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "bump", "table"):
            raise ValueError(f"unknown profile family {self.family!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.width <= 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.family == "table":
            clean = {}
            for key, val in self.table.items():
                if val < 0:
                    raise ValueError("table values must be nonnegative")
                clean[tuple(int(n) for n in key)] = float(val)
            object.__setattr__(self, "table", clean)

    def __call__(self, k) -> np.ndarray | float:
        return evaluate(self, k)

    @classmethod
    def zero(cls, dim: int = 2) -> "SpectralProfile":
        return cls(family="gaussian", amplitude=0.0, width=1.0, center=(0.0,) * dim)


def evaluate(profile: SpectralProfile, k) -> np.ndarray | float:
    """Pointwise evaluation at k (a tuple, a Wavevector, or an (..., d) array)."""
    if isinstance(k, Wavevector):
        if profile.family == "table":
            key = tuple(k.nums)
            if k.L != profile.table_L or key not in profile.table:
                raise KeyError(f"wavevector {key} (L={k.L}) not in profile table")
            return profile.table[key]
        k = np.asarray(k.components, dtype=np.float64)
    else:
        k = np.asarray(k, dtype=np.float64)

    if profile.family == "table":
        raise KeyError("table profiles are only defined on their own lattice points")

    center = np.asarray(profile.center)
    if k.shape[-1] != center.shape[0]:
        raise ValueError(f"dimension mismatch: k has {k.shape[-1]}, profile has {center.shape[0]}")
    rho2 = ((k - center) ** 2).sum(axis=-1)
    if profile.family == "gaussian":
        out = profile.amplitude * np.exp(-rho2 / profile.width**2)
    else:
        rho2 = rho2 / profile.width**2
        out = np.zeros_like(rho2)
        inside = rho2 < 1.0
        out = np.where(
            inside,
            profile.amplitude * np.exp(1.0 - 1.0 / np.where(inside, 1.0 - rho2, 1.0)),
            0.0,
        )
    return out if out.ndim else float(out)


def eval_on_lattice(profile: SpectralProfile, spec: TorusSpec) -> np.ndarray:
    """Profile values on every retained lattice mode, aligned with spec.mode_nums."""
    if profile.family == "table":
        vals = np.zeros(spec.n_modes())
        if profile.table_L != spec.size_L:
            raise KeyError("table profile lattice does not match the torus")
        for key, val in profile.table.items():
            try:
                vals[spec.index_of(Wavevector(key, spec.size_L))] = val
            except KeyError:
                raise KeyError(f"table entry {key} lies outside the truncated lattice")
        return vals
    return np.asarray(evaluate(profile, spec.mode_nums.astype(np.float64) / spec.size_L))


def total_forcing_B(b: SpectralProfile, spec: TorusSpec) -> float:
    """B = sum over the lattice of b(k)^2.

    For smooth profiles L^{-d} B converges to the continuum integral of b^2
    as L grows (Riemann-sum error O(1/L)).
    """
    vals = eval_on_lattice(b, spec)
    return float((vals**2).sum())
