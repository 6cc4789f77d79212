"""Scaling-law bookkeeping.

Maps (L, kappa1, kappa2) to all derived thermodynamic parameters, classifies
the asymptotic regime and validates the subcriticality windows under which
the kinetic approximation theorems apply.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Regime(enum.Enum):
    BALANCED = "balanced"                       # 2*kappa1 - kappa2 = 0
    NONLINEARITY_DOMINATED = "nonlinearity"     # 2*kappa1 - kappa2 < 0
    FORCING_DOMINATED = "forcing"               # 2*kappa1 - kappa2 > 0


@dataclass(frozen=True)
class ScalingLaw:
    """(L, kappa1, kappa2) plus derived quantities.

    lambda = L^{-kappa1}, nu = nu0 * L^{-kappa2}, T_kin = lambda^{-2},
    T_for = nu^{-1}, varrho = nu * T_kin, vartheta = nu * T.

    The optional (nu1_prefactor, nu2_prefactor) pair generalizes to separate
    dissipation and forcing strengths nu1 = nu1_pre * L^{-kappa2},
    nu2 = nu2_pre * L^{-kappa2/2} (the kappa2 = 2*kappa3 case); then
    varrho-type bookkeeping uses nu2^2/nu1 in place of a common nu.
    """

    L: float
    kappa1: float
    kappa2: float
    T: float | None = None
    nu0: float = 1.0
    lam0: float = 1.0
    nu1_prefactor: float | None = None
    nu2_prefactor: float | None = None

    def __post_init__(self):
        if self.L <= 1:
            raise ValueError("L must exceed 1")
        if self.kappa1 <= 0 or self.kappa2 <= 0:
            raise ValueError("kappa1, kappa2 must be positive")
        if self.T is None:
            if self.lam == 0.0:
                raise ValueError("linear laws (lam0=0) need an explicit horizon T")
            object.__setattr__(self, "T", self.T_kin)
        if self.T <= 0:
            raise ValueError("horizon T must be positive")

    @property
    def lam(self) -> float:
        """Nonlinearity strength lam0 * L^{-kappa1}; lam0 = 0 gives linear runs."""
        return self.lam0 * self.L ** (-self.kappa1)

    @property
    def nu(self) -> float:
        return self.nu0 * self.L ** (-self.kappa2)

    @property
    def nu1(self) -> float:
        """Dissipation strength (equals nu unless overridden)."""
        if self.nu1_prefactor is None:
            return self.nu
        return self.nu1_prefactor * self.L ** (-self.kappa2)

    @property
    def nu2(self) -> float:
        """Forcing strength; the model forces with nu2 * dbeta = sqrt(nu) by default."""
        if self.nu2_prefactor is None:
            return self.nu**0.5
        return self.nu2_prefactor * self.L ** (-self.kappa2 / 2.0)

    @property
    def T_kin(self) -> float:
        return float("inf") if self.lam == 0.0 else self.lam**-2

    @property
    def T_for(self) -> float:
        return 1.0 / self.nu

    @property
    def varrho(self) -> float:
        """Dissipation-side T_kin/T_for ratio: nu1 * T_kin (= nu * T_kin by default)."""
        return self.nu1 * self.T_kin

    @property
    def varrho_injection(self) -> float:
        """Injection-side ratio nu2^2 * T_kin; equals varrho unless strengths are split."""
        return self.nu2**2 * self.T_kin

    @property
    def vartheta(self) -> float:
        return self.nu * self.T

    @property
    def lambda_T(self) -> float:
        """Nonlinearity strength in the rescaled mode system."""
        return self.lam * self.T


def classify_regime(law: ScalingLaw) -> Regime:
    """Regime trichotomy by the sign of 2*kappa1 - kappa2.

    Balanced when T_kin ~ T_for; nonlinearity-dominated when T_kin << T_for
    (forcing too weak to matter); forcing-dominated when T_kin >> T_for.
    """
    gap = 2.0 * law.kappa1 - law.kappa2
    if gap == 0.0:
        return Regime.BALANCED
    if gap < 0.0:
        return Regime.NONLINEARITY_DOMINATED
    return Regime.FORCING_DOMINATED


def rho_combinatorial(T: float, L: float, generic_zeta: bool = False) -> float:
    """Counting weight rho: T on [1,L], L on [L,L^2], T/L beyond (generic zeta only)."""
    if T < 1:
        raise ValueError("rho is defined for T >= 1")
    if T <= L:
        return float(T)
    if T <= L**2:
        return float(L)
    if not generic_zeta:
        raise ValueError("rho for T > L^2 is defined only for generic aspect ratios")
    return float(T / L)


@dataclass
class WindowDiagnostics:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_window(
    law: ScalingLaw,
    delta: float,
    generic_zeta: bool = False,
    dim: int = 2,
) -> WindowDiagnostics:
    """Check the subcriticality window on (T, T_kin).

    Requires L^delta <= T <= L^{2-delta} (or L^{d-delta} for generic zeta)
    together with the three-case lower bound on T_kin:
    L^{2 delta} T^2 for T <= L; L^{2+2 delta} for L <= T <= L^2;
    L^{-2+2 delta} T^2 for T >= L^2.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    L, T, T_kin = law.L, law.T, law.T_kin
    violations = []
    if T < L**delta:
        violations.append(f"T={T:.6g} below lower bound L^delta={L**delta:.6g}")
    upper_exp = (dim if generic_zeta else 2) - delta
    if T > L**upper_exp:
        kind = "d-delta (generic)" if generic_zeta else "2-delta"
        violations.append(f"T={T:.6g} above upper bound L^({kind})={L**upper_exp:.6g}")
    if T <= L:
        bound = L ** (2 * delta) * T**2
        case = "T <= L: T_kin >= L^{2 delta} T^2"
    elif T <= L**2:
        bound = L ** (2 + 2 * delta)
        case = "L <= T <= L^2: T_kin >= L^{2+2 delta}"
    else:
        bound = L ** (-2 + 2 * delta) * T**2
        case = "T >= L^2: T_kin >= L^{-2+2 delta} T^2"
    if T_kin < bound:
        violations.append(f"T_kin={T_kin:.6g} violates {case} (bound {bound:.6g})")
    return WindowDiagnostics(ok=not violations, violations=violations)


def as_header_dict(law: ScalingLaw) -> dict:
    """Serialized form embedded in result-file headers for provenance."""
    return {
        "L": law.L,
        "kappa1": law.kappa1,
        "kappa2": law.kappa2,
        "T": law.T,
        "nu0": law.nu0,
        "lambda": law.lam,
        "nu": law.nu,
        "T_kin": law.T_kin,
        "T_for": law.T_for,
        "varrho": law.varrho,
        "vartheta": law.vartheta,
        "regime": classify_regime(law).value,
    }
