"""Tests for scaling-law bookkeeping, regime classification and windows."""

import pytest

from wavekin.scaling import (
    Regime,
    ScalingLaw,
    classify_regime,
    rho_combinatorial,
    validate_window,
)


class TestDerived:
    def test_exact_relations(self):
        law = ScalingLaw(L=100.0, kappa1=1.0, kappa2=2.0)
        assert law.T_kin == pytest.approx(law.lam**-2)
        assert law.T_for == pytest.approx(1.0 / law.nu)
        assert law.varrho == pytest.approx(law.nu * law.T_kin)

    def test_vartheta_le_varrho_for_T_le_Tkin(self):
        law = ScalingLaw(L=50.0, kappa1=0.8, kappa2=1.2, T=50.0**1.2)
        assert law.T <= law.T_kin
        assert law.vartheta <= law.varrho

    def test_default_horizon_is_Tkin(self):
        law = ScalingLaw(L=10.0, kappa1=0.7, kappa2=1.4)
        assert law.T == pytest.approx(law.T_kin)
        assert law.vartheta == pytest.approx(law.varrho)

    def test_split_strengths_default_consistency(self):
        law = ScalingLaw(L=16.0, kappa1=0.5, kappa2=1.0)
        assert law.varrho_injection == pytest.approx(law.varrho)


class TestRegime:
    def test_balanced(self):
        assert classify_regime(ScalingLaw(L=10, kappa1=1.0, kappa2=2.0)) == Regime.BALANCED

    def test_nonlinearity_dominated(self):
        law = ScalingLaw(L=10, kappa1=1.0, kappa2=3.0)
        assert classify_regime(law) == Regime.NONLINEARITY_DOMINATED

    def test_forcing_dominated(self):
        # T_kin >> T_for, i.e. 2*kappa1 - kappa2 > 0
        law = ScalingLaw(L=10, kappa1=1.0, kappa2=1.0)
        assert classify_regime(law) == Regime.FORCING_DOMINATED

    @pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
    def test_invariant_under_rescaling(self, c):
        for k1, k2 in [(1.0, 2.0), (1.0, 3.0), (1.0, 1.0)]:
            a = classify_regime(ScalingLaw(L=10, kappa1=k1, kappa2=k2))
            b = classify_regime(ScalingLaw(L=10, kappa1=c * k1, kappa2=c * k2))
            assert a == b


class TestRho:
    def test_small_T(self):
        assert rho_combinatorial(10.0, 100.0) == 10.0

    def test_middle_T(self):
        assert rho_combinatorial(1000.0, 100.0) == 100.0

    def test_large_T_generic(self):
        assert rho_combinatorial(1e6, 100.0, generic_zeta=True) == 1e4

    def test_large_T_nongeneric_errors(self):
        with pytest.raises(ValueError):
            rho_combinatorial(1e6, 100.0, generic_zeta=False)

    def test_T_below_one_errors(self):
        with pytest.raises(ValueError):
            rho_combinatorial(0.5, 100.0)


class TestWindow:
    def test_valid_generic_middle_case(self):
        L = 100.0
        law = ScalingLaw(L=L, kappa1=1.15, kappa2=2.0, T=L**1.5)
        diag = validate_window(law, delta=0.1, generic_zeta=True)
        assert diag.ok, diag.violations

    def test_T_too_large(self):
        L = 100.0
        law = ScalingLaw(L=L, kappa1=1.4, kappa2=2.0, T=L**2.5)
        diag = validate_window(law, delta=0.1, generic_zeta=False)
        assert not diag.ok
        assert any("upper bound" in v for v in diag.violations)

    def test_T_too_small(self):
        L = 100.0
        law = ScalingLaw(L=L, kappa1=1.2, kappa2=2.0, T=1.0)
        diag = validate_window(law, delta=0.1)
        assert not diag.ok
        assert any("below lower bound" in v for v in diag.violations)

    def test_Tkin_violation_named(self):
        L = 100.0
        law = ScalingLaw(L=L, kappa1=0.9, kappa2=2.0, T=L**1.5)  # T_kin = L^1.8 < L^2.2
        diag = validate_window(law, delta=0.1)
        assert not diag.ok
        assert any("T_kin" in v for v in diag.violations)

    def test_rho_bound_when_window_passes(self):
        """rho <= L^{-delta} sqrt(T_kin) with constant 1 at passing points."""
        delta = 0.1
        for L, k1, T_exp in [(50.0, 1.2, 1.5), (100.0, 1.3, 0.8), (100.0, 2.3, 2.2)]:
            law = ScalingLaw(L=L, kappa1=k1, kappa2=2.0, T=L**T_exp)
            diag = validate_window(law, delta=delta, generic_zeta=True, dim=3)
            if diag.ok:
                rho = rho_combinatorial(law.T, L, generic_zeta=True)
                assert rho <= L ** (-delta) * law.T_kin**0.5 * (1 + 1e-12)

    def test_serialization_roundtrip(self):
        from wavekin.scaling import as_header_dict

        law = ScalingLaw(L=32.0, kappa1=0.8, kappa2=1.6, T=100.0)
        d = as_header_dict(law)
        assert d["regime"] == "balanced"
        assert d["T_kin"] == pytest.approx(32.0**1.6)
