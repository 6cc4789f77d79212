"""Tests for torus geometry, dispersion and resonance quantities."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavekin.lattice import (
    TorusSpec,
    Wavevector,
    dispersion,
    epsilon_factor,
    gamma,
    gamma_pm,
    omega,
    resonance_gap_scan,
    zeta_dot,
)


def wv(*nums, L=1.0):
    return Wavevector(tuple(nums), L)


SPEC11 = TorusSpec(dim=2, size_L=1.0, zeta=(1.0, 1.0), cutoff=8.0)
SPEC12 = TorusSpec(dim=2, size_L=1.0, zeta=(1.0, 2.0), cutoff=8.0)


class TestDispersion:
    def test_zero_vector(self):
        assert dispersion(wv(0, 0), SPEC11) == 0.0

    def test_unit_mode(self):
        assert dispersion(wv(1, 0), SPEC11) == 1.0

    def test_anisotropic(self):
        assert dispersion(wv(1, 1), SPEC12) == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dispersion(Wavevector((1,), 1.0), SPEC11)


class TestGamma:
    def test_zero(self):
        assert gamma(wv(0, 0), SPEC11, 1.0) == 1.0

    def test_unit(self):
        assert gamma(wv(1, 0), SPEC11, 1.0) == 2.0

    def test_half_power(self):
        assert gamma(wv(1, 1), SPEC12, 0.5) == pytest.approx(2.0)

    def test_r_out_of_range(self):
        with pytest.raises(ValueError):
            gamma(wv(0, 0), SPEC11, 1.5)
        with pytest.raises(ValueError):
            gamma(wv(0, 0), SPEC11, 0.0)

    def test_always_at_least_one(self):
        spec = TorusSpec(dim=2, size_L=2.0, zeta=(1.3, 1.7), cutoff=3.0)
        for r in (0.25, 0.5, 1.0):
            assert (spec.gammas(r) >= 1.0).all()


class TestOmega:
    def test_trivial_combo(self):
        assert omega(wv(1, 0), wv(1, 1), wv(0, 1), wv(0, 0), SPEC11) == 0.0

    def test_negative(self):
        assert omega(wv(1, 0), wv(2, 0), wv(1, 0), wv(0, 0), SPEC11) == -2.0

    def test_pairwise_cancellation(self):
        k = wv(3, -2)
        k2 = wv(1, 5)
        assert omega(k, k2, k2, k, SPEC11) == 0.0

    def test_momentum_enforced(self):
        with pytest.raises(ValueError):
            omega(wv(1, 0), wv(0, 0), wv(0, 0), wv(0, 0), SPEC11)

    @given(
        st.lists(st.integers(-6, 6), min_size=6, max_size=6),
        st.sampled_from([(1.0, 1.0), (1.0, 2.0), (1.5, 1.2)]),
        st.sampled_from([1.0, 2.0, 4.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_algebraic_identity(self, nums, zeta, L):
        """Omega == -2 (k1-k).zeta (k3-k) for every lattice quadruple."""
        spec = TorusSpec(dim=2, size_L=L, zeta=zeta, cutoff=30.0)
        k1 = Wavevector((nums[0], nums[1]), L)
        k2 = Wavevector((nums[2], nums[3]), L)
        k3 = Wavevector((nums[4], nums[5]), L)
        k = k1 - k2 + k3
        om = omega(k1, k2, k3, k, spec)
        expected = -2.0 * zeta_dot(k1 - k, k3 - k, spec)
        assert om == pytest.approx(expected, abs=1e-12)


class TestGammaPm:
    def test_mixed_modes(self):
        gp, gm = gamma_pm(wv(1, 0), wv(1, 1), wv(0, 1), wv(0, 0), SPEC11, 1.0)
        assert (gp, gm) == (8.0, 6.0)

    def test_all_zero(self):
        gp, gm = gamma_pm(wv(0, 0), wv(0, 0), wv(0, 0), wv(0, 0), SPEC11, 1.0)
        assert (gp, gm) == (4.0, 2.0)

    def test_equal_modes(self):
        k = wv(1, 0)
        gp, gm = gamma_pm(k, k, k, k, SPEC11, 1.0)
        assert (gp, gm) == (8.0, 4.0)

    def test_plus_minus_relation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(-4, 5, size=8)
            k1, k2, k3 = wv(n[0], n[1]), wv(n[2], n[3]), wv(n[4], n[5])
            k = k1 - k2 + k3
            gp, gm = gamma_pm(k1, k2, k3, k, SPEC12, 0.5)
            assert gp == pytest.approx(gm + 2.0 * gamma(k, SPEC12, 0.5))


class TestEpsilon:
    def test_plus_one(self):
        assert epsilon_factor(wv(1, 0), wv(0, 0), wv(0, 1)) == 1

    def test_minus_one(self):
        k = wv(1, 0)
        assert epsilon_factor(k, k, k) == -1

    def test_zero(self):
        assert epsilon_factor(wv(1, 0), wv(1, 0), wv(0, 1)) == 0


class TestLattice:
    def test_symmetry_under_negation(self):
        spec = TorusSpec(dim=2, size_L=2.0, zeta=(1.0, 1.5), cutoff=3.0)
        mode_set = {tuple(m) for m in spec.mode_nums}
        assert all(tuple(-np.asarray(m)) in mode_set for m in mode_set)

    def test_boundary_included(self):
        spec = TorusSpec(dim=2, size_L=1.0, zeta=(1.0, 1.0), cutoff=2.0)
        assert (2, 0) in {tuple(m) for m in spec.mode_nums}

    def test_zeta_validation(self):
        with pytest.raises(ValueError):
            TorusSpec(dim=2, size_L=1.0, zeta=(0.5, 1.0), cutoff=2.0)

    def test_dim_one_supported(self):
        spec = TorusSpec(dim=1, size_L=2.0, zeta=(1.0,), cutoff=1.0)
        assert spec.n_modes() == 5


def _brute_force_scan(spec, r, bound):
    """Independent oracle: plain triple loop, no symmetry reduction."""
    M = int(np.floor(bound * spec.size_L + 1e-9))
    modes = [
        m
        for m in itertools.product(range(-M, M + 1), repeat=spec.dim)
        if sum((x / spec.size_L) ** 2 for x in m) <= bound**2 + 1e-12
    ]
    z = spec.zeta
    L = spec.size_L

    def s(m):
        return sum(zz * (x / L) ** 2 for zz, x in zip(z, m))

    def g(m):
        return (1.0 + s(m)) ** r

    min_gap = np.inf
    min_gm = np.inf
    for m1 in modes:
        for m2 in modes:
            for m3 in modes:
                mk = tuple(a - b + c for a, b, c in zip(m1, m2, m3))
                om = s(m1) - s(m2) + s(m3) - s(mk)
                gm = g(m1) + g(m2) + g(m3) - g(mk)
                min_gap = min(min_gap, gm**2 + om**2)
                if abs(om) <= 1.0:
                    min_gm = min(min_gm, gm)
    return min_gap, min_gm


class TestResonanceGapScan:
    @pytest.mark.parametrize("r", [0.5, 1.0])
    @pytest.mark.parametrize("zeta", [(1.0, 1.0), (1.0, 2.0)])
    def test_matches_brute_force(self, r, zeta):
        spec = TorusSpec(dim=2, size_L=1.0, zeta=zeta, cutoff=8.0)
        report = resonance_gap_scan(spec, r, bound=2.0)
        gap_ref, gm_ref = _brute_force_scan(spec, r, 2.0)
        assert report.min_gap_sq[r] == pytest.approx(gap_ref, rel=1e-12)
        assert report.min_gamma_minus_res[r] == pytest.approx(gm_ref, rel=1e-12)

    def test_small_cases_pass_claim(self):
        spec = TorusSpec(dim=2, size_L=2.0, zeta=(1.0, 1.0), cutoff=8.0)
        report = resonance_gap_scan(spec, [0.5, 1.0], bound=2.0)
        assert report.all_ok()

    def test_fractional_L(self):
        spec = TorusSpec(dim=2, size_L=1.0, zeta=(1.0, 1.0), cutoff=8.0)
        report = resonance_gap_scan(spec, 0.5, bound=2.0)
        assert report.min_gamma_minus_res[0.5] >= 1.0

    def test_trivial_quadruple_bound(self):
        # k1=k2=k3=k=0 gives Gamma_- = 2, so the on-resonance min is <= 2.
        spec = TorusSpec(dim=2, size_L=1.0, zeta=(1.0, 1.0), cutoff=2.0)
        report = resonance_gap_scan(spec, 1.0, bound=1.0)
        assert 1.0 <= report.min_gamma_minus_res[1.0] <= 2.0

    def test_dim_one_fallback_path(self):
        spec = TorusSpec(dim=1, size_L=1.0, zeta=(1.0,), cutoff=3.0)
        report = resonance_gap_scan(spec, 1.0, bound=3.0)
        assert report.all_ok()
