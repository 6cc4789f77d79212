"""Tests for the exact zeroth-iterate (OU) laws and samplers."""

import numpy as np
import pytest

from wavekin.zeroth import (
    OUParams,
    ou_rng,
    sample_w0_path,
    w0_second_moment,
    w0_two_time_cov,
)


class TestSecondMoment:
    def test_initial_value(self):
        p = OUParams(gamma_k=2.0, rate=0.7, c_k=1.5, b_k=0.3)
        assert w0_second_moment(p, 0.0) == pytest.approx(1.5**2)

    def test_stationary_limit(self):
        p = OUParams(gamma_k=2.0, rate=1.0, c_k=1.5, b_k=0.3)
        assert w0_second_moment(p, 50.0) == pytest.approx(0.3**2 / 2.0)

    def test_log2_value(self):
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=1.0, b_k=1.0)
        assert w0_second_moment(p, np.log(2.0) / 2.0) == pytest.approx(1.0)
        # c=b=gamma=rho=1, t=ln2: 1/4 + 3/4 = 1 at decay e^{-2t}=1/4
        assert w0_second_moment(p, 0.5 * np.log(4.0)) == pytest.approx(1.0)


class TestTwoTimeCov:
    def test_equal_times_consistency(self):
        p = OUParams(gamma_k=3.0, rate=0.4, c_k=0.8, b_k=1.1)
        for t in (0.0, 0.3, 2.0):
            assert w0_two_time_cov(p, t, t) == pytest.approx(w0_second_moment(p, t))

    def test_zero_data_zero_time(self):
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=0.0, b_k=1.0)
        assert w0_two_time_cov(p, 2.0, 0.0) == 0.0

    def test_arithmetic_point(self):
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=0.0, b_k=1.0)
        assert w0_two_time_cov(p, 2.0, 1.0) == pytest.approx(np.exp(-1.0) - np.exp(-3.0))

    def test_positive_semidefinite(self):
        p = OUParams(gamma_k=1.7, rate=0.9, c_k=0.6, b_k=0.8)
        ts = np.linspace(0.0, 1.0, 12)
        gram = np.array([[w0_two_time_cov(p, a, b) for b in ts] for a in ts])
        assert np.linalg.eigvalsh(gram).min() >= -1e-10


class TestSampler:
    def test_pure_decay_pathwise(self):
        p = OUParams(gamma_k=2.0, rate=0.5, c_k=1.0, b_k=0.0)
        times = np.array([0.1, 0.4, 1.0])
        path = sample_w0_path(p, times, ou_rng(3))
        ratio = np.abs(path) / np.abs(path[0])
        expected = np.exp(-p.rate * p.gamma_k * (times - times[0]))
        assert np.allclose(ratio, expected, rtol=1e-12)

    def test_zero_data_starts_at_zero(self):
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=0.0, b_k=1.0)
        path = sample_w0_path(p, np.array([0.0, 0.5]), ou_rng(4))
        assert path[0] == 0.0
        assert path[1] != 0.0

    def test_marginal_matches_formula(self):
        """1e4 samples at (rate*gamma=1, b=1, t=1): |w|^2 within 5 SE of 1-e^{-2}."""
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=0.0, b_k=1.0)
        n = 10_000
        rng = ou_rng(7)
        vals = np.empty(n)
        for i in range(n):
            vals[i] = np.abs(sample_w0_path(p, np.array([1.0]), rng)[0]) ** 2
        mean = vals.mean()
        se = vals.std(ddof=1) / np.sqrt(n)
        assert abs(mean - (1.0 - np.exp(-2.0))) < 5 * se

    def test_joint_law_two_times(self):
        """Sampled two-time covariance matches the closed form within 5 SE."""
        p = OUParams(gamma_k=1.5, rate=0.8, c_k=0.9, b_k=0.7)
        t1, t2 = 0.3, 0.9
        n = 10_000
        rng = ou_rng(11)
        prods = np.empty(n, dtype=complex)
        for i in range(n):
            path = sample_w0_path(p, np.array([t1, t2]), rng)
            prods[i] = path[0] * np.conj(path[1])
        target = w0_two_time_cov(p, t1, t2)
        se = prods.real.std(ddof=1) / np.sqrt(n)
        assert abs(prods.real.mean() - target) < 5 * se

    def test_no_conjugate_pairing_vanishes(self):
        """E[w(t1) w(t2)] (no conjugation) is zero within MC error."""
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=1.0, b_k=1.0)
        n = 10_000
        rng = ou_rng(13)
        prods = np.empty(n, dtype=complex)
        for i in range(n):
            path = sample_w0_path(p, np.array([0.4, 0.8]), rng)
            prods[i] = path[0] * path[1]
        se = max(prods.real.std(ddof=1), prods.imag.std(ddof=1)) / np.sqrt(n)
        assert abs(prods.mean()) < 5 * se

    def test_unsorted_times_rejected(self):
        p = OUParams(gamma_k=1.0, rate=1.0, c_k=1.0, b_k=1.0)
        with pytest.raises(ValueError):
            sample_w0_path(p, np.array([0.5, 0.1]), ou_rng(0))

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            OUParams(gamma_k=0.5, rate=1.0, c_k=1.0, b_k=1.0)
