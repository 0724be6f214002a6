import logging
import math

import numpy as np
import pytest

from dcsi_rzf.channel import SystemConfig
from dcsi_rzf.detequiv import (
    INTERFERENCE_FORMS,
    build_gamma_matrix,
    delta_closed_form,
    deterministic_equivalents,
    fixed_point_delta,
    fixed_point_residual,
    gamma0,
    gamma_pair,
    interference_det,
    interference_terms,
    signal_numerator,
    sinr_det,
)
from dcsi_rzf.errors import ConvergenceError, DomainError
from dcsi_rzf.precoder import monte_carlo_rate

ALPHAS = [1e-3, 1e-2, 0.1, 1.0, 10.0]
BETAS = [1.0, 1.5, 2.0, 4.0]


class TestFixedPoint:
    def test_known_roots(self):
        assert fixed_point_delta(0.1, 1.0) == pytest.approx((math.sqrt(41) - 1) / 2, abs=1e-12)
        assert fixed_point_delta(1.0, 1.0) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)

    def test_huge_alpha(self):
        assert fixed_point_delta(1e9, 1.0) < 1.1e-9

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("beta", BETAS)
    def test_grid(self, alpha, beta):
        d = fixed_point_delta(alpha, beta)
        assert fixed_point_residual(d, alpha, beta) < 1e-12
        assert abs(d - delta_closed_form(alpha, beta)) < 1e-10

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (-1.0, 1.0), (0.1, 0.5)])
    def test_domain(self, alpha, beta):
        with pytest.raises(DomainError):
            fixed_point_delta(alpha, beta)

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError):
            fixed_point_delta(1e-3, 1.0, max_iter=2)


class TestGamma:
    def test_hand_value(self):
        assert gamma0(1.0, 1.0) == pytest.approx(1 / 3, abs=1e-15)

    def test_golden(self):
        d = (math.sqrt(5) - 1) / 2
        assert gamma0(d, 1.0) == pytest.approx(0.1708204, abs=1e-7)

    def test_pair_reduces_to_gamma0(self):
        for d, b in [(0.3, 1.0), (2.7, 1.0), (1.0, 2.0)]:
            assert gamma_pair(d, b, 0.0, 0.0) == pytest.approx(gamma0(d, b), rel=1e-15)

    def test_pair_pure_noise(self):
        assert gamma_pair(1.0, 1.0, 1.0, 1.0) == 0.0

    def test_pair_hand_value(self):
        # 0.9 * (1/2)(1/2) / (1 - 0.81/4)
        s = math.sqrt(0.1)
        assert gamma_pair(1.0, 1.0, s, s) == pytest.approx(0.225 / 0.7975, abs=1e-7)
        assert gamma_pair(1.0, 1.0, s, s) == pytest.approx(0.2821317, abs=1e-7)

    def test_matrix(self):
        G = build_gamma_matrix(3, [0.1, 0.4, 0.2], 1.3, 1.5)
        assert np.array_equal(G, G.T)
        assert all(G[j, j] == gamma0(1.3, 1.5) for j in range(3))
        assert G[0, 1] == gamma_pair(1.3, 1.5, 0.1, 0.4)

    def test_bad_denominator(self):
        # beta < delta^2/(1+delta)^2 makes the normalization denominator negative
        with pytest.raises(DomainError):
            gamma0(10.0, 0.5)

    def test_matrix_length(self):
        with pytest.raises(DomainError):
            build_gamma_matrix(2, [0.1], 1.0, 1.0)


class TestInterference:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    @pytest.mark.parametrize("form", INTERFERENCE_FORMS)
    def test_perfect_csit(self, n, form):
        d, b = fixed_point_delta(0.1, 1.0), 1.0
        val = interference_det(d, b, [0.0] * n, form=form)
        assert val == pytest.approx(gamma0(d, b) / (1 + d) ** 2, rel=1e-12)

    def test_uniform_decomposition(self):
        d, b, s, n = 1.0, 1.0, math.sqrt(0.1), 3
        t = interference_terms(d, b, [s] * n)
        assert len(set(t.diagonal)) == 1 and len(set(t.cross.values())) == 1
        total = n * t.diagonal[0] + n * (n - 1) * next(iter(t.cross.values()))
        assert t.total == pytest.approx(total, rel=1e-14)

    def test_printed_leftover_nonzero(self):
        s = math.sqrt(0.1)
        t = interference_terms(2.0, 1.0, [s, s], form="printed")
        assert all(v != 0 for v in t.leftover)
        assert interference_terms(2.0, 1.0, [s, s]).leftover == (0.0, 0.0)

    @pytest.mark.parametrize("s2", [0.05, 0.3, 0.7])
    def test_single_tx_forms(self, s2):
        d, s = 1.7, math.sqrt(s2)
        red = interference_det(d, 1.0, [s])
        assert interference_det(d, 1.0, [s], form="cancelled") == pytest.approx(red, rel=1e-12)
        assert interference_det(d, 1.0, [s], form="printed") != pytest.approx(red, rel=1e-6)

    def test_printed_form_turns_negative(self):
        s = [math.sqrt(0.5)] * 3
        det = deterministic_equivalents(0.01, 1.0, 10.0, s, interference_form="printed")
        assert det.interference < 0
        assert deterministic_equivalents(0.01, 1.0, 10.0, s).interference > 0

    def test_n_mismatch(self):
        with pytest.raises(DomainError):
            interference_det(1.0, 1.0, [0.1, 0.1], n=3)

    def test_unknown_form(self):
        with pytest.raises(DomainError):
            interference_terms(1.0, 1.0, [0.1], form="other")

    def test_terms_are_logged(self, caplog):
        with caplog.at_level(logging.DEBUG, logger="dcsi_rzf.detequiv"):
            interference_det(1.0, 1.0, [0.1, 0.2])
        assert sum("I_k[" in r.message for r in caplog.records) == 4

    @pytest.mark.slow
    def test_centralized_against_monte_carlo(self):
        # alpha = 1/2 puts delta at 1 for beta = 1
        c = SystemConfig(n=1, M_TX=128, K=128, P=10.0, alpha=0.5, sigma=(math.sqrt(0.1),), trials=100)
        det = sinr_det(c)
        assert det.delta == pytest.approx(1.0, abs=1e-12)
        mc = monte_carlo_rate(c, workers=4)
        expected = det.interference * c.P / det.gamma0
        assert abs(mc.mean_interference - expected) / expected < 0.10


class TestSinr:
    def test_numerator_modes(self):
        s = math.sqrt(0.1)
        sq = signal_numerator(2.0, [s, s], "squared")
        lit = signal_numerator(2.0, [s, s], "literal")
        assert sq == pytest.approx(lit ** 2)
        with pytest.raises(DomainError):
            signal_numerator(2.0, [s], "other")

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_perfect_csit_closed_form(self, n):
        alpha, beta, P = 0.1, 1.0, 10.0
        det = deterministic_equivalents(alpha, beta, P, [0.0] * n)
        d, g = det.delta, det.gamma0
        expected = (d * d / (1 + d) ** 2) / (g / (1 + d) ** 2 + g / P)
        assert det.sinr == pytest.approx(expected, rel=1e-12)

    def test_perfect_csit_beats_noisy(self):
        a = deterministic_equivalents(0.1, 1.0, 10.0, [0.0]).sinr
        b = deterministic_equivalents(0.1, 1.0, 10.0, [math.sqrt(0.1)]).sinr
        assert a > b

    def test_interference_limited_ceiling(self):
        s = [math.sqrt(0.1)] * 3
        det = deterministic_equivalents(0.1, 1.0, 1e12, s)
        assert det.sinr == pytest.approx(det.numerator / det.interference, rel=1e-9)

    def test_continuity(self):
        s = [0.2, 0.3, 0.4]
        base = deterministic_equivalents(0.1, 1.0, 10.0, s).sinr
        for j in range(3):
            bumped = list(s)
            bumped[j] += 1e-6
            assert abs(deterministic_equivalents(0.1, 1.0, 10.0, bumped).sinr - base) < 1e-3

    def test_reference_point(self):
        det = deterministic_equivalents(0.1, 1.0, 10.0, [math.sqrt(0.1)] * 3)
        d = (math.sqrt(41) - 1) / 2
        g = d * d / (1 + d) * ((1 - d) + d * d / (1 + d)) / (1 - d * d / (1 + d) ** 2)
        assert det.gamma0 == pytest.approx(g, rel=1e-12)
        assert det.gamma0 == pytest.approx(1.1398245, abs=1e-7)
        assert det.rate == pytest.approx(math.log2(1 + det.sinr))
        d = det.as_dict()
        assert d["numerator_mode"] == "squared" and d["interference_form"] == "rederived"

    def test_sinr_det_matches_raw(self):
        c = SystemConfig(n=2, M_TX=20, K=20, P=5.0, alpha=0.3, sigma=(0.1, 0.5))
        a = sinr_det(c)
        b = deterministic_equivalents(0.3, 2.0, 5.0, (0.1, 0.5))
        assert a.sinr == b.sinr

    def test_bad_power(self):
        with pytest.raises(DomainError):
            deterministic_equivalents(0.1, 1.0, 0.0, [0.1])
