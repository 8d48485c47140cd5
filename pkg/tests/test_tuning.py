"""Tuning-constant selection: efficiency factor grid search and the
exponential-squared pseudo-outlier / xi / det(V) procedure."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robustpanel.errors import NoValidTuning
from robustpanel.losses import LossSpec, psi, psi_prime, weight
from robustpanel.panel import PanelData, within_transform
from robustpanel.tuning import (
    HUBER_GRID,
    TUKEY_GRID,
    default_esl_grid,
    efficiency_factor,
    esl_cov,
    esl_select_c,
    pseudo_outlier_set,
    select_c_grid,
    xi,
)


def panel_with_residuals(resid):
    """Panel whose centered y equals `resid` exactly (rows must sum to 0);
    with beta_current = 0 the standardized residuals are resid / sigma."""
    resid = np.asarray(resid, dtype=float)
    n, t = resid.shape
    rng = np.random.default_rng(12345)
    x = rng.standard_normal((n, t, 1))
    return PanelData(resid + 5.0, x)


class TestEfficiencyFactor:
    def test_huber_hand_value(self):
        tau, defined = efficiency_factor([0.5, -0.5, 0.5, -0.5], LossSpec("huber", 1.0))
        assert defined
        assert tau == pytest.approx(4.0, abs=1e-14)

    def test_tukey_total_rejection_undefined(self):
        tau, defined = efficiency_factor([8.0, -9.0, 11.0], LossSpec("tukey", 2.0))
        assert tau == 0.0 and not defined

    def test_huber_closed_form_inside(self):
        rng = np.random.default_rng(1)
        e = 0.3 * rng.standard_normal(100)
        tau, defined = efficiency_factor(e, LossSpec("huber", 2.0))
        assert defined
        assert tau == pytest.approx(len(e) / np.sum(e**2), rel=1e-12)

    def test_huber_1345_near_normal_efficiency(self):
        rng = np.random.default_rng(2024)
        e = rng.standard_normal(10000)
        tau, defined = efficiency_factor(e, LossSpec("huber", 1.345))
        assert defined
        assert 0.85 <= tau <= 1.00

    @pytest.mark.parametrize("family,c", [("huber", 1.0), ("tukey", 4.0), ("esl", 2.0)])
    def test_invariant_to_psi_rescaling(self, family, c):
        rng = np.random.default_rng(5)
        e = rng.standard_normal(400)
        spec = LossSpec(family, c)
        tau, _ = efficiency_factor(e, spec)
        n = e.size
        for k in (1e-6, 0.5, 3.0, 1e6):
            scaled = (np.sum(k * psi_prime(spec, e))) ** 2 / (
                n * np.sum((k * psi(spec, e)) ** 2)
            )
            assert_allclose(scaled, tau, rtol=1e-12)


class TestSelectCGrid:
    def test_grids_match_stated_ranges(self):
        assert len(HUBER_GRID) == 60
        assert HUBER_GRID[0] == pytest.approx(0.05) and HUBER_GRID[-1] == pytest.approx(3.0)
        assert len(TUKEY_GRID) == 46
        assert TUKEY_GRID[0] == pytest.approx(1.0) and TUKEY_GRID[-1] == pytest.approx(10.0)

    def test_singleton_grid(self):
        resid = np.array([[1.0, -1.0], [0.5, -0.5]])
        curve = select_c_grid(panel_with_residuals(resid), "huber", np.zeros(1), 1.0, [1.7])
        assert curve.c_star == 1.7
        assert curve.tau_star == curve.tau_hat[0]

    def test_clean_normal_picks_large_huber_c(self):
        rng = np.random.default_rng(77)
        resid = rng.standard_normal((100, 10))
        resid -= resid.mean(axis=1, keepdims=True)
        p = panel_with_residuals(resid)
        curve = select_c_grid(p, "huber", np.zeros(1), 1.0, HUBER_GRID)
        assert curve.c_star >= 2.0
        assert curve.tau_star == curve.tau_hat.max()

    def test_planted_outliers_rejected_under_tukey(self):
        rng = np.random.default_rng(14)
        n, t = 50, 2
        v = np.abs(rng.standard_normal(n))
        v[:5] = 20.0  # 10% of cells end up at exactly +-20
        resid = np.stack([v, -v], axis=1)
        p = panel_with_residuals(resid)
        curve = select_c_grid(p, "tukey", np.zeros(1), 1.0, TUKEY_GRID)
        assert curve.c_star < 10.0
        spec = LossSpec("tukey", curve.c_star)
        assert np.all(weight(spec, np.array([20.0, -20.0])) == 0.0)

    def test_all_rejected_raises(self):
        resid = np.array([[50.0, -50.0], [60.0, -60.0]])
        p = panel_with_residuals(resid)
        with pytest.raises(NoValidTuning):
            select_c_grid(p, "tukey", np.zeros(1), 1.0, [1.0, 2.0])

    def test_tie_break_smallest_c(self):
        # all residuals inside every Huber c: tau = n / sum(e^2) for each,
        # a flat curve, so the smallest grid point must win
        resid = np.array([[0.01, -0.01], [0.02, -0.02]])
        p = panel_with_residuals(resid)
        curve = select_c_grid(p, "huber", np.zeros(1), 1.0, [1.0, 2.0, 3.0])
        assert curve.c_star == 1.0


class TestPseudoOutliers:
    def test_no_exceedance(self):
        out = pseudo_outlier_set(np.full((2, 2), 0.1), 1.0)
        assert out == frozenset()

    def test_single_exceedance(self):
        resid = np.array([[0.0, 0.0], [0.0, 10.0]])
        out = pseudo_outlier_set(resid, 1.0)
        assert out == frozenset({(1, 1)})

    def test_threshold_is_inclusive(self):
        resid = np.array([[2.5, 0.0], [0.0, -2.5]])
        out = pseudo_outlier_set(resid, 1.0)
        assert out == frozenset({(0, 0), (1, 1)})

    def test_normal_rate_near_tail_mass(self):
        from robustpanel.scale import mad_scale

        rng = np.random.default_rng(99)
        resid = rng.standard_normal((100, 100))
        sigma = mad_scale(resid).value
        m = len(pseudo_outlier_set(resid, sigma))
        assert 0.008 <= m / resid.size <= 0.018


class TestXi:
    def test_zero_loss_excluded_boundary(self):
        assert xi(1.0, np.zeros(4), 0, 4) == 0.0

    def test_half_outliers_boundary_included(self):
        assert xi(1.0, np.zeros(2), 2, 4) == 1.0

    def test_hand_value(self):
        val = xi(1.0, np.ones(4), 0, 4)
        assert val == pytest.approx(2.0 * (1.0 - np.exp(-1.0)), rel=1e-14)

    def test_monotone_in_m_and_floor(self):
        rng = np.random.default_rng(8)
        e = rng.standard_normal(20)
        nt = 50
        vals = [xi(2.0, e, m, nt) for m in range(0, 31)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert all(v >= 2.0 * m / nt for m, v in enumerate(vals))


def centered_from(y, x):
    return within_transform(PanelData(y, x))


class TestEslCov:
    def test_zero_residuals(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 3, 1))
        beta0 = np.array([1.5])
        xc = x - x.mean(axis=1, keepdims=True)
        y = (x @ beta0) + 7.0  # residuals at beta0 vanish after centering
        cp = centered_from(y, x)
        v, defined = esl_cov(cp, beta0, 2.0)
        assert defined
        assert_allclose(v, 0.0, atol=1e-15)
        # the information factor is literally (2/c) * (-1) * mean(xdd^2)
        from robustpanel.tuning import _esl_information

        info = _esl_information(cp, cp.y.ravel() - cp.x.reshape(-1, 1) @ beta0, 2.0)
        assert_allclose(info, -(2.0 / 2.0) * np.mean(xc**2) * np.ones((1, 1)), rtol=1e-12)

    def test_scalar_factor_root_flagged(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((3, 2, 1))
        a = 0.7
        resid = np.array([[a, -a], [a, -a], [a, -a]])
        y = resid + 3.0
        cp = centered_from(y, np.zeros_like(x) + x)
        # residuals at beta0 = 0 are +-a; at c = 2 a^2 the factor 2e^2/c - 1 = 0
        v, defined = esl_cov(cp, np.zeros(1), 2.0 * a * a)
        assert not defined

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(21)
        n, t, k = 12, 3, 2
        x = rng.standard_normal((n, t, k))
        y = x @ np.array([1.0, -2.0]) + rng.uniform(0, 5, (n, 1)) + rng.standard_normal((n, t))
        cp = centered_from(y, x)
        beta0 = np.array([0.8, -1.7])
        c = 1.9
        v, defined = esl_cov(cp, beta0, c)
        assert defined

        # independent element-by-element recomputation
        nt = n * t
        e = (cp.y - cp.x @ beta0).ravel()
        xdd = cp.x.reshape(nt, k)
        kappa = sum(np.exp(-e[i] ** 2 / c) * (2 * e[i] ** 2 / c - 1) for i in range(nt)) / nt
        meanxx = np.zeros((k, k))
        for i in range(nt):
            for p in range(k):
                for q in range(k):
                    meanxx[p, q] += xdd[i, p] * xdd[i, q] / nt
        info = (2.0 / c) * kappa * meanxx
        scores = np.array([np.exp(-e[i] ** 2 / c) * (2 * e[i] / c) * xdd[i] for i in range(nt)])
        sbar = scores.mean(axis=0)
        sigma_tilde = np.zeros((k, k))
        for i in range(nt):
            d = scores[i] - sbar
            sigma_tilde += np.outer(d, d) / nt
        inv = np.linalg.inv(info)
        assert_allclose(v, inv @ sigma_tilde @ inv, rtol=1e-10, atol=1e-12)


class TestEslSelectC:
    def test_degenerate_clean_limit(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((4, 2, 1))
        beta0 = np.array([2.0])
        y = x @ beta0 + 1.0
        cp = centered_from(y, x)
        with pytest.raises(NoValidTuning):
            esl_select_c(cp, beta0, np.geomspace(0.1, 10.0, 8))

    def test_singleton_feasibility(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((6, 2, 1))
        resid = np.tile([1.0, -1.0], (6, 1))
        cp = centered_from(resid + 4.0, x)
        # xi(c) = 2(1 - exp(-1/c)) <= 1 only for c >= 1/ln 2 ~ 1.4427
        state = esl_select_c(cp, np.zeros(1), np.array([0.2, 0.5, 1.5]))
        assert state.c_selected == 1.5
        assert state.m == 0
        assert np.sum((state.xi_values > 0) & (state.xi_values <= 1)) == 1

    def test_exhaustive_scan_oracle(self):
        from robustpanel.losses import rho as rho_fn
        from robustpanel.scale import mad_scale

        rng = np.random.default_rng(42)
        n, t, k = 30, 4, 2
        x = rng.standard_normal((n, t, k))
        beta = np.array([2.4, -1.2])
        y = x @ beta + rng.uniform(0, 12, (n, 1)) + rng.standard_normal((n, t))
        flat = rng.choice(n * t, 12, replace=False)
        y.ravel()[flat] = rng.uniform(20, 80, 12)
        cp = centered_from(y, x)
        beta0 = beta + 0.05
        e = (cp.y - cp.x @ beta0).ravel()
        grid = default_esl_grid(mad_scale(e).value)
        state = esl_select_c(cp, beta0, grid)

        # brute-force scan with independently coded xi and det(V)
        sigma_mad = mad_scale(e).value
        outlier = np.abs(e) >= 2.5 * sigma_mad
        m = int(outlier.sum())
        best_c, best_det = None, np.inf
        for c in grid:
            xi_c = 2.0 * m / e.size + (2.0 / e.size) * float(
                np.sum(rho_fn(LossSpec("esl", float(c)), e[~outlier]))
            )
            if not (0.0 < xi_c <= 1.0):
                continue
            v, defined = esl_cov(cp, beta0, float(c))
            if not defined:
                continue
            d = float(np.linalg.det(v))
            if d < best_det:
                best_det, best_c = d, float(c)
        assert best_c is not None
        assert state.c_selected == best_c
        assert state.m == m

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((8, 3, 2))
        y = x @ np.array([1.0, 1.0]) + rng.standard_normal((8, 3))
        cp = centered_from(y, x)
        grid = np.geomspace(0.05, 50.0, 25)
        s1 = esl_select_c(cp, np.ones(2), grid)
        s2 = esl_select_c(cp, np.ones(2), grid)
        assert s1.c_selected == s2.c_selected
        assert np.array_equal(s1.xi_values, s2.xi_values)
        assert np.array_equal(s1.detv_values, s2.detv_values, equal_nan=True)


def test_default_esl_grid_scales_with_sigma():
    g1 = default_esl_grid(1.0)
    g2 = default_esl_grid(3.0)
    assert len(g1) == 50
    assert g1[0] == pytest.approx(0.1) and g1[-1] == pytest.approx(100.0)
    assert_allclose(g2, 9.0 * g1, rtol=1e-12)
