"""Residual series, CATT, trend fits, and placebo runs."""

import numpy as np
import pytest

from proxsc import (
    ConfigError,
    DataError,
    SimDesign,
    estimate_catt,
    fit_pi_joint,
    fit_pi_two_stage,
    fit_trend,
    generate,
    moving_average,
    placebo_run,
    residual_series,
)

from conftest import make_panel


def test_noiseless_residuals():
    d = make_panel(T=20, t0=10, noise=0.0, tau=2.0)
    e = residual_series(d, alpha=np.array([1.0]))
    np.testing.assert_allclose(e[d.pre_mask], 0.0, atol=1e-12)
    np.testing.assert_allclose(e[d.post_mask], 2.0, atol=1e-12)


def test_post_mean_residual_near_two():
    d, _ = generate(SimDesign(r=1, t0=200, t1=200, seed=3))
    res = fit_pi_joint(d)
    assert abs(res.report.tau_scalar - 2.0) < 3 * float(res.report.se_hc[0])


def test_catt_constant_series():
    rep = estimate_catt(np.array([2.0, 2.0, 2.0]))
    assert rep.tau_scalar == pytest.approx(2.0)


def test_catt_degenerate_weights():
    rep = estimate_catt(np.array([3.0, 5.0, 7.0]), v=np.array([1.0, 0.0, 0.0]))
    assert rep.tau_scalar == pytest.approx(3.0)


def test_catt_rejects_all_zero_weights():
    with pytest.raises(ConfigError):
        estimate_catt(np.array([1.0, 2.0]), v=np.zeros(2))


def test_catt_rejects_empty_series():
    with pytest.raises(DataError):
        estimate_catt(np.array([]))


def test_trend_exact_recovery():
    s = np.arange(1, 21) / 20
    e = 1.0 + s
    rep = fit_trend(e, "linear_trend", s)
    np.testing.assert_allclose(rep.tau_hat, [1.0, 1.0], atol=1e-12)


def test_constant_trend_equals_catt():
    rng = np.random.default_rng(5)
    e = rng.standard_normal(15)
    s = np.arange(1, 16) / 15
    rep_t = fit_trend(e, "constant", s)
    rep_c = estimate_catt(e)
    np.testing.assert_allclose(rep_t.tau_hat, rep_c.tau_hat, atol=1e-12)
    np.testing.assert_allclose(rep_t.se_hc, rep_c.se_hc, atol=1e-12)


def test_two_stage_equals_joint():
    """Block-diagonal identity weighting makes the two paths identical."""
    d, _ = generate(SimDesign(r=2, t0=60, t1=40, seed=7))
    res_joint = fit_pi_joint(d)
    res_two = fit_pi_two_stage(d)
    assert abs(res_joint.report.tau_scalar - res_two.report.tau_scalar) < 1e-9


def test_placebo_requires_earlier_split():
    d = make_panel(T=30, t0=20, noise=0.1)
    with pytest.raises(ConfigError):
        placebo_run(d, pseudo_t0=20)


def test_placebo_too_few_rows():
    d = make_panel(T=30, t0=20, noise=0.1)
    with pytest.raises(DataError):
        placebo_run(d, pseudo_t0=1)


def test_placebo_null_centered():
    d, _ = generate(SimDesign(r=1, t0=200, t1=100, seed=11))
    rep = placebo_run(d, pseudo_t0=100)
    lo, hi = rep.ci_hc[0]
    assert lo < 0.0 < hi


def test_placebo_uses_only_pre_rows():
    d, _ = generate(SimDesign(r=1, t0=100, t1=50, seed=13))
    rep = placebo_run(d, pseudo_t0=60)
    assert rep.e_full.shape == (100,)


def test_moving_average_descriptive():
    e = np.arange(10, dtype=float)
    sm = moving_average(e, window=5)
    assert sm.shape == e.shape
    assert sm[5] == pytest.approx(np.mean(e[3:8]))
