"""Test-inversion prediction intervals for short post-periods."""

import numpy as np
import pytest

from proxsc import ConfigError, GridError, SimDesign, conformal_interval, generate

from conftest import make_panel


def test_noiseless_interval_collapses_to_truth():
    d = make_panel(T=21, t0=20, noise=0.0, tau=2.0)
    grid = np.linspace(0.0, 4.0, 401)           # step 0.01
    res = conformal_interval(d, post_period=21, grid=grid)
    i_true = int(np.argmin(np.abs(grid - 2.0)))
    assert res.p_values[i_true] == pytest.approx(1.0)
    lo, hi = res.interval
    step = grid[1] - grid[0]
    assert abs(lo - 2.0) <= step + 1e-12
    assert abs(hi - 2.0) <= step + 1e-12


def test_p_values_in_unit_interval_and_connected_hull():
    d, _ = generate(SimDesign(r=1, t0=60, t1=1, seed=3))
    res = conformal_interval(d, post_period=61)
    assert np.all((res.p_values >= 0.0) & (res.p_values <= 1.0))
    lo, hi = res.interval
    assert lo <= hi
    accepted = res.grid[(res.p_values > res.level)]
    assert lo == pytest.approx(accepted.min())
    assert hi == pytest.approx(accepted.max())


def test_schemes_agree_for_single_post_period():
    d, _ = generate(SimDesign(r=1, t0=80, t1=1, seed=5))
    r1 = conformal_interval(d, post_period=81, scheme="iid-permutation")
    r2 = conformal_interval(d, post_period=81, scheme="moving-block")
    np.testing.assert_allclose(r1.p_values, r2.p_values)
    assert r1.interval == r2.interval


def test_unknown_scheme_rejected():
    d, _ = generate(SimDesign(r=1, t0=40, t1=1, seed=7))
    with pytest.raises(ConfigError):
        conformal_interval(d, post_period=41, scheme="bootstrap")


def test_pre_period_rejected():
    d, _ = generate(SimDesign(r=1, t0=40, t1=1, seed=7))
    with pytest.raises(ConfigError):
        conformal_interval(d, post_period=10)


def test_grid_missing_truth_raises():
    d = make_panel(T=31, t0=30, noise=0.05, tau=2.0, seed=9)
    with pytest.raises(GridError):
        conformal_interval(d, post_period=31,
                           grid=np.linspace(40.0, 50.0, 51))


def test_boundary_acceptance_raises():
    d = make_panel(T=31, t0=30, noise=0.05, tau=2.0, seed=9)
    # grid stops right at the truth, so the boundary point is accepted
    with pytest.raises(GridError, match="boundary"):
        conformal_interval(d, post_period=31, grid=np.linspace(0.0, 2.0, 21))


def _pvalue_at(d, post_period, eta0):
    """Refit with the hypothesized effect removed and rank the held-out score,
    mirroring one grid evaluation of the interval construction."""
    from proxsc import gmm, moments

    rows = d.pre_mask | (d.time_index == post_period)
    y = d.y[rows].copy()
    y[-1] -= eta0
    V = moments.instrument_matrix(d.z[rows], "affine")
    ms = moments._linear_system(y, d.w[rows], V,
                                [f"alpha[{nm}]" for nm in d.donor_names])
    fit = gmm.solve_linear(ms)
    scores = np.abs(ms.residual(fit.theta))
    return float(np.sum(scores >= scores[-1] - 1e-9 * (1 + scores[-1]))) / scores.size


def test_null_p_values_uniform():
    """Under exchangeable scores the p-value at the true effect is uniform on
    {1/n, ..., 1}; check mean and a Kolmogorov-Smirnov style bound."""
    reps = 300
    hits = []
    for seed in range(reps):
        d, truth = generate(SimDesign(r=1, t0=30, t1=1, seed=100 + seed))
        hits.append(_pvalue_at(d, 31, float(truth.effect_path[0])))
    hits = np.asarray(hits)
    # mean of uniform {1/n,...,1} with n=31 ≈ 0.516
    assert abs(hits.mean() - 0.516) < 0.06
    # P(p <= 0.2) should be near 0.2
    assert abs(np.mean(hits <= 0.2) - 0.2) < 0.08


def test_width_monotone_in_noise_scale():
    widths = {}
    for scale in (0.25, 1.0, 4.0):
        per_rep = []
        for seed in range(30):
            d, _ = generate(SimDesign(r=1, t0=60, t1=1, error_scale=scale,
                                      seed=500 + seed))
            try:
                res = conformal_interval(d, post_period=61)
            except GridError:
                continue
            per_rep.append(res.interval[1] - res.interval[0])
        widths[scale] = np.mean(per_rep)
    assert widths[0.25] < widths[1.0] < widths[4.0]
