"""OLS baselines: unconstrained regression and simplex-constrained weights."""

import numpy as np
import pytest

from proxsc import ConfigError, PanelDataset, SimDesign, fit_ols, generate
from proxsc.baselines import _constrained_weights, project_to_simplex


def _brute_force_projection(v, grid=201):
    """Exhaustive search over a fine simplex grid (2-d only)."""
    best, best_d = None, np.inf
    for a in np.linspace(0.0, 1.0, grid):
        x = np.array([a, 1.0 - a])
        dist = np.sum((x - v) ** 2)
        if dist < best_d:
            best, best_d = x, dist
    return best


def test_simplex_projection_properties():
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.normal(0.0, 2.0, size=6)
        x = project_to_simplex(v)
        assert x.min() >= -1e-12
        assert x.sum() == pytest.approx(1.0)
        # projection of a point already on the simplex is itself
        np.testing.assert_allclose(project_to_simplex(x), x, atol=1e-12)


def test_simplex_projection_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(10):
        v = rng.normal(0.0, 1.5, size=2)
        x = project_to_simplex(v)
        np.testing.assert_allclose(x, _brute_force_projection(v), atol=0.01)


def test_simplex_projection_vertices():
    np.testing.assert_allclose(project_to_simplex(np.array([5.0, -1.0, -1.0])),
                               [1.0, 0.0, 0.0], atol=1e-12)


def make_simplex_panel(T=60, t0=40, seed=3, noise=0.0):
    rng = np.random.default_rng(seed)
    controls = rng.standard_normal((T, 4)) + np.arange(1, 5)
    true_w = np.array([0.4, 0.3, 0.2, 0.1])
    y = controls @ true_w + noise * rng.standard_normal(T)
    return PanelDataset(
        time_index=np.arange(1, T + 1), t0=t0, y=y,
        w=controls[:, :2], z=controls[:, 2:],
        donor_names=["d1", "d2"], proxy_names=["p1", "p2"],
    ), true_w


def test_noiseless_simplex_weights_recovered():
    d, true_w = make_simplex_panel()
    res_c = fit_ols(d, constrained=True)
    np.testing.assert_allclose(res_c.weights, true_w, atol=1e-6)
    res_u = fit_ols(d)
    np.testing.assert_allclose(res_u.weights, true_w, atol=1e-8)
    assert abs(res_u.tau_scalar) < 1e-8


def test_constrained_kkt_conditions():
    """At the solution, gradient components are equal on the support and no
    smaller off it (up to the solver tolerance)."""
    rng = np.random.default_rng(5)
    y = rng.standard_normal(50)
    C = rng.standard_normal((50, 6))
    alpha, _ = _constrained_weights(y, C)
    grad = 2.0 * C.T @ (C @ alpha - y)
    on = alpha > 1e-8
    mu = grad[on].mean()
    assert np.max(np.abs(grad[on] - mu)) < 1e-4
    assert np.all(grad[~on] >= mu - 1e-4)


def test_unconstrained_ols_biased_on_factor_design():
    """Measurement noise in the controls shrinks the regression weights, so
    the implied effect is biased and stays biased as T grows."""
    biases = []
    for t_half in (500, 2000):
        d, _ = generate(SimDesign(r=1, t0=t_half, t1=t_half, seed=7))
        res = fit_ols(d)
        biases.append(abs(res.tau_scalar - 2.0))
    assert min(biases) > 0.1
    # bias does not vanish with the sample size
    assert biases[1] > 0.5 * biases[0]


def test_ols_conventional_se_available():
    d, _ = generate(SimDesign(r=1, t0=100, t1=100, seed=9))
    res = fit_ols(d)
    assert res.se_conventional is not None
    assert np.all(res.se_conventional > 0.0)
    assert res.report.ci_hc.shape == (1, 2)


def test_constrained_with_covariates_rejected():
    d, _ = generate(SimDesign(r=1, t0=50, t1=50, xi=1.0, seed=11))
    with pytest.raises(ConfigError):
        fit_ols(d, constrained=True, covariates=True)


def test_ols_uses_all_controls():
    d, _ = generate(SimDesign(r=2, t0=60, t1=60, seed=13))
    res = fit_ols(d)
    assert res.weight_names == d.donor_names + d.proxy_names
    assert res.weights.shape == (4,)
