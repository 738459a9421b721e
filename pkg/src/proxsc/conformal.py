"""Conformal prediction intervals for per-period effects.

For a short post-treatment period, the effect eta_t = Y_t(1) - Y_t(0) at one
post period t* is inferred by test inversion: hypothesize eta_0, subtract it
from Y_{t*}, refit the proxy-moment weights on the pre-treatment rows plus
the adjusted point treated as untreated, and rank the adjusted point's
conformity score among all placements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gmm, moments
from .exceptions import ConfigError, GridError
from .panel import PanelDataset

_TIE_TOL = 1e-9


@dataclass
class ConformalResult:
    """Grid of hypothesized effects with permutation p-values and the level set."""

    post_period: int                 # raw time value t*
    grid: np.ndarray
    p_values: np.ndarray
    level: float
    interval: tuple[float, float]
    connected: bool
    scheme: str

    def to_rows(self) -> list[dict]:
        return [
            {"eta0": float(g), "p_value": float(p), "accepted": bool(p > self.level)}
            for g, p in zip(self.grid, self.p_values)
        ]


def _default_grid(d: PanelDataset, g_spec: str, n_points: int = 101) -> np.ndarray:
    """101 points spanning tau_hat +/- 6 SE from a preliminary joint fit.

    With very short post periods the sandwich SE degenerates (the post moment
    is zeroed exactly), so the span is floored at the pre-period residual
    scale, which is what the conformity scores live on.
    """
    from .estimators import fit_pi_joint

    res = fit_pi_joint(d, "constant", g_spec)
    tau = res.report.tau_scalar
    se = float(res.report.se_hc[0])
    resid_sd = float(np.std(res.report.e_full[d.pre_mask]))
    half = 6 * max(se if np.isfinite(se) else 0.0, resid_sd, 1e-6)
    return np.linspace(tau - half, tau + half, n_points)


def _pvalue(scores: np.ndarray, scheme: str) -> float:
    """Rank-based p-value of the last conformity score among all placements.

    With a single adjusted post period the test statistic reads one position
    of the score vector, so iid permutations and cyclic moving-block shifts
    scan the same n placements and yield identical p-values.
    """
    if scheme not in ("iid-permutation", "moving-block"):
        raise ConfigError(f"unknown conformal scheme {scheme!r}")
    n = scores.size
    target = scores[-1]
    return float(np.sum(scores >= target - _TIE_TOL * (1.0 + target))) / n


def conformal_interval(
    d: PanelDataset,
    post_period: int,
    grid: np.ndarray | None = None,
    scheme: str = "moving-block",
    level: float = 0.10,
    g_spec: str = "affine",
) -> ConformalResult:
    """Test-inversion prediction interval for the effect at one post period."""
    if post_period <= d.t0:
        raise ConfigError(f"post period {post_period} is not after t0={d.t0}")
    if post_period not in d.time_index:
        raise ConfigError(f"period {post_period} not in the panel")
    if grid is None:
        grid = _default_grid(d, g_spec)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be a finite increasing sequence")

    pre = d.pre_mask
    star = d.time_index == post_period
    rows = pre | star
    y0 = d.y[rows].copy()
    W = d.w[rows]
    V = moments.instrument_matrix(d.z[rows], g_spec)
    design = W
    names = [f"alpha[{nm}]" for nm in d.donor_names]
    if d.x is not None:
        x_cols, x_labels = d.covariate_columns([d.treated_name, *d.donor_names])
        design = np.hstack([design, x_cols[rows]])
        V = np.hstack([V, x_cols[rows]])
        names += [f"xi[{lab}]" for lab in x_labels]
    n = y0.size
    p_values = np.empty(grid.size)
    adjust = np.zeros(n)
    adjust[-1] = 1.0  # the adjusted point is the last row (t* follows all pre rows)
    for i, eta0 in enumerate(grid):
        y = y0 - eta0 * adjust
        ms = moments._linear_system(y, design, V, names)
        fit = gmm.solve_linear(ms)
        scores = np.abs(ms.residual(fit.theta))
        p_values[i] = _pvalue(scores, scheme)

    accepted = p_values > level
    if not accepted.any():
        raise GridError("no grid point accepted; refine or recenter the grid")
    if accepted[0] or accepted[-1]:
        raise GridError(
            "interval reaches the grid boundary; widen the hypothesis grid"
        )
    idx = np.flatnonzero(accepted)
    connected = bool(np.all(np.diff(idx) == 1))
    interval = (float(grid[idx[0]]), float(grid[idx[-1]]))
    return ConformalResult(
        post_period=int(post_period),
        grid=grid,
        p_values=p_values,
        level=level,
        interval=interval,
        connected=connected,
        scheme=scheme,
    )
