"""Post-treatment effect analysis.

Residual (treated-minus-synthetic) series, CATT and parametric trend
estimation with HC/HAC standard errors, placebo refits, and a descriptive
moving-average smoother.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmm
from .exceptions import ConfigError, DataError
from .moments import MomentSystem, _linear_system, effect_basis
from .panel import PanelDataset


@dataclass
class EffectReport:
    """Effect estimates on the post-treatment residual series."""

    e_hat: np.ndarray                  # post-treatment residuals (T1,)
    tau_hat: np.ndarray                # effect parameters (scalar stored as shape (1,))
    se_hc: np.ndarray
    se_hac: np.ndarray
    ci_hc: np.ndarray                  # (k, 2)
    ci_hac: np.ndarray
    effect_model: str
    param_names: list[str]
    v: np.ndarray | None = None        # per-period weights (CATT only)
    e_full: np.ndarray | None = None   # residuals over all T (diagnostics)
    pre_rmse: float | None = None
    fitted_trend: np.ndarray | None = None   # fitted tau(t/T) over post rows
    extra: dict = field(default_factory=dict)

    @property
    def tau_scalar(self) -> float:
        if self.tau_hat.size != 1:
            raise ConfigError("effect is a parameter vector; no scalar CATT")
        return float(self.tau_hat[0])

    def to_dict(self) -> dict:
        out = {
            "effect_model": self.effect_model,
            "param_names": list(self.param_names),
            "tau_hat": self.tau_hat.tolist(),
            "se_hc": self.se_hc.tolist(),
            "se_hac": self.se_hac.tolist(),
            "ci_hc": self.ci_hc.tolist(),
            "ci_hac": self.ci_hac.tolist(),
            "e_hat": self.e_hat.tolist(),
        }
        if self.pre_rmse is not None:
            out["pre_rmse"] = self.pre_rmse
        for key, val in self.extra.items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    def table(self) -> str:
        lines = [f"{'param':<22}{'estimate':>14}{'se(HC)':>12}{'se(HAC)':>12}"
                 f"{'95% CI (HC)':>28}{'95% CI (HAC)':>28}"]
        for j, name in enumerate(self.param_names):
            lines.append(
                f"{name:<22}{self.tau_hat[j]:>14.4f}{self.se_hc[j]:>12.4f}"
                f"{self.se_hac[j]:>12.4f}"
                f"{'(%.4f, %.4f)' % tuple(self.ci_hc[j]):>28}"
                f"{'(%.4f, %.4f)' % tuple(self.ci_hac[j]):>28}"
            )
        return "\n".join(lines)


def residual_series(
    d: PanelDataset,
    alpha: np.ndarray,
    intercept: float | None = None,
    link: str = "identity",
    xi: np.ndarray | None = None,
    covariate_cols: np.ndarray | None = None,
) -> np.ndarray:
    """Per-period contrast e_t = Y_t - h(W_t) over all T periods.

    With fitted weights h is the donor combination (optionally plus intercept
    and covariate terms); ``link="exponential"`` uses the fitted confounding
    bridge exp(intercept + alpha'W).
    """
    alpha = np.asarray(alpha, dtype=float)
    lin = d.w @ alpha + (intercept or 0.0)
    h = np.exp(lin) if link == "exponential" else lin
    e = d.y - h
    if xi is not None:
        if covariate_cols is None:
            raise ConfigError("xi supplied without covariate columns")
        e = e - covariate_cols @ np.asarray(xi, dtype=float)
    return e


def _report_from_series(ms: MomentSystem, e_post: np.ndarray, effect_model: str,
                        param_names: list[str], v=None,
                        hac_bandwidth: int | None = None,
                        fitted_trend=None) -> EffectReport:
    fit = gmm.solve_linear(ms)
    fit_hc = gmm.hc_covariance(ms, fit)
    fit_hac = gmm.hac_covariance(ms, fit, hac_bandwidth)
    return EffectReport(
        e_hat=np.asarray(e_post, dtype=float),
        tau_hat=fit.theta,
        se_hc=fit_hc.se,
        se_hac=fit_hac.se,
        ci_hc=fit_hc.ci(),
        ci_hac=fit_hac.ci(),
        effect_model=effect_model,
        param_names=param_names,
        v=v,
        fitted_trend=fitted_trend,
    )


def estimate_catt(e: np.ndarray, v: np.ndarray | None = None,
                  hac_bandwidth: int | None = None) -> EffectReport:
    """Weighted-mean CATT on a post-treatment residual series.

    tau_hat = sum v_t e_t / sum v_t, default v_t = 1.
    """
    e = np.asarray(e, dtype=float)
    if e.size < 1:
        raise DataError("empty residual series")
    if v is None:
        v = np.ones_like(e)
    v = np.asarray(v, dtype=float)
    if v.shape != e.shape:
        raise ConfigError("weights and series length differ")
    if np.all(v == 0):
        raise ConfigError("all-zero effect weights")
    ms = _linear_system(e, np.ones((e.size, 1)), v.reshape(-1, 1), ["tau"])
    tau = float(v @ e / v.sum())
    report = _report_from_series(ms, e, "constant", ["tau"], v=v,
                                 hac_bandwidth=hac_bandwidth)
    report.fitted_trend = np.full_like(e, tau)
    return report


def fit_trend(e: np.ndarray, basis, s: np.ndarray,
              hac_bandwidth: int | None = None) -> EffectReport:
    """Least squares of e_t on phi(t/T) with HC/HAC sandwich standard errors."""
    e = np.asarray(e, dtype=float)
    basis = effect_basis(basis)
    s = np.asarray(s, dtype=float)
    if s.shape != e.shape:
        raise ConfigError("normalized time index and series length differ")
    if e.size < basis.dim:
        raise DataError(f"{e.size} post-treatment rows cannot fit {basis.dim} trend parameters")
    phi = basis(s)
    ms = _linear_system(e, phi, phi, basis.param_names)
    report = _report_from_series(ms, e, basis.name, basis.param_names,
                                 hac_bandwidth=hac_bandwidth)
    report.fitted_trend = phi @ report.tau_hat
    return report


def placebo_run(d: PanelDataset, pseudo_t0: int, **fit_options) -> EffectReport:
    """Full PI refit on pre-treatment rows only, with a fictitious treatment start.

    The effect estimate should be statistically null when the model holds.
    """
    from .estimators import fit_pi_joint  # local import to avoid a cycle

    if pseudo_t0 >= d.t0:
        raise ConfigError(f"placebo period {pseudo_t0} must precede t0={d.t0}")
    restricted = d.restrict(d.pre_mask, t0=pseudo_t0)
    # PanelDataset validation rejects splits leaving too few rows on either side
    return fit_pi_joint(restricted, **fit_options).report


def moving_average(e: np.ndarray, window: int = 5) -> np.ndarray:
    """Centered moving-average smoother of the residual series (plots only)."""
    if window < 1 or window % 2 == 0:
        raise ConfigError("window must be a positive odd integer")
    e = np.asarray(e, dtype=float)
    half = window // 2
    out = np.empty_like(e)
    for i in range(e.size):
        lo, hi = max(0, i - half), min(e.size, i + half + 1)
        out[i] = e[lo:hi].mean()
    return out
