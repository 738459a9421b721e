"""High-level fit drivers tying moments, the GMM solvers, and effect reports.

These are the entry points the CLI, the placebo/conformal routines, and the
Monte Carlo harness call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gmm, moments
from .effects import EffectReport, estimate_catt
from .exceptions import ConfigError
from .moments import MomentSystem
from .panel import PanelDataset


@dataclass
class FitResult:
    """A solved moment system plus HC/HAC covariances and the effect report."""

    ms: MomentSystem
    fit: gmm.GmmFit           # point estimates (no covariance)
    fit_hc: gmm.GmmFit
    fit_hac: gmm.GmmFit
    report: EffectReport

    @property
    def theta(self) -> np.ndarray:
        return self.fit.theta


def _effect_slices(ms: MomentSystem):
    k_phi = ms.meta["effect_dim"]
    return slice(0, ms.param_dim - k_phi), slice(ms.param_dim - k_phi, ms.param_dim)


def _build_report(d: PanelDataset, ms: MomentSystem, fit, fit_hc, fit_hac) -> EffectReport:
    base_sl, eff_sl = _effect_slices(ms)
    phi = ms.meta["phi"]
    gamma = fit.theta[eff_sl]
    e_full = ms.residual(fit.theta) + phi @ gamma
    post = ms.meta["post_mask"]
    pre_rmse = float(np.sqrt(np.mean(e_full[~post] ** 2)))
    return EffectReport(
        e_hat=e_full[post],
        tau_hat=gamma,
        se_hc=fit_hc.se[eff_sl],
        se_hac=fit_hac.se[eff_sl],
        ci_hc=fit_hc.ci()[eff_sl],
        ci_hac=fit_hac.ci()[eff_sl],
        effect_model=ms.meta["effect_model"],
        param_names=list(ms.param_names[eff_sl]),
        e_full=e_full,
        pre_rmse=pre_rmse,
        fitted_trend=(phi @ gamma)[post],
        extra={
            "base_params": dict(zip(ms.param_names[base_sl],
                                    fit.theta[base_sl].tolist())),
            "converged": fit.converged,
        },
    )


def _log_linear_init(d: PanelDataset, effect_dim: int) -> np.ndarray:
    """Starting point for the exponential bridge: log-linear OLS on pre-treatment rows."""
    pre = d.pre_mask
    logy = np.log(np.clip(d.y[pre], 0.5, None))
    X = np.hstack([np.ones((pre.sum(), 1)), d.w[pre]])
    coef, *_ = np.linalg.lstsq(X, logy, rcond=None)
    h_post = np.exp(np.clip(np.hstack([np.ones((d.n_post, 1)), d.w[d.post_mask]]) @ coef,
                            None, 700.0))
    gamma0 = np.zeros(effect_dim)
    gamma0[0] = float(np.mean(d.y[d.post_mask] - h_post))
    return np.concatenate([coef, gamma0])


def fit_pi_joint(
    d: PanelDataset,
    effect_model="constant",
    g_spec: str = "affine",
    covariates: str | None = None,
    link: str = "identity",
    omega: np.ndarray | None = None,
    two_step: bool = False,
    hac_bandwidth: int | None = None,
    init: np.ndarray | None = None,
) -> FitResult:
    """Joint weight + effect estimation over all T periods (single GMM fit)."""
    ms = moments.build_joint_moments(d, effect_model, g_spec, covariates, link)
    if ms.linear:
        fit = gmm.solve_linear(ms, omega)
        if two_step:
            fit = gmm.solve_linear(ms, gmm.two_step_omega(ms, fit))
    else:
        if init is None:
            init = _log_linear_init(d, ms.meta["effect_dim"])
        fit = gmm.solve_nonlinear(ms, omega, init)
        if two_step and fit.converged:
            fit = gmm.solve_nonlinear(ms, gmm.two_step_omega(ms, fit), fit.theta)
    fit_hc = gmm.hc_covariance(ms, fit)
    fit_hac = gmm.hac_covariance(ms, fit, hac_bandwidth)
    report = _build_report(d, ms, fit, fit_hc, fit_hac)
    return FitResult(ms, fit, fit_hc, fit_hac, report)


def fit_pi_two_stage(
    d: PanelDataset,
    g_spec: str = "affine",
    covariates: str | None = None,
    v: np.ndarray | None = None,
    omega: np.ndarray | None = None,
    hac_bandwidth: int | None = None,
) -> FitResult:
    """Weights from pre-treatment proxy moments, then weighted-mean CATT on residuals.

    Reported standard errors treat the first-stage weights as fixed; the joint
    fit propagates weight uncertainty and is what the simulation tables use.
    """
    pre = d.pre_mask
    ms = moments.build_weight_moments(
        d.y[pre], d.w[pre], d.z[pre], g_spec,
        donor_names=[f"alpha[{nm}]" for nm in d.donor_names],
    )
    x_cols, x_names = moments._covariate_block(d, covariates)
    if x_cols.shape[1]:
        ms = moments.add_covariates(ms, x_cols[pre], x_names)
    fit = gmm.solve_linear(ms, omega)
    fit_hc = gmm.hc_covariance(ms, fit)
    fit_hac = gmm.hac_covariance(ms, fit, hac_bandwidth)
    n_a = d.n_donors
    e_full = d.y - d.w @ fit.theta[:n_a]
    if x_cols.shape[1]:
        e_full = e_full - x_cols @ fit.theta[n_a:]
    report = estimate_catt(e_full[d.post_mask], v, hac_bandwidth=hac_bandwidth)
    report.e_full = e_full
    report.pre_rmse = float(np.sqrt(np.mean(e_full[pre] ** 2)))
    report.extra["base_params"] = dict(zip(ms.param_names, fit.theta.tolist()))
    report.extra["converged"] = fit.converged
    return FitResult(ms, fit, fit_hc, fit_hac, report)


def fit_bridge(
    d: PanelDataset,
    effect_model="constant",
    g_spec: str = "affine",
    omega: np.ndarray | None = None,
    hac_bandwidth: int | None = None,
    init: np.ndarray | None = None,
) -> FitResult:
    """Joint exponential-bridge fit for count outcomes."""
    return fit_pi_joint(d, effect_model, g_spec, covariates=None, link="exponential",
                        omega=omega, hac_bandwidth=hac_bandwidth, init=init)


ESTIMATOR_NAMES = ("pi-joint", "pi-two-stage", "bridge", "ols", "ols-constrained")


def run_estimator(name: str, d: PanelDataset, effect_model="constant",
                  g_spec: str = "affine", covariates: str | None = None,
                  hac_bandwidth: int | None = None):
    """Dispatch by estimator name; returns an object with a ``report`` attribute."""
    from . import baselines  # local import to avoid a cycle

    if name == "pi-joint":
        return fit_pi_joint(d, effect_model, g_spec, covariates,
                            hac_bandwidth=hac_bandwidth)
    if name == "pi-two-stage":
        return fit_pi_two_stage(d, g_spec, covariates, hac_bandwidth=hac_bandwidth)
    if name == "bridge":
        return fit_bridge(d, effect_model, g_spec, hac_bandwidth=hac_bandwidth)
    if name == "ols":
        return baselines.fit_ols(d, constrained=False, covariates=bool(covariates),
                                 effect_model=effect_model, hac_bandwidth=hac_bandwidth)
    if name == "ols-constrained":
        return baselines.fit_ols(d, constrained=True, hac_bandwidth=hac_bandwidth)
    raise ConfigError(f"unknown estimator {name!r}; choose from {ESTIMATOR_NAMES}")
