"""Comparator estimators: unconstrained OLS regression and simplex-constrained OLS.

Both use all control units (donors and proxies) as regressors, matching the
classical synthetic-control comparators in the simulation design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gmm, moments
from .effects import EffectReport, estimate_catt
from .exceptions import ConfigError, IdentificationError
from .panel import PanelDataset


@dataclass
class OlsFit:
    """Baseline OLS synthetic-control fit."""

    weights: np.ndarray
    weight_names: list[str]
    tau_hat: np.ndarray
    se_conventional: np.ndarray | None
    report: EffectReport
    constrained: bool
    objective: float | None = None    # pre-period SSR/T0, constrained only

    @property
    def tau_scalar(self) -> float:
        return float(self.tau_hat[0])


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u + (1.0 - css) / np.arange(1, v.size + 1) > 0)[-1]
    lam = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def _constrained_weights(y: np.ndarray, C: np.ndarray, tol: float = 1e-10,
                         max_iter: int = 200_000, restarts: int = 10,
                         seed: int = 0) -> tuple[np.ndarray, float]:
    """Projected gradient on the pre-period SSR over the simplex.

    The objective is convex; random restarts only guard numerics.
    """
    n, k = C.shape
    H = C.T @ C / n
    b = C.T @ y / n
    lip = 2.0 * float(np.linalg.eigvalsh(H)[-1])
    step = 1.0 / max(lip, 1e-12)

    def objective(a):
        r = y - C @ a
        return float(r @ r) / n

    rng = np.random.default_rng(seed)
    starts = [np.full(k, 1.0 / k)]
    starts += [project_to_simplex(rng.normal(size=k)) for _ in range(restarts - 1)]
    best, best_obj = None, np.inf
    for a in starts:
        for _ in range(max_iter):
            grad = 2.0 * (H @ a - b)
            a_new = project_to_simplex(a - step * grad)
            if np.max(np.abs(a_new - a)) < tol:
                a = a_new
                break
            a = a_new
        obj = objective(a)
        if obj < best_obj:
            best, best_obj = a, obj
    return best, best_obj


def fit_ols(d: PanelDataset, constrained: bool = False, covariates: bool = False,
            effect_model="constant", hac_bandwidth: int | None = None) -> OlsFit:
    """OLS synthetic control.

    Unconstrained: least squares of Y on the post-treatment effect basis plus
    all N control outcomes (plus the treated unit's covariates when
    requested), over all T periods.  Constrained: pre-period SSR minimized
    over the probability simplex, then the effect as the mean post-treatment
    residual.
    """
    control_names = d.donor_names + d.proxy_names
    controls = np.hstack([d.w, d.z])
    if constrained:
        if covariates:
            raise ConfigError("constrained baseline does not support covariates")
        pre = d.pre_mask
        alpha, obj = _constrained_weights(d.y[pre], controls[pre])
        e_full = d.y - controls @ alpha
        report = estimate_catt(e_full[d.post_mask], hac_bandwidth=hac_bandwidth)
        report.e_full = e_full
        report.pre_rmse = float(np.sqrt(np.mean(e_full[pre] ** 2)))
        return OlsFit(
            weights=alpha,
            weight_names=control_names,
            tau_hat=report.tau_hat,
            se_conventional=None,
            report=report,
            constrained=True,
            objective=obj,
        )

    ms = moments.ols_normal_equation_system(
        d, covariates="pooled" if covariates else None, effect_model=effect_model
    )
    fit = gmm.solve_linear(ms)
    fit_hc = gmm.hc_covariance(ms, fit)
    fit_hac = gmm.hac_covariance(ms, fit, hac_bandwidth)

    # conventional homoskedastic SEs: sigma^2 (R'R)^-1
    R, resid = ms.design, ms.residual(fit.theta)
    n, k = R.shape
    dof = max(n - k, 1)
    s2 = float(resid @ resid) / dof
    try:
        xtx_inv = np.linalg.inv(R.T @ R)
    except np.linalg.LinAlgError as exc:
        raise IdentificationError("collinear regressors in OLS baseline") from exc
    se_conv = np.sqrt(s2 * np.diag(xtx_inv))

    k_phi = ms.meta["effect_dim"]
    eff_sl = slice(ms.param_dim - k_phi, ms.param_dim)
    n_w = ms.meta["n_weights"]
    phi, post = ms.meta["phi"], ms.meta["post_mask"]
    gamma = fit.theta[eff_sl]
    e_full = ms.residual(fit.theta) + phi @ gamma
    report = EffectReport(
        e_hat=e_full[post],
        tau_hat=gamma,
        se_hc=fit_hc.se[eff_sl],
        se_hac=fit_hac.se[eff_sl],
        ci_hc=fit_hc.ci()[eff_sl],
        ci_hac=fit_hac.ci()[eff_sl],
        effect_model=ms.meta["effect_model"],
        param_names=list(ms.param_names[eff_sl]),
        e_full=e_full,
        pre_rmse=float(np.sqrt(np.mean(e_full[~post] ** 2))),
        fitted_trend=(phi @ gamma)[post],
        extra={"converged": True},
    )
    return OlsFit(
        weights=fit.theta[:n_w],
        weight_names=control_names,
        tau_hat=gamma,
        se_conventional=se_conv[eff_sl],
        report=report,
        constrained=False,
    )
