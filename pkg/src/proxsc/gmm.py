"""GMM solvers and sandwich covariance estimation.

Minimizes m(theta)' Omega m(theta) for the moment systems in
:mod:`proxsc.moments`: closed form for linear systems, Gauss-Newton with
backtracking line search otherwise.  Long-run moment covariance via the HC
outer-product estimator or the Newey-West (Bartlett kernel) HAC estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, IdentificationError, NumericsError
from .moments import MomentSystem

COND_LIMIT = 1e12
Z975 = 1.959963984540054  # Phi^{-1}(0.975)


@dataclass
class GmmFit:
    """Estimated parameters with sandwich covariance.

    ``sigma`` is the covariance of sqrt(n)(theta_hat - theta); standard
    errors are sqrt(diag(sigma) / n).
    """

    theta: np.ndarray
    param_names: list[str]
    n_obs: int
    omega: np.ndarray
    moment_norm: float
    converged: bool = True
    iterations: int = 0
    sigma: np.ndarray | None = None
    s_hat: np.ndarray | None = None
    j_stat: float | None = None
    cov_kind: str | None = None      # "hc" | "hac"
    bandwidth: int | None = None

    @property
    def se(self) -> np.ndarray:
        if self.sigma is None:
            raise ConfigError("covariance not computed; call hc_covariance or hac_covariance")
        return np.sqrt(np.diag(self.sigma) / self.n_obs)

    def ci(self, level: float = 0.95) -> np.ndarray:
        if not math.isclose(level, 0.95):
            raise ConfigError("only 95% intervals are tabulated")
        se = self.se
        return np.column_stack([self.theta - Z975 * se, self.theta + Z975 * se])

    def summary_rows(self) -> list[dict]:
        se = self.se if self.sigma is not None else [float("nan")] * len(self.theta)
        ci = self.ci() if self.sigma is not None else None
        rows = []
        for j, name in enumerate(self.param_names):
            row = {"param": name, "estimate": float(self.theta[j]), "se": float(se[j])}
            if ci is not None:
                row["ci_low"], row["ci_high"] = float(ci[j, 0]), float(ci[j, 1])
            rows.append(row)
        return rows


def _default_omega(d: int, omega) -> np.ndarray:
    if omega is None:
        return np.eye(d)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (d, d):
        raise ConfigError(f"weighting matrix shape {omega.shape}, expected ({d}, {d})")
    if not np.allclose(omega, omega.T):
        raise ConfigError("weighting matrix must be symmetric")
    if np.any(np.linalg.eigvalsh(omega) <= 0):
        raise ConfigError("weighting matrix must be positive definite")
    return omega


def _scaled(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi-scale a symmetric PSD matrix so the rank check ignores column units."""
    scale = np.sqrt(np.abs(np.diag(A)))
    scale[scale == 0] = 1.0
    return A / np.outer(scale, scale), scale


def _check_rank(A: np.ndarray, param_names: list[str]) -> np.ndarray:
    A_s, scale = _scaled(A)
    svals = np.linalg.svd(A_s, compute_uv=False)
    if svals[0] <= 0 or svals[-1] == 0 or svals[0] / svals[-1] > COND_LIMIT:
        # name the parameter columns loading on the (near) null space
        _, _, vt = np.linalg.svd(A_s)
        v = np.abs(vt[-1])
        bad = [param_names[j] for j in np.flatnonzero(v > 0.5 / math.sqrt(len(v)))]
        raise IdentificationError(
            f"identification failure: moment jacobian is rank deficient in columns {bad}"
        )
    return scale


def _solve_spd(A: np.ndarray, b: np.ndarray, param_names: list[str]) -> np.ndarray:
    """Solve A x = b (A symmetric PSD) with the scale-invariant rank check."""
    scale = _check_rank(A, param_names)
    A_s = A / np.outer(scale, scale)
    if b.ndim == 1:
        return np.linalg.solve(A_s, b / scale) / scale
    return np.linalg.solve(A_s, b / scale[:, None]) / scale[:, None]


def solve_linear(ms: MomentSystem, omega: np.ndarray | None = None) -> GmmFit:
    """Closed-form GMM for linear systems: theta = (G'WG)^-1 G'W a_bar."""
    if not ms.linear:
        raise ConfigError("solve_linear requires a linear moment system")
    n = ms.n_obs
    V = ms.instruments
    G = V.T @ ms.design / n                      # (d, k)
    a_bar = V.T @ ms.offset / n                  # (d,)
    omega = _default_omega(V.shape[1], omega)
    A = G.T @ omega @ G
    theta = _solve_spd(A, G.T @ omega @ a_bar, ms.param_names)
    m = a_bar - G @ theta
    return GmmFit(
        theta=theta,
        param_names=list(ms.param_names),
        n_obs=n,
        omega=omega,
        moment_norm=float(np.linalg.norm(m)),
        converged=True,
        iterations=0,
    )


def solve_nonlinear(
    ms: MomentSystem,
    omega: np.ndarray | None = None,
    init: np.ndarray | None = None,
    max_iter: int = 200,
    grad_tol: float = 1e-8,
) -> GmmFit:
    """Gauss-Newton with Armijo backtracking on the GMM objective.

    Converged when the gradient norm falls below grad_tol * (1 + |objective|).
    Non-convergence returns a flagged fit rather than raising, so Monte Carlo
    drivers can tally failures.
    """
    if init is None:
        raise ConfigError("solve_nonlinear requires an initial parameter vector")
    theta = np.asarray(init, dtype=float).copy()
    if not np.all(np.isfinite(theta)):
        raise ConfigError("initial parameter vector must be finite")
    omega = _default_omega(ms.instruments.shape[1], omega)
    R = np.linalg.cholesky(omega).T              # objective = ||R m(theta)||^2

    def safe_F(th):
        try:
            return R @ ms.moments(th)
        except NumericsError:
            return None

    F = safe_F(theta)
    if F is None:
        raise NumericsError("objective not finite at the initial point")
    obj = float(F @ F)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = R @ ms.moment_jacobian(theta)        # (d, k)
        grad = 2.0 * J.T @ F
        if np.linalg.norm(grad) < grad_tol * (1.0 + abs(obj)):
            converged = True
            break
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        # Armijo backtracking
        alpha, ok = 1.0, False
        while alpha >= 1e-14:
            trial = theta + alpha * step
            Ft = safe_F(trial)
            if Ft is not None:
                obj_t = float(Ft @ Ft)
                if obj_t <= obj + 1e-4 * alpha * float(grad @ step):
                    theta, F, obj, ok = trial, Ft, obj_t, True
                    break
            alpha *= 0.5
        if not ok:
            break  # line-search failure: return flagged fit
    else:
        it = max_iter
    if not converged:
        # re-check at the final point (a zero-residual solve may land exactly)
        J = R @ ms.moment_jacobian(theta)
        converged = bool(np.linalg.norm(2.0 * J.T @ F) < grad_tol * (1.0 + abs(obj)))
    return GmmFit(
        theta=theta,
        param_names=list(ms.param_names),
        n_obs=ms.n_obs,
        omega=omega,
        moment_norm=float(np.linalg.norm(ms.moments(theta))),
        converged=converged,
        iterations=it,
    )


def _sigma0(ms: MomentSystem, fit: GmmFit) -> np.ndarray:
    M = ms.moment_jacobian(fit.theta)            # (d, k)
    A = M.T @ fit.omega @ M
    return _solve_spd(A, M.T @ fit.omega, ms.param_names)   # (k, d)


def _finish_cov(ms: MomentSystem, fit: GmmFit, S: np.ndarray, kind: str,
                bandwidth: int | None = None) -> GmmFit:
    S = 0.5 * (S + S.T)
    sig0 = _sigma0(ms, fit)
    sigma = sig0 @ S @ sig0.T
    sigma = 0.5 * (sigma + sigma.T)
    j_stat = None
    d, k = ms.instruments.shape[1], ms.param_dim
    if d > k:
        m = ms.moments(fit.theta)
        j_stat = float(ms.n_obs * m @ np.linalg.pinv(S) @ m)
    return replace(fit, sigma=sigma, s_hat=S, j_stat=j_stat, cov_kind=kind,
                   bandwidth=bandwidth)


def _moment_rows(ms: MomentSystem, theta: np.ndarray) -> np.ndarray:
    return ms.instruments * ms.residual(theta)[:, None]   # (n, d)


def hc_covariance(ms: MomentSystem, fit: GmmFit) -> GmmFit:
    """Heteroskedasticity-consistent sandwich: S = (1/n) sum U_t U_t'."""
    U = _moment_rows(ms, fit.theta)
    S = U.T @ U / ms.n_obs
    return _finish_cov(ms, fit, S, "hc")


def newey_west_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def hac_covariance(ms: MomentSystem, fit: GmmFit, bandwidth: int | None = None) -> GmmFit:
    """Newey-West sandwich with Bartlett kernel.

    S = Gamma_0 + sum_{l=1}^{L} (1 - l/(L+1)) (Gamma_l + Gamma_l'), default
    L = floor(4 (n/100)^{2/9}).
    """
    n = ms.n_obs
    L = newey_west_bandwidth(n) if bandwidth is None else int(bandwidth)
    if L >= n:
        raise ConfigError(f"HAC bandwidth {L} must be below the sample size {n}")
    U = _moment_rows(ms, fit.theta)
    S = U.T @ U / n
    for l in range(1, L + 1):
        gamma = U[l:].T @ U[:-l] / n
        S += (1.0 - l / (L + 1.0)) * (gamma + gamma.T)
    return _finish_cov(ms, fit, S, "hac", bandwidth=L)


def two_step_omega(ms: MomentSystem, fit: GmmFit, kind: str = "hc",
                   bandwidth: int | None = None) -> np.ndarray:
    """Efficient second-step weighting matrix Omega = S(theta_1)^-1."""
    step1 = hc_covariance(ms, fit) if kind == "hc" else hac_covariance(ms, fit, bandwidth)
    return np.linalg.inv(step1.s_hat)
