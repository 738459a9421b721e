"""Data-generating processes and the Monte Carlo driver.

The Gaussian DGP follows the interactive fixed effects design: r latent
factors lambda_tk ~ N(log t, 1), N = 2r control units whose first half are
donors with loadings e_1..e_r, second half duplicate those loadings and serve
as proxies, treated-unit loading all-ones, true weights all-ones (not summing
to one), errors iid N(0,1) or AR(1) with coefficient 0.1, optional unit
covariates c_it ~ N(0,1) entering additively with coefficient xi, and a
constant (tau = 2) or linear-trend (gamma = (1,1)) effect path.

The Poisson variant draws the treated outcome as a count with multiplicative
mean exp(mu_0' lambda_t / r + c) while donors and proxies observe their
loading combination on the log-rate scale plus Gaussian noise; the
exponential confounding bridge is then exactly h(w) = exp(c - r sigma^2/2 +
sum_i w_i), which the bridge estimator should recover.  Count designs use
stationary factors (no log-t drift) so rates stay on a stable scale, with c
calibrated for mean counts near 10.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import run_estimator
from .exceptions import ConfigError, ProxscError
from .panel import PanelDataset

AR1_COEF = 0.1
AR1_BURNIN = 100
POISSON_MEAN_COUNT = 10.0
POISSON_DONOR_SD = 0.5


@dataclass(frozen=True)
class SimDesign:
    """Complete DGP specification; n_units = 2r, first r units are donors."""

    r: int = 1
    t0: int = 100
    t1: int = 100
    tau_path: str = "constant"          # "constant" (tau=2) | "linear_trend" (gamma=(1,1))
    error_law: str = "iid"              # "iid" | "ar1"
    xi: float = 0.0
    outcome_family: str = "gaussian"    # "gaussian" | "poisson"
    error_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.r < 1 or self.t0 < 1 or self.t1 < 1:
            raise ConfigError("r, t0, t1 must be positive")
        if self.tau_path not in ("constant", "linear_trend"):
            raise ConfigError(f"unknown tau_path {self.tau_path!r}")
        if self.error_law not in ("iid", "ar1"):
            raise ConfigError(f"unknown error_law {self.error_law!r}")
        if self.outcome_family not in ("gaussian", "poisson"):
            raise ConfigError(f"unknown outcome_family {self.outcome_family!r}")

    @property
    def n_units(self) -> int:
        return 2 * self.r

    @property
    def n_periods(self) -> int:
        return self.t0 + self.t1

    @property
    def true_effect(self) -> np.ndarray:
        """True effect parameters under the design's effect path."""
        return np.array([2.0]) if self.tau_path == "constant" else np.array([1.0, 1.0])

    def effect_path(self) -> np.ndarray:
        """tau_t over post-treatment rows, evaluated at s = t/T."""
        T = self.n_periods
        s = np.arange(self.t0 + 1, T + 1) / T
        if self.tau_path == "constant":
            return np.full(self.t1, 2.0)
        return 1.0 + s

    @classmethod
    def from_dict(cls, d: dict) -> "SimDesign":
        return cls(**d)


@dataclass
class SimTruth:
    """Hidden record of the latent draws, for oracle checks only."""

    lam: np.ndarray                 # (T, r)
    eps: np.ndarray                 # (T, N+1); column 0 = treated
    alpha: np.ndarray               # true weights (all ones)
    effect_path: np.ndarray         # tau_t over post rows
    covariates: np.ndarray | None   # (T, N+1) when xi != 0
    bridge_alpha: np.ndarray | None = None   # (1+r,) Poisson designs


def _draw_errors(rng, T, n_series, law, scale) -> np.ndarray:
    if law == "iid":
        return scale * rng.standard_normal((T, n_series))
    total = T + AR1_BURNIN
    nu = scale * rng.standard_normal((total, n_series))
    eps = np.zeros((total, n_series))
    for t in range(1, total):
        eps[t] = AR1_COEF * eps[t - 1] + nu[t]
    return eps[AR1_BURNIN:]


def generate(design: SimDesign, seed=None) -> tuple[PanelDataset, SimTruth]:
    """Draw one panel; reproducible from the seed, with the truth record retained."""
    rng = np.random.default_rng(design.seed if seed is None else seed)
    r, T = design.r, design.n_periods
    N = design.n_units
    t_axis = np.arange(1, T + 1)
    lam = rng.standard_normal((T, r))
    if design.outcome_family == "gaussian":
        # non-stationary factor law; the count variant keeps stationary factors
        # so the Poisson rates stay on a stable scale
        lam = lam + np.log(t_axis)[:, None]
    post = t_axis > design.t0
    effect_path = design.effect_path()

    # loadings: treated all-ones; donors e_i; proxies duplicate donor loadings
    factor_part = np.empty((T, N + 1))
    factor_part[:, 0] = lam.sum(axis=1)
    for i in range(r):
        factor_part[:, 1 + i] = lam[:, i]
        factor_part[:, 1 + r + i] = lam[:, i]

    covs = rng.standard_normal((T, N + 1)) if design.xi != 0 else None

    if design.outcome_family == "gaussian":
        eps = _draw_errors(rng, T, N + 1, design.error_law, design.error_scale)
        outcomes = factor_part + eps
        if covs is not None:
            outcomes = outcomes + design.xi * covs
        outcomes[post, 0] += effect_path
        bridge_alpha = None
    else:
        if design.xi != 0:
            raise ConfigError("Poisson designs do not include measured covariates")
        # treated: Poisson with multiplicative mean exp(sum_k lambda_k / r + c);
        # controls: log-rate combination plus Gaussian noise, so the
        # exponential bridge holds exactly with unit weights.
        c = math.log(POISSON_MEAN_COUNT) - 1.0 / (2 * r)
        rate = np.exp(lam.sum(axis=1) / r + c)
        y = rng.poisson(rate).astype(float)
        y[post] += effect_path
        eps = POISSON_DONOR_SD * rng.standard_normal((T, N))
        outcomes = np.empty((T, N + 1))
        outcomes[:, 0] = y
        outcomes[:, 1:] = lam[:, np.tile(np.arange(r), 2)] / r + eps
        eps = np.hstack([(y - rate).reshape(-1, 1), eps])
        bridge_alpha = np.concatenate([[c - r * POISSON_DONOR_SD**2 / 2], np.ones(r)])

    donor_names = [f"donor_{i+1}" for i in range(r)]
    proxy_names = [f"proxy_{i+1}" for i in range(r)]
    x = None
    x_labels: list[str] = []
    cov_names: list[str] = []
    if covs is not None:
        names = ["treated"] + donor_names + proxy_names
        x = covs
        x_labels = [f"{nm}:c" for nm in names]
        cov_names = ["c"]

    panel = PanelDataset(
        time_index=t_axis,
        t0=design.t0,
        y=outcomes[:, 0],
        w=outcomes[:, 1:1 + r],
        z=outcomes[:, 1 + r:],
        donor_names=donor_names,
        proxy_names=proxy_names,
        x=x,
        x_labels=x_labels,
        treated_name="treated",
        covariate_names=cov_names,
    )
    truth = SimTruth(
        lam=lam,
        eps=eps,
        alpha=np.ones(r),
        effect_path=effect_path,
        covariates=covs,
        bridge_alpha=bridge_alpha,
    )
    return panel, truth


# -- Monte Carlo driver --------------------------------------------------------

@dataclass
class EstimatorSummary:
    """Aggregated Monte Carlo performance of one estimator."""

    name: str
    n_reps: int
    n_failures: int
    component_names: list[str]
    true_value: np.ndarray
    bias: np.ndarray
    mc_sd: np.ndarray
    mean_width_hc: np.ndarray
    mean_width_hac: np.ndarray
    coverage_hc: np.ndarray
    coverage_hac: np.ndarray

    @property
    def mc_se(self) -> np.ndarray:
        """Monte Carlo standard error of the bias estimate."""
        return self.mc_sd / math.sqrt(max(self.n_reps - self.n_failures, 1))

    def to_rows(self) -> list[dict]:
        rows = []
        for j, comp in enumerate(self.component_names):
            rows.append({
                "estimator": self.name,
                "component": comp,
                "true_value": float(self.true_value[j]),
                "bias": float(self.bias[j]),
                "mc_sd": float(self.mc_sd[j]),
                "mean_ci_width_hc": float(self.mean_width_hc[j]),
                "mean_ci_width_hac": float(self.mean_width_hac[j]),
                "coverage_hc": float(self.coverage_hc[j]),
                "coverage_hac": float(self.coverage_hac[j]),
                "n_reps": self.n_reps,
                "n_failures": self.n_failures,
            })
        return rows


_MC_ESTIMATORS = {
    "pi": ("pi-joint", None),
    "pi-cov": ("pi-joint", "per_unit"),
    "pi-two-stage": ("pi-two-stage", None),
    "bridge": ("bridge", None),
    "ols": ("ols", None),
    "ols-cov": ("ols", "pooled"),
    "ols-constrained": ("ols-constrained", None),
}


def _one_rep(args):
    design, estimators, seed = args
    panel, _ = generate(design, seed=seed)
    effect_model = design.tau_path
    out = {}
    for name in estimators:
        kind, cov_mode = _MC_ESTIMATORS[name]
        try:
            res = run_estimator(kind, panel, effect_model=effect_model,
                                covariates=cov_mode)
            rep = res.report
            if not rep.extra.get("converged", True):
                out[name] = None
                continue
            out[name] = (rep.tau_hat, rep.ci_hc, rep.ci_hac)
        except ProxscError:
            out[name] = None
        except np.linalg.LinAlgError:
            out[name] = None
    return out


def run_monte_carlo(design: SimDesign, estimators: list[str], reps: int,
                    workers: int = 1) -> list[EstimatorSummary]:
    """Replicate the design, fit each estimator, and tabulate bias/coverage.

    Per-rep seeds are spawned deterministically from the design seed, so
    results are independent of the worker count and any single rep can be
    reproduced in isolation.
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    unknown = [e for e in estimators if e not in _MC_ESTIMATORS]
    if unknown:
        raise ConfigError(f"unknown estimators {unknown}; choose from {sorted(_MC_ESTIMATORS)}")
    seeds = np.random.SeedSequence(design.seed).spawn(reps)
    tasks = [(design, estimators, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_rep, tasks, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [_one_rep(t) for t in tasks]

    truth = design.true_effect
    names = ["tau"] if design.tau_path == "constant" else ["gamma_0", "gamma_1"]
    summaries = []
    for name in estimators:
        draws = [res[name] for res in results if res[name] is not None]
        n_fail = reps - len(draws)
        if not draws:
            raise ProxscError(f"estimator {name!r} failed in every replication")
        tau = np.array([dr[0] for dr in draws])
        ci_hc = np.array([dr[1] for dr in draws])
        ci_hac = np.array([dr[2] for dr in draws])
        cover = lambda ci: np.mean((ci[:, :, 0] <= truth) & (truth <= ci[:, :, 1]), axis=0)
        summaries.append(EstimatorSummary(
            name=name,
            n_reps=reps,
            n_failures=n_fail,
            component_names=names,
            true_value=truth,
            bias=tau.mean(axis=0) - truth,
            mc_sd=tau.std(axis=0, ddof=1),
            mean_width_hc=(ci_hc[:, :, 1] - ci_hc[:, :, 0]).mean(axis=0),
            mean_width_hac=(ci_hac[:, :, 1] - ci_hac[:, :, 0]).mean(axis=0),
            coverage_hc=cover(ci_hc),
            coverage_hac=cover(ci_hac),
        ))
    return summaries


def results_table(summaries: list[EstimatorSummary]) -> str:
    """Delimited table (tab-separated) of Monte Carlo results."""
    cols = ["estimator", "component", "true_value", "bias", "mc_sd",
            "mean_ci_width_hc", "mean_ci_width_hac", "coverage_hc",
            "coverage_hac", "n_reps", "n_failures"]
    lines = ["\t".join(cols)]
    for summ in summaries:
        for row in summ.to_rows():
            lines.append("\t".join(
                f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
                for c in cols
            ))
    return "\n".join(lines) + "\n"
