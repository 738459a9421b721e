"""Estimating-function systems.

A :class:`MomentSystem` bundles, over n observation rows, an instrument
matrix V (n x d) together with residual and jacobian functions of the
parameter vector.  The GMM solvers consume sample moments
m(theta) = (1/n) V' r(theta).

Builders cover: weight-only proxy moments on pre-treatment data, joint
weight+effect moments over all periods, covariate augmentation, and the
parametric confounding bridge (identity or exponential link) for count
outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigError, IdentificationError, NumericsError
from .panel import PanelDataset

_EXP_CLIP = 700.0  # exp() overflow threshold for float64


# -- instrument specs ---------------------------------------------------------

def instrument_matrix(z: np.ndarray, g_spec: str = "affine") -> np.ndarray:
    """Instrument rows g(Z_t) for proxy matrix z (n x p).

    "affine" gives (1, Z')'; "affine+squares" appends elementwise Z^2 for
    over-identification.
    """
    z = np.atleast_2d(z)
    ones = np.ones((z.shape[0], 1))
    if g_spec == "affine":
        return np.hstack([ones, z])
    if g_spec == "affine+squares":
        return np.hstack([ones, z, z**2])
    raise ConfigError(f"unknown instrument spec {g_spec!r}")


# -- effect bases -------------------------------------------------------------

@dataclass(frozen=True)
class EffectBasis:
    """Deterministic effect-path basis phi(s), evaluated at s = t/T."""

    name: str
    dim: int
    _fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        """Basis matrix (len(s) x dim)."""
        return self._fn(np.asarray(s, dtype=float))

    @property
    def param_names(self) -> list[str]:
        if self.dim == 1:
            return ["tau"]
        return [f"gamma_{j}" for j in range(self.dim)]


def constant_basis() -> EffectBasis:
    return EffectBasis("constant", 1, lambda s: np.ones((len(s), 1)))


def linear_basis() -> EffectBasis:
    return EffectBasis("linear", 2, lambda s: np.column_stack([np.ones_like(s), s]))


def quadratic_basis() -> EffectBasis:
    return EffectBasis(
        "quadratic", 3, lambda s: np.column_stack([np.ones_like(s), s, s**2])
    )


def piecewise_basis(breakpoints: list[float]) -> EffectBasis:
    """Piecewise-constant basis with user breakpoints in (0, 1)."""
    edges = [0.0] + sorted(breakpoints) + [1.0 + 1e-12]

    def fn(s):
        cols = [(s >= lo) & (s < hi) for lo, hi in zip(edges[:-1], edges[1:])]
        return np.column_stack(cols).astype(float)

    return EffectBasis(f"piecewise{breakpoints}", len(edges) - 1, fn)


def effect_basis(model) -> EffectBasis:
    if isinstance(model, EffectBasis):
        return model
    table = {
        "constant": constant_basis,
        "linear_trend": linear_basis,
        "quadratic_trend": quadratic_basis,
    }
    if model in table:
        return table[model]()
    raise ConfigError(f"unknown effect model {model!r}")


# -- moment system ------------------------------------------------------------

@dataclass
class MomentSystem:
    """Instrument matrix plus residual/jacobian over n rows.

    For linear systems, residual(theta) = offset - design @ theta and the
    jacobian is the constant -design.
    """

    instruments: np.ndarray                 # (n, d)
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    param_dim: int
    param_names: list[str]
    linear: bool
    design: np.ndarray | None = None        # (n, k), linear systems only
    offset: np.ndarray | None = None        # (n,), linear systems only
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.instruments.shape[1] < self.param_dim:
            raise IdentificationError(
                f"order condition fails: {self.instruments.shape[1]} instruments "
                f"for {self.param_dim} parameters"
            )

    @property
    def n_obs(self) -> int:
        return self.instruments.shape[0]

    def moments(self, theta: np.ndarray) -> np.ndarray:
        """Sample moments m(theta) = (1/n) V' r(theta)."""
        return self.instruments.T @ self.residual(theta) / self.n_obs

    def moment_jacobian(self, theta: np.ndarray) -> np.ndarray:
        """d m / d theta = (1/n) V' J(theta)."""
        return self.instruments.T @ self.jacobian(theta) / self.n_obs


def _linear_system(offset, design, instruments, names, meta=None) -> MomentSystem:
    offset = np.asarray(offset, dtype=float)
    design = np.atleast_2d(np.asarray(design, dtype=float))
    return MomentSystem(
        instruments=np.atleast_2d(np.asarray(instruments, dtype=float)),
        residual=lambda theta: offset - design @ theta,
        jacobian=lambda theta: -design,
        param_dim=design.shape[1],
        param_names=list(names),
        linear=True,
        design=design,
        offset=offset,
        meta=meta or {},
    )


def _check_order(n_proxies: int, n_weights: int) -> None:
    if n_proxies < n_weights:
        raise IdentificationError(
            f"under-identified: {n_proxies} instruments for {n_weights} weights"
        )


def build_weight_moments(
    y: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    g_spec: str = "affine",
    donor_names: list[str] | None = None,
) -> MomentSystem:
    """Weight-only proxy moments g(Z_t)(Y_t - sum_i alpha_i W_it) on pre-treatment rows."""
    w = np.atleast_2d(w)
    z = np.atleast_2d(z)
    _check_order(z.shape[1], w.shape[1])
    names = donor_names or [f"alpha_{i}" for i in range(w.shape[1])]
    return _linear_system(y, w, instrument_matrix(z, g_spec), names)


def weight_moments_from_panel(d: PanelDataset, g_spec: str = "affine") -> MomentSystem:
    pre = d.pre_mask
    return build_weight_moments(
        d.y[pre], d.w[pre], d.z[pre], g_spec,
        donor_names=[f"alpha[{nm}]" for nm in d.donor_names],
    )


def build_joint_moments(
    d: PanelDataset,
    effect_model="constant",
    g_spec: str = "affine",
    covariates: str | None = None,
    link: str = "identity",
) -> MomentSystem:
    """Stacked weight+effect moments over all T periods.

    Instruments are (1(t<=T0) g(Z_t)', 1(t>T0) phi(s)')'; the residual is
    Y_t - 1(t>T0) phi(s)'gamma - sum_i alpha_i W_it, optionally with covariate
    regressors (``covariates`` in {None, "per_unit", "pooled"}) and an
    exponential confounding bridge in place of the linear donor combination
    (``link="exponential"``).
    """
    _check_order(d.n_proxies, d.n_donors)
    basis = effect_basis(effect_model)
    if d.n_post < basis.dim:
        raise IdentificationError(
            f"{d.n_post} post-treatment rows cannot identify {basis.dim} effect parameters"
        )
    pre, post = d.pre_mask, d.post_mask
    phi = basis(d.s) * post[:, None]
    g = instrument_matrix(d.z, g_spec) * pre[:, None]
    instruments = np.hstack([g, phi])

    x_cols, x_names = _covariate_block(d, covariates)
    if x_cols.shape[1]:
        instruments = np.hstack([instruments, x_cols])

    meta = {
        "effect_model": basis.name,
        "effect_dim": basis.dim,
        "phi": phi,
        "post_mask": post,
        "link": link,
        "n_weights": d.n_donors,
        "n_covariates": x_cols.shape[1],
    }

    if link == "identity":
        design = np.hstack([d.w, x_cols, phi])
        names = (
            [f"alpha[{nm}]" for nm in d.donor_names]
            + x_names
            + basis.param_names
        )
        return _linear_system(d.y, design, instruments, names, meta)
    if link == "exponential":
        return _bridge_joint_system(d, phi, instruments, x_cols, x_names, basis, meta)
    raise ConfigError(f"unknown link {link!r}")


def _covariate_block(d: PanelDataset, mode: str | None) -> tuple[np.ndarray, list[str]]:
    if mode is None:
        return np.empty((d.n_periods, 0)), []
    if d.x is None:
        raise ConfigError("covariate adjustment requested but panel has no covariates")
    if mode == "per_unit":
        cols, labels = d.covariate_columns([d.treated_name, *d.donor_names])
    elif mode == "pooled":
        cols, labels = d.covariate_columns([d.treated_name])
    else:
        raise ConfigError(f"unknown covariate mode {mode!r}")
    return cols, [f"xi[{lab}]" for lab in labels]


def add_covariates(ms: MomentSystem, x: np.ndarray, names: list[str] | None = None) -> MomentSystem:
    """Append covariate columns as both regressors and instruments (linear systems)."""
    if not ms.linear:
        raise ConfigError("add_covariates applies to linear systems only")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != ms.n_obs:
        raise ConfigError(f"covariate rows {x.shape[0]} != system rows {ms.n_obs}")
    names = names or [f"xi_{j}" for j in range(x.shape[1])]
    return _linear_system(
        ms.offset,
        np.hstack([ms.design, x]),
        np.hstack([ms.instruments, x]),
        ms.param_names + list(names),
        dict(ms.meta),
    )


# -- confounding bridge --------------------------------------------------------

def _bridge_h(w_aug: np.ndarray, alpha: np.ndarray, link: str) -> np.ndarray:
    """h(W_t; alpha) with alpha = (intercept, weights)."""
    lin = w_aug @ alpha
    if link == "identity":
        return lin
    if np.any(lin > _EXP_CLIP):
        raise NumericsError("exponential bridge overflow: h(W; alpha) is non-finite")
    return np.exp(lin)


def build_bridge_moments(
    y: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    link: str = "identity",
    g_spec: str = "affine",
    donor_names: list[str] | None = None,
) -> MomentSystem:
    """Pre-treatment bridge moments g(Z_t)(Y_t - h(W_t; alpha)).

    h(w; alpha) = alpha_0 + alpha'w (identity) or exp(alpha_0 + alpha'w)
    (exponential, for positive-mean count outcomes).
    """
    if link not in ("identity", "exponential"):
        raise ConfigError(f"unknown link {link!r}")
    y = np.asarray(y, dtype=float)
    w = np.atleast_2d(np.asarray(w, dtype=float))
    z = np.atleast_2d(z)
    _check_order(z.shape[1], w.shape[1])
    if link == "exponential" and np.mean(y) <= 0:
        raise ConfigError("exponential link requires positive-mean outcomes")
    names = ["alpha_0"] + [
        f"alpha[{nm}]" for nm in (donor_names or [str(i) for i in range(w.shape[1])])
    ]
    w_aug = np.hstack([np.ones((w.shape[0], 1)), w])
    instruments = instrument_matrix(z, g_spec)
    if link == "identity":
        return _linear_system(y, w_aug, instruments, names, {"link": link})

    def residual(theta):
        return y - _bridge_h(w_aug, theta, link)

    def jacobian(theta):
        return -_bridge_h(w_aug, theta, link)[:, None] * w_aug

    return MomentSystem(
        instruments=instruments,
        residual=residual,
        jacobian=jacobian,
        param_dim=w_aug.shape[1],
        param_names=names,
        linear=False,
        meta={"link": link},
    )


def _bridge_joint_system(d, phi, instruments, x_cols, x_names, basis, meta):
    if x_cols.shape[1]:
        raise ConfigError("covariate adjustment is not supported for the exponential bridge")
    if np.mean(d.y[d.pre_mask]) <= 0:
        raise ConfigError("exponential link requires positive-mean outcomes")
    w_aug = np.hstack([np.ones((d.n_periods, 1)), d.w])
    k_a = w_aug.shape[1]
    names = (
        ["alpha_0"]
        + [f"alpha[{nm}]" for nm in d.donor_names]
        + basis.param_names
    )
    y = d.y

    def residual(theta):
        return y - phi @ theta[k_a:] - _bridge_h(w_aug, theta[:k_a], "exponential")

    def jacobian(theta):
        h = _bridge_h(w_aug, theta[:k_a], "exponential")
        return np.hstack([-h[:, None] * w_aug, -phi])

    return MomentSystem(
        instruments=instruments,
        residual=residual,
        jacobian=jacobian,
        param_dim=k_a + basis.dim,
        param_names=names,
        linear=False,
        meta=meta,
    )


def ols_normal_equation_system(d: PanelDataset, covariates: str | None = None,
                               effect_model="constant") -> MomentSystem:
    """OLS stacked as a moment system: instruments equal the regressors.

    Regressors are the post-treatment effect basis plus *all* control units
    (donors and proxies), matching the unconstrained regression comparator.
    """
    basis = effect_basis(effect_model)
    phi = basis(d.s) * d.post_mask[:, None]
    controls = np.hstack([d.w, d.z])
    names = (
        [f"alpha[{nm}]" for nm in d.donor_names + d.proxy_names]
    )
    x_cols, x_names = _covariate_block(d, "pooled" if covariates else None)
    design = np.hstack([controls, x_cols, phi])
    all_names = names + x_names + basis.param_names
    meta = {"effect_model": basis.name, "effect_dim": basis.dim, "phi": phi,
            "post_mask": d.post_mask, "n_weights": controls.shape[1],
            "n_covariates": x_cols.shape[1], "link": "identity"}
    return _linear_system(d.y, design, design, all_names, meta)
