"""Shared fixtures and small panel builders for the test suite."""

import numpy as np
import pytest

from proxsc import PanelDataset, RoleMap


def make_panel(T=20, t0=10, n_donors=1, n_proxies=1, noise=0.0, seed=0,
               tau=2.0, time_start=1):
    """Factor panel with unit weights on the donors and duplicate proxies.

    With noise=0 the treated outcome equals the donor sum exactly pre-period
    and donor sum + tau post-period, so estimators should be exact.
    """
    rng = np.random.default_rng(seed)
    time_index = np.arange(time_start, time_start + T)
    lam = rng.standard_normal((T, n_donors))
    w = lam + noise * rng.standard_normal((T, n_donors))
    reps = int(np.ceil(n_proxies / n_donors))
    z = np.tile(lam, (1, reps))[:, :n_proxies] + noise * rng.standard_normal((T, n_proxies))
    y = lam.sum(axis=1) + noise * rng.standard_normal(T)
    y[time_index > t0] += tau
    return PanelDataset(
        time_index=time_index,
        t0=t0,
        y=y,
        w=w,
        z=z,
        donor_names=[f"donor_{i+1}" for i in range(n_donors)],
        proxy_names=[f"proxy_{i+1}" for i in range(n_proxies)],
    )


def write_long_csv(path, units, time_index, outcomes, covariates=None):
    """Long-format CSV: units is a list of names, outcomes (T, n) column-per-unit.

    covariates maps name -> (T, n) array, with None entries left blank.
    """
    covariates = covariates or {}
    header = "unit,time,outcome" + "".join(f",{c}" for c in covariates)
    lines = [header]
    for j, unit in enumerate(units):
        for i, t in enumerate(time_index):
            cells = [unit, str(t), f"{outcomes[i, j]:.12g}"]
            for name, arr in covariates.items():
                v = arr[i, j]
                cells.append("" if v is None or (isinstance(v, float) and np.isnan(v))
                             else f"{float(v):.12g}")
            lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def tiny_roles():
    return RoleMap(treated="A", donors=["B"], proxies=["C"])
