"""Generate the checked-in synthetic application dataset.

Shape mirrors the West Germany reunification study: one treated country plus
16 controls over 1960-2003, treatment after 1990, five donor countries, three
covariates with a few mid-series gaps to exercise LOCF imputation.  The true
constant post-treatment effect is -1200.  Run from the repo root:

    python3 tools/make_application_data.py
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data"

TREATED = "West Germany"
DONORS = ["Austria", "Japan", "Netherlands", "Switzerland", "USA"]
PROXIES = ["Australia", "Belgium", "Denmark", "France", "Greece", "Italy",
           "New Zealand", "Norway", "Portugal", "Spain", "UK"]
COVARIATES = ["inflation", "industry", "trade"]
YEARS = np.arange(1960, 2004)
T0 = 1990
TRUE_EFFECT = -1200.0


def main() -> None:
    rng = np.random.default_rng(20240817)
    T = len(YEARS)
    tt = YEARS - 1960

    # six latent factors with distinct dynamics so the donor pool spans a
    # genuinely five-dimensional space: growth, two cycles, two random walks,
    # and a stationary shock series
    lam = np.column_stack([
        2000.0 * np.exp(0.030 * tt) + 40.0 * rng.standard_normal(T),
        1500.0 * np.sin(2 * np.pi * tt / 9.0) + 150.0 * rng.standard_normal(T),
        1200.0 * np.cos(2 * np.pi * tt / 13.0) + 120.0 * rng.standard_normal(T),
        np.cumsum(600.0 * rng.standard_normal(T)),
        np.cumsum(500.0 * rng.standard_normal(T)),
        800.0 * rng.standard_normal(T),
    ])
    n_factors = lam.shape[1]

    units = [TREATED] + DONORS + PROXIES
    n = len(units)
    loadings = np.abs(rng.normal(1.0, 0.6, size=(n, n_factors)))
    alpha = np.array([0.30, 0.25, 0.20, 0.15, 0.10])
    loadings[0] = alpha @ loadings[1:6]          # treated loading matched by donors

    cov_effects = rng.normal(0.0, 15.0, size=(n, len(COVARIATES)))
    covs = np.empty((T, n, 3))
    covs[:, :, 0] = 4.0 + 2.0 * rng.standard_normal((T, n))          # inflation
    covs[:, :, 1] = 30.0 + 5.0 * rng.standard_normal((T, n))         # industry share
    covs[:, :, 2] = 50.0 + 10.0 * rng.standard_normal((T, n))        # trade openness

    noise = 100.0 * rng.standard_normal((T, n))
    outcomes = lam @ loadings.T + np.einsum("tnk,nk->tn", covs, cov_effects) + noise
    outcomes[YEARS > T0, 0] += TRUE_EFFECT

    # mid-series covariate gaps (never leading) to exercise LOCF
    gaps = [("Greece", "inflation", range(1981, 1984)),
            ("Portugal", "trade", range(1975, 1977)),
            ("Japan", "industry", range(1995, 1997))]

    lines = ["unit,time,outcome," + ",".join(COVARIATES)]
    for j, unit in enumerate(units):
        for i, year in enumerate(YEARS):
            vals = []
            for k, cov in enumerate(COVARIATES):
                blank = any(unit == u and cov == c and year in yrs for u, c, yrs in gaps)
                vals.append("" if blank else f"{covs[i, j, k]:.4f}")
            lines.append(f"{unit},{year},{outcomes[i, j]:.4f}," + ",".join(vals))

    OUT.mkdir(exist_ok=True)
    (OUT / "german_shaped_synthetic.csv").write_text("\n".join(lines) + "\n")
    (OUT / "german_shaped_roles.json").write_text(json.dumps({
        "treated": TREATED,
        "donors": DONORS,
        "proxies": PROXIES,
        "covariates": COVARIATES,
    }, indent=2) + "\n")
    print(f"wrote {OUT}/german_shaped_synthetic.csv ({n} units x {T} periods), "
          f"true effect {TRUE_EFFECT}")


if __name__ == "__main__":
    main()
