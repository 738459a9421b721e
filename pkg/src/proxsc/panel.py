"""Panel data model and ingestion.

Observed data are a treated unit, a donor pool, supplemental proxy units
(control units kept out of the donor pool), and optional per-unit measured
covariates, all observed over T integer periods with treatment starting
after period t0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import ConfigError, DataError

ROLES = ("treated", "donor", "proxy", "excluded")


@dataclass
class RoleMap:
    """Assignment of panel units to roles, plus covariate column names."""

    treated: str
    donors: list[str]
    proxies: list[str]
    covariates: list[str] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.donors:
            raise ConfigError("donor set is empty")
        if not self.proxies:
            raise ConfigError("proxy set is empty")
        overlap = set(self.donors) & set(self.proxies)
        if overlap:
            raise ConfigError(f"units assigned to both donor and proxy roles: {sorted(overlap)}")
        for group in (self.donors, self.proxies, self.excluded):
            if self.treated in group:
                raise ConfigError(f"treated unit {self.treated!r} also assigned a control role")

    @property
    def units(self) -> list[str]:
        return [self.treated] + self.donors + self.proxies + self.excluded

    @classmethod
    def from_dict(cls, d: dict) -> "RoleMap":
        return cls(
            treated=d["treated"],
            donors=list(d["donors"]),
            proxies=list(d["proxies"]),
            covariates=list(d.get("covariates", [])),
            excluded=list(d.get("excluded", [])),
        )

    @classmethod
    def from_json(cls, path) -> "RoleMap":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class PanelDataset:
    """Wide-format panel: treated outcome, donor matrix, proxy matrix, covariates.

    ``time_index`` holds the raw integer periods (e.g. years); ``t0`` is the
    raw period value of the last pre-treatment period.  Covariate columns are
    per (unit, covariate) pairs, labelled in ``x_labels`` as "unit:covariate".
    Instances are immutable after construction.
    """

    time_index: np.ndarray          # (T,), strictly increasing integers
    t0: int                         # last pre-treatment period (raw value)
    y: np.ndarray                   # (T,)
    w: np.ndarray                   # (T, |D|)
    z: np.ndarray                   # (T, p)
    donor_names: list[str]
    proxy_names: list[str]
    x: np.ndarray | None = None     # (T, q) per-unit covariates
    x_labels: list[str] = field(default_factory=list)   # "unit:covariate"
    treated_name: str = "treated"
    covariate_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.time_index = np.asarray(self.time_index, dtype=int)
        self.y = np.asarray(self.y, dtype=float)
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        self.z = np.atleast_2d(np.asarray(self.z, dtype=float))
        T = len(self.time_index)
        if np.any(np.diff(self.time_index) <= 0):
            raise DataError("time index must be strictly increasing")
        if self.y.shape != (T,):
            raise DataError(f"y has shape {self.y.shape}, expected ({T},)")
        for name, arr in (("w", self.w), ("z", self.z)):
            if arr.shape[0] != T:
                raise DataError(f"{name} has {arr.shape[0]} rows, expected {T}")
        if not (self.time_index[0] <= self.t0 < self.time_index[-1]):
            raise DataError(
                f"t0={self.t0} outside usable range "
                f"[{self.time_index[0]}, {self.time_index[-1]})"
            )
        for name, arr in (("y", self.y), ("w", self.w), ("z", self.z)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite values in {name} after ingestion")
        if self.x is not None:
            self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
            if self.x.shape[0] != T:
                raise DataError(f"x has {self.x.shape[0]} rows, expected {T}")
            if not np.all(np.isfinite(self.x)):
                raise DataError("non-finite values in x after ingestion")
            if len(self.x_labels) != self.x.shape[1]:
                raise DataError("x_labels does not match covariate column count")
        # enough pre-treatment rows to identify weights + effect; covariate
        # identification depends on the fit mode and is checked when the
        # moment system is built
        if self.n_pre < self.w.shape[1] + 1:
            raise DataError(
                f"too few pre-treatment rows ({self.n_pre}) to identify "
                f"{self.w.shape[1]} weights + effect"
            )
        for arr in (self.time_index, self.y, self.w, self.z):
            arr.setflags(write=False)
        if self.x is not None:
            self.x.setflags(write=False)

    # -- basic shape helpers -------------------------------------------------

    @property
    def n_periods(self) -> int:
        return len(self.time_index)

    @property
    def n_pre(self) -> int:
        return int(np.sum(self.time_index <= self.t0))

    @property
    def n_post(self) -> int:
        return self.n_periods - self.n_pre

    @property
    def n_donors(self) -> int:
        return self.w.shape[1]

    @property
    def n_proxies(self) -> int:
        return self.z.shape[1]

    @property
    def pre_mask(self) -> np.ndarray:
        return self.time_index <= self.t0

    @property
    def post_mask(self) -> np.ndarray:
        return self.time_index > self.t0

    @property
    def s(self) -> np.ndarray:
        """Normalized time positions t/T in (0, 1] for trend regressors."""
        T = self.n_periods
        return np.arange(1, T + 1) / T

    def covariate_columns(self, units: list[str]) -> tuple[np.ndarray, list[str]]:
        """Covariate submatrix for the given units (empty when no covariates)."""
        if self.x is None:
            return np.empty((self.n_periods, 0)), []
        keep = set(units)
        idx = [j for j, lab in enumerate(self.x_labels) if lab.split(":", 1)[0] in keep]
        return self.x[:, idx], [self.x_labels[j] for j in idx]

    def restrict(self, mask: np.ndarray, t0: int | None = None) -> "PanelDataset":
        """New dataset keeping only the masked rows (used by placebo runs)."""
        return PanelDataset(
            time_index=self.time_index[mask],
            t0=self.t0 if t0 is None else t0,
            y=self.y[mask],
            w=self.w[mask],
            z=self.z[mask],
            donor_names=self.donor_names,
            proxy_names=self.proxy_names,
            x=None if self.x is None else self.x[mask],
            x_labels=list(self.x_labels),
            treated_name=self.treated_name,
            covariate_names=list(self.covariate_names),
        )

    def export(self, path, sep: str = ",") -> None:
        """Write back to long format (unit, time, outcome, covariates...)."""
        frames = []
        units = [(self.treated_name, self.y)]
        units += [(nm, self.w[:, j]) for j, nm in enumerate(self.donor_names)]
        units += [(nm, self.z[:, j]) for j, nm in enumerate(self.proxy_names)]
        for name, outcome in units:
            df = pd.DataFrame({"unit": name, "time": self.time_index, "outcome": outcome})
            for cov in self.covariate_names:
                lab = f"{name}:{cov}"
                if lab in self.x_labels:
                    df[cov] = self.x[:, self.x_labels.index(lab)]
            frames.append(df)
        pd.concat(frames, ignore_index=True).to_csv(path, sep=sep, index=False)


def split(d: PanelDataset) -> tuple[dict, dict]:
    """Pre/post row views: two non-overlapping dicts of array views covering all T rows."""

    def view(mask):
        out = {
            "time_index": d.time_index[mask],
            "y": d.y[mask],
            "w": d.w[mask],
            "z": d.z[mask],
        }
        if d.x is not None:
            out["x"] = d.x[mask]
        return out

    return view(d.pre_mask), view(d.post_mask)


def _read_delimited(path) -> pd.DataFrame:
    # header row; comma or tab, sniffed
    df = pd.read_csv(path, sep=None, engine="python")
    df.columns = [str(c).strip() for c in df.columns]
    return df


def ingest(path, roles: RoleMap, t0: int) -> PanelDataset:
    """Read a long-format delimited file and pivot to a :class:`PanelDataset`.

    The file must have columns ``unit``, ``time``, ``outcome`` and optionally
    the covariate columns named in ``roles.covariates``.  Missing covariate
    cells are filled by last observation carried forward within each unit;
    missing outcomes are an error.
    """
    df = _read_delimited(path)
    for col in ("unit", "time", "outcome"):
        if col not in df.columns:
            raise DataError(f"input file lacks required column {col!r}")
    for cov in roles.covariates:
        if cov not in df.columns:
            raise DataError(f"covariate column {cov!r} not in input file")

    file_units = set(df["unit"].astype(str))
    missing = [u for u in roles.units if u not in file_units]
    if missing:
        raise DataError(f"units in roles but not in file: {missing}")
    df = df[df["unit"].astype(str).isin(set(roles.units) - set(roles.excluded))].copy()
    df["unit"] = df["unit"].astype(str)
    df["time"] = df["time"].astype(int)

    dup = df.duplicated(subset=["unit", "time"])
    if dup.any():
        pair = df.loc[dup, ["unit", "time"]].iloc[0]
        raise DataError(f"duplicate (unit, time) pair: ({pair['unit']}, {pair['time']})")

    wide_y = df.pivot(index="time", columns="unit", values="outcome").sort_index()
    if wide_y.isna().any().any():
        cells = wide_y.isna()
        unit = cells.any(axis=0).idxmax()
        t = cells[unit].idxmax()
        raise DataError(f"missing outcome for unit {unit!r} at time {t}")

    time_index = wide_y.index.to_numpy(dtype=int)
    if not (time_index[0] <= t0 < time_index[-1]):
        raise DataError(f"t0={t0} outside usable range [{time_index[0]}, {time_index[-1]})")

    kept_units = [roles.treated] + roles.donors + roles.proxies
    x_cols, x_labels = [], []
    for cov in roles.covariates:
        wide_c = df.pivot(index="time", columns="unit", values=cov).sort_index()
        wide_c = wide_c.ffill()  # LOCF within unit
        for unit in kept_units:
            col = wide_c[unit]
            if col.isna().any():
                raise DataError(
                    f"covariate {cov!r} for unit {unit!r} has no leading observation "
                    "to carry forward"
                )
            x_cols.append(col.to_numpy(dtype=float))
            x_labels.append(f"{unit}:{cov}")

    return PanelDataset(
        time_index=time_index,
        t0=t0,
        y=wide_y[roles.treated].to_numpy(dtype=float),
        w=wide_y[roles.donors].to_numpy(dtype=float),
        z=wide_y[roles.proxies].to_numpy(dtype=float),
        donor_names=list(roles.donors),
        proxy_names=list(roles.proxies),
        x=np.column_stack(x_cols) if x_cols else None,
        x_labels=x_labels,
        treated_name=roles.treated,
        covariate_names=list(roles.covariates),
    )
