from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from adapters.external.files.file_helpers import numbered_columns, read_csv, write_csv
from core.domain.entities.powerflow_entity import InjectionProfile, VoltageSeries
from core.domain.repositories.timeseries_repository_interface import TimeSeriesRepository
from core.services.exceptions import ConfigError, DimensionMismatch


class TimeSeriesRepositoryCSV(TimeSeriesRepository):
    def load_series(self, path: str | Path) -> VoltageSeries:
        df = read_csv(path)
        cols = numbered_columns(df, "bus_", path)
        timestamps = df["t"].to_numpy() if "t" in df.columns else np.arange(len(df))
        try:
            V = df[cols].to_numpy(dtype=float)
        except ValueError as exc:
            raise ConfigError(f"{path}: non-numeric voltage values", field="series") from exc
        return VoltageSeries(V=V, timestamps=timestamps)

    def save_series(self, series: VoltageSeries, path: str | Path) -> Path:
        df = pd.DataFrame(series.V, columns=[f"bus_{n}" for n in range(1, series.n_buses + 1)])
        df.insert(0, "t", series.timestamps)
        return write_csv(df, path)

    def load_profiles(self, path: str | Path, v0: float = 1.0) -> InjectionProfile:
        df = read_csv(path)
        p_cols = numbered_columns(df, "p_", path)
        q_cols = numbered_columns(df, "q_", path)
        if len(p_cols) != len(q_cols):
            raise DimensionMismatch("profile q columns", len(p_cols), len(q_cols))
        try:
            return InjectionProfile(
                p=df[p_cols].to_numpy(dtype=float),
                q=df[q_cols].to_numpy(dtype=float),
                v0=v0,
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid injection profile ({exc})", field="profiles") from exc

    def save_profiles(self, profile: InjectionProfile, path: str | Path) -> Path:
        n = profile.n_buses
        df = pd.concat(
            [
                pd.DataFrame(profile.p, columns=[f"p_{k}" for k in range(1, n + 1)]),
                pd.DataFrame(profile.q, columns=[f"q_{k}" for k in range(1, n + 1)]),
            ],
            axis=1,
        )
        df.insert(0, "t", np.arange(profile.n_slots))
        return write_csv(df, path)
