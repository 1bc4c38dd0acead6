"""Parse, validate, and normalize per-network CSV archives.

Stations arrive as one CSV per network (``station_id,network,latitude,
longitude,attr:<name>...``), observations as long-format daily CSVs
(``station_id,date,variable,value`` with an empty value meaning missing).
Loaders validate rows, report what they skipped, and emit normalized tables
that round-trip byte-stably through :func:`write_observations`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import DuplicateStationId, MalformedHeader


class Network(str, Enum):
    PIEZOMETER = "piezometer"
    METEO = "meteo"
    HYDRO = "hydro"
    ABSTRACTION_0 = "abstraction_0"
    ABSTRACTION_1 = "abstraction_1"
    ABSTRACTION_2 = "abstraction_2"


AUX_NETWORKS = (
    Network.METEO,
    Network.HYDRO,
    Network.ABSTRACTION_0,
    Network.ABSTRACTION_1,
    Network.ABSTRACTION_2,
)

#: Short column prefixes used in the join table and reports.
NETWORK_KEYS: Mapping[Network, str] = {
    Network.PIEZOMETER: "piezo",
    Network.METEO: "meteo",
    Network.HYDRO: "hydro",
    Network.ABSTRACTION_0: "ab0",
    Network.ABSTRACTION_1: "ab1",
    Network.ABSTRACTION_2: "ab2",
}

#: Static attributes kept as strings even when every value is digit-only.
CATEGORICAL_ATTRS = frozenset(
    {"department_code", "insee_code", "region_code", "aquifer_type", "land_cover_class"}
)

STATION_BASE_COLUMNS = ["station_id", "network", "latitude", "longitude"]
OBSERVATION_COLUMNS = ["station_id", "date", "variable", "value"]


@dataclass(frozen=True)
class StationRecord:
    """One monitoring point with coordinates and static attributes."""

    station_id: str
    network: Network
    latitude: float
    longitude: float
    static_attrs: Mapping[str, object] = field(default_factory=dict)


@dataclass
class LoadReport:
    """Row-level accounting for one loader call."""

    path: str
    rows_read: int = 0
    rows_kept: int = 0
    skipped: Counter = field(default_factory=Counter)
    warnings: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "skipped": dict(self.skipped),
            "warnings": dict(self.warnings),
        }


class StationRegistry:
    """Merged per-network station registry with inventory bookkeeping."""

    def __init__(self) -> None:
        self._by_network: dict[Network, dict[str, StationRecord]] = {
            net: {} for net in Network
        }

    def add(self, record: StationRecord) -> None:
        bucket = self._by_network[record.network]
        if record.station_id in bucket:
            raise DuplicateStationId(
                f"{record.network.value}: duplicate station_id {record.station_id!r}"
            )
        bucket[record.station_id] = record

    def add_all(self, records: list[StationRecord]) -> None:
        for rec in records:
            self.add(rec)

    def stations(self, network: Network) -> list[StationRecord]:
        return list(self._by_network[network].values())

    def ids(self, network: Network) -> set[str]:
        return set(self._by_network[network])

    def get(self, network: Network, station_id: str) -> StationRecord:
        return self._by_network[network][station_id]

    def inventory(self) -> dict[str, int]:
        """Distinct station counts per network."""
        return {net.value: len(bucket) for net, bucket in self._by_network.items()}


def _parse_attr(name: str, raw: str):
    if raw == "":
        return None
    if name in CATEGORICAL_ATTRS:
        return raw
    try:
        return float(raw)
    except ValueError:
        return raw


def load_stations(path, network: Network) -> tuple[list[StationRecord], LoadReport]:
    """Load one network's station CSV into validated records.

    Rows with out-of-range or unparseable coordinates are skipped and
    counted; a duplicated station_id is fatal.
    """
    report = LoadReport(path=str(path))
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    cols = list(df.columns)
    if cols[: len(STATION_BASE_COLUMNS)] != STATION_BASE_COLUMNS:
        raise MalformedHeader(
            f"{path}: expected leading columns {STATION_BASE_COLUMNS}, got {cols[:4]}"
        )
    attr_cols = cols[len(STATION_BASE_COLUMNS):]
    bad = [c for c in attr_cols if not c.startswith("attr:")]
    if bad:
        raise MalformedHeader(f"{path}: non-attr trailing columns {bad}")

    report.rows_read = len(df)
    records: list[StationRecord] = []
    seen: set[str] = set()
    for row in df.to_dict("records"):
        sid = row["station_id"]
        if row["network"] != network.value:
            report.skipped["network_mismatch"] += 1
            continue
        try:
            lat = float(row["latitude"])
            lon = float(row["longitude"])
        except ValueError:
            report.skipped["unparseable_coordinate"] += 1
            continue
        if not (np.isfinite(lat) and np.isfinite(lon) and -90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            report.skipped["out_of_range_coordinate"] += 1
            continue
        if sid in seen:
            raise DuplicateStationId(f"{network.value}: duplicate station_id {sid!r}")
        seen.add(sid)
        attrs = {}
        for col in attr_cols:
            name = col[len("attr:"):]
            value = _parse_attr(name, row[col])
            if value is not None:
                attrs[name] = value
        records.append(StationRecord(sid, network, lat, lon, attrs))
    report.rows_kept = len(records)
    return records, report


def load_observations(
    path,
    network: Network,
    station_ids: set[str],
    window: tuple[str, str] | None = None,
) -> tuple[pd.DataFrame, LoadReport]:
    """Load a long-format observation CSV for one network.

    Returns a frame with columns ``station_id, date, variable, value``
    sorted by (station_id, date, variable). Duplicate keys resolve
    last-wins with a warning count; unknown stations and unparseable
    dates are skipped and counted; sub-daily timestamps truncate to the
    calendar day with a warning.
    """
    report = LoadReport(path=str(path))
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != OBSERVATION_COLUMNS:
        raise MalformedHeader(
            f"{path}: expected columns {OBSERVATION_COLUMNS}, got {list(df.columns)}"
        )
    report.rows_read = len(df)
    if len(df) == 0:
        empty = pd.DataFrame(
            {
                "station_id": pd.Series(dtype=str),
                "date": pd.Series(dtype="datetime64[ns]"),
                "variable": pd.Series(dtype=str),
                "value": pd.Series(dtype=float),
            }
        )
        return empty, report

    known = df["station_id"].isin(station_ids)
    report.skipped["unknown_station_id"] += int((~known).sum())
    df = df[known]

    # Sub-daily timestamps truncate to the calendar day (daily resolution).
    date_part = df["date"].str.slice(0, 10)
    subdaily = (df["date"].str.len() > 10) & df["date"].str.match(r"\d{4}-\d{2}-\d{2}[T ]")
    report.warnings["subdaily_truncated"] += int(subdaily.sum())
    parsed = pd.to_datetime(date_part.where(subdaily, df["date"]), format="%Y-%m-%d", errors="coerce")
    bad_date = parsed.isna()
    report.skipped["unparseable_date"] += int(bad_date.sum())
    df = df[~bad_date].assign(date=parsed[~bad_date])

    if window is not None:
        lo, hi = pd.Timestamp(window[0]), pd.Timestamp(window[1])
        inside = (df["date"] >= lo) & (df["date"] <= hi)
        report.skipped["outside_window"] += int((~inside).sum())
        df = df[inside]

    missing = df["value"] == ""
    value = pd.to_numeric(df["value"].where(~missing, np.nan), errors="coerce")
    unparseable = value.isna() & ~missing
    report.skipped["unparseable_value"] += int(unparseable.sum())
    df = df[~unparseable].assign(value=value[~unparseable])

    dup = df.duplicated(subset=["station_id", "date", "variable"], keep="last")
    report.warnings["duplicate_key"] += int(dup.sum())
    df = df[~dup]

    df = df.sort_values(["station_id", "date", "variable"], kind="mergesort").reset_index(drop=True)
    df = df[["station_id", "date", "variable", "value"]]
    report.rows_kept = len(df)
    return df, report


def widen_observations(obs: pd.DataFrame) -> pd.DataFrame:
    """Pivot a long observation table to (station_id, date) x variable."""
    wide = obs.pivot_table(
        index=["station_id", "date"], columns="variable", values="value", aggfunc="last"
    )
    wide.columns.name = None
    return wide.sort_index()


def drop_sparse_columns(
    wide: pd.DataFrame, threshold: float = 0.5
) -> tuple[pd.DataFrame, dict[str, float]]:
    """Drop columns whose missing fraction exceeds ``threshold``.

    Returns the filtered table and a report mapping each dropped column
    to its missing fraction. A column exactly at the threshold is kept.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if len(wide) == 0:
        return wide, {}
    frac = wide.isna().mean(axis=0)
    dropped = {name: float(f) for name, f in frac.items() if f > threshold}
    return wide.drop(columns=list(dropped)), dropped


def write_stations(records: list[StationRecord], path) -> None:
    """Emit the station CSV contract; attr columns are the sorted union."""
    attr_names = sorted({name for rec in records for name in rec.static_attrs})
    rows = []
    for rec in records:
        row = {
            "station_id": rec.station_id,
            "network": rec.network.value,
            "latitude": repr(rec.latitude),
            "longitude": repr(rec.longitude),
        }
        for name in attr_names:
            value = rec.static_attrs.get(name)
            if value is None:
                row[f"attr:{name}"] = ""
            elif isinstance(value, float):
                row[f"attr:{name}"] = repr(value)
            else:
                row[f"attr:{name}"] = str(value)
        rows.append(row)
    columns = STATION_BASE_COLUMNS + [f"attr:{name}" for name in attr_names]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def write_observations(obs: pd.DataFrame, path) -> None:
    """Emit the long-format observation CSV (empty value = missing)."""
    out = obs.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    out["value"] = out["value"].map(lambda v: "" if pd.isna(v) else repr(float(v)))
    out.to_csv(path, index=False)
