"""Design-matrix assembly: fusion, calendar/rolling/interaction features,
static well attributes, and train-median imputation.

The default schema is a versioned manifest of 135 predictors plus the
categorical target. Its accounting by source network is fixed:

* meteo (39): 4 daily variables (precipitation, temperature, PET, solar
  radiation), each as the raw daily value plus rolling means and sums
  over 7/14/30/90 days, plus 3 rain-temperature interaction products.
* hydro (26): discharge and stage, each raw plus rolling mean/min/max
  over the 4 windows (extremes track low-flow and flood conditions).
* abstraction (45): per network, raw volume plus rolling sums, means and
  maxima over the 4 windows and minima over 30/90 days only (short-window
  minima of intermittent withdrawal series are almost always zero).
* static (25): 5 calendar columns, the 5 join distances, and 15 site
  attributes including department aggregates of investigation depth.

Alternate manifests are legal via the ``windows``/``interactions`` knobs;
the counts above hold for the default configuration only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import SchemaMismatch, UnsortedSeries
from .ingest import AUX_NETWORKS, NETWORK_KEYS, Network, StationRecord

SCHEMA_VERSION = 1
DEFAULT_WINDOWS = (7, 14, 30, 90)
TARGET_COLUMN = "category"
SENTINEL = "nan"

#: (variable, column stem, rolling aggregations) per source network.
METEO_VARS = [
    ("precipitation_mm", "rainfall", ("mean", "sum")),
    ("temperature_c", "temp", ("mean", "sum")),
    ("pet_mm", "pet", ("mean", "sum")),
    ("solar_radiation", "solar", ("mean", "sum")),
]
HYDRO_VARS = [
    ("discharge_m3s", "discharge", ("mean", "min", "max")),
    ("stage_m", "stage", ("mean", "min", "max")),
]
ABSTRACTION_AGGS = ("sum", "mean", "max")
ABSTRACTION_MIN_WINDOWS = (30, 90)

SITE_NUMERIC = [
    "latitude",
    "longitude",
    "investigation_depth",
    "department_mean_investigation_depth",
    "department_well_count",
    "urban_fraction",
    "agricultural_fraction",
    "forest_fraction",
    "screen_length_m",
]
SITE_CATEGORICAL = [
    "department_code",
    "insee_code",
    "well_id",
    "aquifer_type",
    "land_cover_class",
    "region_code",
]
CALENDAR_NUMERIC = ["year", "month", "day_of_year", "day_of_week"]
SEASONS = {12: "DJF", 1: "DJF", 2: "DJF", 3: "MAM", 4: "MAM", 5: "MAM",
           6: "JJA", 7: "JJA", 8: "JJA", 9: "SON", 10: "SON", 11: "SON"}


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    block: str   # structural kind: meteo|hydro|abstraction|static|calendar|rolling|interaction
    source: str  # accounting block: meteo|hydro|abstraction|static
    kind: str    # numeric|categorical


@dataclass
class FeatureSchema:
    """Ordered predictor manifest plus the target column name."""

    columns: list[FeatureColumn] = field(default_factory=list)
    target: str = TARGET_COLUMN
    version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise SchemaMismatch("duplicate column names in schema")
        if self.target in names:
            raise SchemaMismatch("target column listed among predictors")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def numeric(self) -> list[str]:
        return [c.name for c in self.columns if c.kind == "numeric"]

    @property
    def categorical(self) -> list[str]:
        return [c.name for c in self.columns if c.kind == "categorical"]

    def source_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.columns:
            counts[c.source] = counts.get(c.source, 0) + 1
        return counts

    def fingerprint(self) -> str:
        payload = json.dumps(
            [[c.name, c.kind] for c in self.columns] + [[self.target, "target"]],
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "target": self.target,
            "columns": [
                {"name": c.name, "block": c.block, "provenance": c.source, "kind": c.kind}
                for c in self.columns
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FeatureSchema":
        cols = [
            FeatureColumn(c["name"], c["block"], c["provenance"], c["kind"])
            for c in payload["columns"]
        ]
        return cls(columns=cols, target=payload["target"], version=payload["version"])


def default_schema(
    windows: tuple[int, ...] = DEFAULT_WINDOWS, interactions: bool = True
) -> FeatureSchema:
    """Build the versioned default manifest (135 predictors)."""
    cols: list[FeatureColumn] = []

    for var, stem, aggs in METEO_VARS:
        cols.append(FeatureColumn(var, "meteo", "meteo", "numeric"))
        for agg in aggs:
            for w in windows:
                cols.append(FeatureColumn(f"{stem}_{w}d_{agg}", "rolling", "meteo", "numeric"))
    if interactions:
        for name in interaction_names():
            cols.append(FeatureColumn(name, "interaction", "meteo", "numeric"))

    for var, stem, aggs in HYDRO_VARS:
        cols.append(FeatureColumn(var, "hydro", "hydro", "numeric"))
        for agg in aggs:
            for w in windows:
                cols.append(FeatureColumn(f"{stem}_{w}d_{agg}", "rolling", "hydro", "numeric"))

    for net in AUX_NETWORKS[1:]:
        key = NETWORK_KEYS[net]
        if not key.startswith("ab"):
            continue
        cols.append(FeatureColumn(f"{key}_volume", "abstraction", "abstraction", "numeric"))
        for agg in ABSTRACTION_AGGS:
            for w in windows:
                cols.append(
                    FeatureColumn(f"{key}_volume_{w}d_{agg}", "rolling", "abstraction", "numeric")
                )
        for w in ABSTRACTION_MIN_WINDOWS:
            cols.append(
                FeatureColumn(f"{key}_volume_{w}d_min", "rolling", "abstraction", "numeric")
            )

    for name in CALENDAR_NUMERIC:
        cols.append(FeatureColumn(name, "calendar", "static", "numeric"))
    cols.append(FeatureColumn("season", "calendar", "static", "categorical"))
    for net in AUX_NETWORKS:
        cols.append(
            FeatureColumn(f"{NETWORK_KEYS[net]}_distance_km", "static", "static", "numeric")
        )
    for name in SITE_NUMERIC:
        cols.append(FeatureColumn(name, "static", "static", "numeric"))
    for name in SITE_CATEGORICAL:
        cols.append(FeatureColumn(name, "static", "static", "categorical"))

    return FeatureSchema(columns=cols)


def interaction_names() -> list[str]:
    return ["rain7_x_temp7", "rain14_x_temp14", "rain7_x_rain14_x_temp14"]


def calendar_features(dates) -> pd.DataFrame:
    """Calendar columns for a date vector: year, month, day_of_year,
    day_of_week (Monday = 0), and climatological season (DJF/MAM/JJA/SON)."""
    idx = pd.DatetimeIndex(dates)
    return pd.DataFrame(
        {
            "year": idx.year.astype(np.int64),
            "month": idx.month.astype(np.int64),
            "day_of_year": idx.dayofyear.astype(np.int64),
            "day_of_week": idx.dayofweek.astype(np.int64),
            "season": [SEASONS[m] for m in idx.month],
        },
        index=idx,
    )


def rolling_features(series: pd.Series, windows, agg: str) -> pd.DataFrame:
    """Trailing-window aggregates of one daily series.

    The value at date t aggregates days t-w+1 .. t; if fewer than w
    non-missing days fall in the window the output is missing (imputed
    downstream). The series must be sorted by date.
    """
    if not series.index.is_monotonic_increasing:
        raise UnsortedSeries("rolling input must be sorted by date")
    if len(series) == 0:
        return pd.DataFrame(index=series.index)
    daily = series.reindex(pd.date_range(series.index.min(), series.index.max(), freq="D"))
    out = {}
    for w in windows:
        out[f"{int(w)}d_{agg}"] = daily.rolling(int(w), min_periods=int(w)).agg(agg)
    return pd.DataFrame(out)


def interaction_features(frame: pd.DataFrame) -> pd.DataFrame:
    """Products of short-window rain totals and temperature means.

    rainN maps to rainfall_Nd_sum and tempN to temp_Nd_mean; a missing
    constituent makes the product missing.
    """
    rain7 = frame["rainfall_7d_sum"]
    rain14 = frame["rainfall_14d_sum"]
    temp7 = frame["temp_7d_mean"]
    temp14 = frame["temp_14d_mean"]
    return pd.DataFrame(
        {
            "rain7_x_temp7": rain7 * temp7,
            "rain14_x_temp14": rain14 * temp14,
            "rain7_x_rain14_x_temp14": rain7 * rain14 * temp14,
        },
        index=frame.index,
    )


def static_features(piezometers: list[StationRecord]) -> pd.DataFrame:
    """Per-well static columns, including department-level aggregates of
    investigation depth and pass-through registry attributes."""
    rows = []
    for st in piezometers:
        attrs = st.static_attrs
        row = {"well_id": st.station_id, "latitude": st.latitude, "longitude": st.longitude}
        for name in SITE_NUMERIC:
            if name in ("latitude", "longitude"):
                continue
            if name.startswith("department_"):
                continue
            row[name] = attrs.get(name, np.nan)
        for name in SITE_CATEGORICAL:
            if name == "well_id":
                continue
            row[name] = attrs.get(name, None)
        rows.append(row)
    frame = pd.DataFrame(rows)
    for name in ("investigation_depth", "urban_fraction", "agricultural_fraction",
                 "forest_fraction", "screen_length_m"):
        frame[name] = pd.to_numeric(frame[name], errors="coerce")

    dept = frame.groupby("department_code", dropna=False)
    frame["department_mean_investigation_depth"] = dept["investigation_depth"].transform("mean")
    frame["department_well_count"] = dept["well_id"].transform("count").astype(np.int64)
    return frame.set_index("well_id", drop=False)


def _network_feature_frame(
    wide: pd.DataFrame, var_specs, windows, prefix: str | None = None,
    with_interactions: bool = False,
) -> pd.DataFrame:
    """Raw + rolling (+ interaction) columns for every station in one network.

    ``wide`` is indexed by (station_id, date) with one column per variable.
    """
    parts = []
    for station_id, group in wide.groupby(level="station_id", sort=True):
        series_frame = group.droplevel("station_id")
        block = {}
        for var, stem, aggs in var_specs:
            out_raw = f"{prefix}_volume" if prefix else var
            if var in series_frame.columns:
                daily = series_frame[var]
            else:
                daily = pd.Series(np.nan, index=series_frame.index)
            block[out_raw] = daily
            stem_name = f"{prefix}_volume" if prefix else stem
            for agg in aggs:
                rolled = rolling_features(daily, windows, agg)
                for col in rolled.columns:
                    block[f"{stem_name}_{col}"] = rolled[col]
            if prefix:
                for w in ABSTRACTION_MIN_WINDOWS:
                    rolled = rolling_features(daily, [w], "min")
                    block[f"{stem_name}_{w}d_min"] = rolled[f"{w}d_min"]
        part = pd.DataFrame(block)
        part.index.name = "date"
        part["station_id"] = station_id
        parts.append(part.reset_index())
    frame = pd.concat(parts, ignore_index=True)
    if with_interactions:
        inter = interaction_features(frame)
        frame = pd.concat([frame, inter], axis=1)
    return frame


def assemble(
    join: pd.DataFrame,
    observations: dict[Network, pd.DataFrame],
    labels: pd.DataFrame,
    piezometers: list[StationRecord],
    schema: FeatureSchema,
    windows=DEFAULT_WINDOWS,
) -> pd.DataFrame:
    """Assemble the per-(well, date) design matrix.

    One row per labeled (well, date); auxiliary variables come from the
    matched station's same-date record. Output columns are well_id, date,
    the schema predictors (well_id serves as both key and categorical
    predictor), then the target. Deterministic and invariant to input
    row order.
    """
    base = labels[["well_id", "date", TARGET_COLUMN]].copy()

    link = join.rename(columns={"piezometer_id": "well_id"})
    link = link.rename(
        columns={f"{NETWORK_KEYS[n]}_km": f"{NETWORK_KEYS[n]}_distance_km" for n in AUX_NETWORKS}
    )
    base = base.merge(link, on="well_id", how="left", validate="many_to_one")

    def merge_network(base, net, var_specs, prefix=None, with_interactions=False):
        key = NETWORK_KEYS[net]
        wide = observations.get(net)
        if wide is None or len(wide) == 0:
            return base
        frame = _network_feature_frame(
            wide, var_specs, windows, prefix=prefix, with_interactions=with_interactions
        )
        frame = frame.rename(columns={"station_id": f"{key}_id"})
        return base.merge(frame, on=[f"{key}_id", "date"], how="left")

    base = merge_network(base, Network.METEO, METEO_VARS, with_interactions=True)
    base = merge_network(base, Network.HYDRO, HYDRO_VARS)
    for net in (Network.ABSTRACTION_0, Network.ABSTRACTION_1, Network.ABSTRACTION_2):
        base = merge_network(
            base, net, [("abstraction_volume", None, ABSTRACTION_AGGS)], prefix=NETWORK_KEYS[net]
        )

    cal = calendar_features(base["date"].unique())
    base = base.merge(cal, left_on="date", right_index=True, how="left")

    static = static_features(piezometers).drop(columns=["well_id"])
    base = base.merge(static, left_on="well_id", right_index=True, how="left")

    missing_cols = [name for name in schema.names if name not in base.columns]
    if missing_cols:
        raise SchemaMismatch(f"assembled table lacks schema columns: {missing_cols[:8]}")

    ordered = ["well_id", "date"] + [n for n in schema.names if n not in ("well_id",)]
    out = base[ordered + [TARGET_COLUMN]].copy()
    out = out.sort_values(["well_id", "date"], kind="mergesort").reset_index(drop=True)
    return out


@dataclass
class ImputationPlan:
    """Frozen imputation statistics fitted on training rows only."""

    medians: dict[str, float]
    categorical: list[str]
    dropped: list[str]
    sentinel: str = SENTINEL

    def to_json(self) -> dict:
        return {
            "medians": self.medians,
            "categorical": self.categorical,
            "dropped": self.dropped,
            "sentinel": self.sentinel,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ImputationPlan":
        return cls(
            medians={k: float(v) for k, v in payload["medians"].items()},
            categorical=list(payload["categorical"]),
            dropped=list(payload["dropped"]),
            sentinel=payload["sentinel"],
        )


def fit_imputation(train: pd.DataFrame, schema: FeatureSchema) -> ImputationPlan:
    """Median per numeric column from training rows; all-missing columns
    are dropped with a warning entry instead of an undefined median."""
    medians: dict[str, float] = {}
    dropped: list[str] = []
    for name in schema.numeric:
        col = pd.to_numeric(train[name], errors="coerce")
        med = col.median()
        if pd.isna(med):
            dropped.append(name)
        else:
            medians[name] = float(med)
    return ImputationPlan(medians=medians, categorical=list(schema.categorical), dropped=dropped)


def apply_imputation(rows: pd.DataFrame, plan: ImputationPlan) -> pd.DataFrame:
    """Fill numeric gaps with the stored medians and categorical gaps with
    the sentinel token; returns a copy with no missing cells."""
    out = rows.copy()
    for name, med in plan.medians.items():
        col = pd.to_numeric(out[name], errors="coerce")
        out[name] = col.fillna(med).astype(np.float64)
    for name in plan.categorical:
        col = out[name]
        filled = col.where(~pd.isna(col), plan.sentinel)
        out[name] = filled.astype(str)
    if plan.dropped:
        out = out.drop(columns=[c for c in plan.dropped if c in out.columns])
    return out


def write_features(table: pd.DataFrame, path) -> None:
    out = table.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    out.to_csv(path, index=False)


def read_features(path, schema: FeatureSchema) -> pd.DataFrame:
    dtypes = {name: str for name in schema.categorical}
    dtypes["well_id"] = str
    df = pd.read_csv(path, dtype=dtypes, keep_default_na=True)
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d")
    for name in schema.numeric:
        if name in df.columns:
            df[name] = pd.to_numeric(df[name], errors="coerce")
    return df


def write_schema(schema: FeatureSchema, path) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_json(), fh, indent=2)


def read_schema(path) -> FeatureSchema:
    with open(path) as fh:
        return FeatureSchema.from_json(json.load(fh))
