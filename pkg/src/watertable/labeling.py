"""Per-well quantile labeling of groundwater levels.

Each well's continuous level history is cut into five ordered categories
at its own 20/40/60/80th percentiles, so wells with very different mean
levels and variability share one relative scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import pandas as pd

from .errors import InsufficientHistory, MissingThresholds


class LevelCategory(IntEnum):
    """Ordered groundwater state categories (VeryLow < ... < VeryHigh)."""

    VERY_LOW = 0
    LOW = 1
    AVERAGE = 2
    HIGH = 3
    VERY_HIGH = 4


CATEGORY_NAMES = ["VeryLow", "Low", "Average", "High", "VeryHigh"]
CATEGORY_BY_NAME = {name: LevelCategory(i) for i, name in enumerate(CATEGORY_NAMES)}

DEFAULT_MIN_HISTORY = 365


@dataclass(frozen=True)
class CategoryThresholds:
    """Percentile cut points fitted from one well's history."""

    well_id: str
    q20: float
    q40: float
    q60: float
    q80: float
    n_history: int


def fit_thresholds(
    history, well_id: str, min_history: int = DEFAULT_MIN_HISTORY
) -> CategoryThresholds:
    """Fit the 20/40/60/80th percentiles of one well's level history.

    Percentiles interpolate linearly between closest order statistics.
    Raises InsufficientHistory when fewer than ``min_history`` non-missing
    observations remain.
    """
    values = np.asarray(history, dtype=np.float64)
    values = values[np.isfinite(values)]
    if len(values) < min_history:
        raise InsufficientHistory(
            f"well {well_id!r}: {len(values)} observations < min_history {min_history}"
        )
    q20, q40, q60, q80 = np.percentile(values, [20.0, 40.0, 60.0, 80.0], method="linear")
    return CategoryThresholds(well_id, float(q20), float(q40), float(q60), float(q80), len(values))


def categorize(level: float, th: CategoryThresholds) -> LevelCategory:
    """Map one level to its category: VeryLow iff level <= q20, then
    half-open bands up to VeryHigh iff level > q80."""
    return LevelCategory(int(categorize_many(np.asarray([level]), th)[0]))


def categorize_many(levels, th: CategoryThresholds) -> np.ndarray:
    """Vectorized categorize; returns int8 category ordinals."""
    x = np.asarray(levels, dtype=np.float64)
    idx = (
        (x > th.q20).astype(np.int8)
        + (x > th.q40).astype(np.int8)
        + (x > th.q60).astype(np.int8)
        + (x > th.q80).astype(np.int8)
    )
    return idx


def fit_all_thresholds(
    levels: pd.DataFrame,
    min_history: int = DEFAULT_MIN_HISTORY,
    fit_window: tuple | None = None,
) -> tuple[dict[str, CategoryThresholds], dict[str, str]]:
    """Fit thresholds for every well in a (well_id, date, level) frame.

    ``fit_window`` restricts the history used for fitting (training window
    only; thresholds are frozen afterwards). Wells with too little history
    are excluded and reported, not fatal.
    """
    frame = levels
    if fit_window is not None:
        lo, hi = pd.Timestamp(fit_window[0]), pd.Timestamp(fit_window[1])
        frame = frame[(frame["date"] >= lo) & (frame["date"] <= hi)]
    thresholds: dict[str, CategoryThresholds] = {}
    excluded: dict[str, str] = {}
    for well_id, group in frame.groupby("well_id", sort=True):
        try:
            thresholds[str(well_id)] = fit_thresholds(
                group["level"].to_numpy(), str(well_id), min_history
            )
        except InsufficientHistory as exc:
            excluded[str(well_id)] = str(exc)
    return thresholds, excluded


def label_table(
    levels: pd.DataFrame, thresholds: dict[str, CategoryThresholds]
) -> pd.DataFrame:
    """Label every (well, date, level) row with its category.

    Requires thresholds for every well present; callers drop excluded
    wells first. Returns columns well_id, date, level, category (ordinal).
    """
    missing = set(levels["well_id"].unique()) - set(thresholds)
    if missing:
        raise MissingThresholds(f"no thresholds for wells: {sorted(missing)[:5]}")
    parts = []
    for well_id, group in levels.groupby("well_id", sort=True):
        cats = categorize_many(group["level"].to_numpy(), thresholds[str(well_id)])
        part = group[["well_id", "date", "level"]].copy()
        part["category"] = cats
        parts.append(part)
    out = pd.concat(parts, ignore_index=True)
    return out.sort_values(["well_id", "date"], kind="mergesort").reset_index(drop=True)


def daily_category_shares(labeled: pd.DataFrame) -> pd.DataFrame:
    """Per-date fraction of wells in each category (rows sum to 1)."""
    counts = (
        labeled.groupby(["date", "category"]).size().unstack(fill_value=0)
    )
    counts = counts.reindex(columns=range(len(CATEGORY_NAMES)), fill_value=0)
    counts.columns = CATEGORY_NAMES
    shares = counts.div(counts.sum(axis=1), axis=0)
    return shares


def write_thresholds(thresholds: dict[str, CategoryThresholds], path) -> None:
    rows = [
        {
            "well_id": th.well_id,
            "q20": repr(th.q20),
            "q40": repr(th.q40),
            "q60": repr(th.q60),
            "q80": repr(th.q80),
            "n_history": th.n_history,
        }
        for th in (thresholds[k] for k in sorted(thresholds))
    ]
    pd.DataFrame(rows, columns=["well_id", "q20", "q40", "q60", "q80", "n_history"]).to_csv(
        path, index=False
    )


def read_thresholds(path) -> dict[str, CategoryThresholds]:
    df = pd.read_csv(path, dtype={"well_id": str})
    return {
        str(r.well_id): CategoryThresholds(
            str(r.well_id), float(r.q20), float(r.q40), float(r.q60), float(r.q80), int(r.n_history)
        )
        for r in df.itertuples(index=False)
    }


def write_labels(labeled: pd.DataFrame, path) -> None:
    out = labeled.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    out["level"] = out["level"].map(lambda v: repr(float(v)))
    out["category"] = [CATEGORY_NAMES[int(c)] for c in out["category"]]
    out.to_csv(path, index=False)


def read_labels(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"well_id": str, "category": str})
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d")
    df["category"] = [int(CATEGORY_BY_NAME[c]) for c in df["category"]]
    df["level"] = df["level"].astype(float)
    return df
