"""Seeded synthetic station networks and daily series.

Generates physically flavored data at desk scale so every pipeline stage
is testable without the real archives. Groundwater follows a linear
reservoir::

    level[t+1] = (1 - rho) * level[t] + alpha * rain[t]
                 - beta * max(temp[t] - theta, 0) + eps[t]

driven by the well's nearest synthetic meteo node, so rainfall raises and
warmth lowers levels and the learned importance ranking is verifiable.
All randomness flows through numpy's PCG64 seeded from one root seed;
outputs are byte-identical for identical configs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from . import ingest
from .ingest import Network, StationRecord

DEPARTMENT_GRID = (4, 3)  # lon cells x lat cells -> 12 departments
AQUIFER_TYPES = ["alluvial", "chalk", "limestone", "sandstone", "basement"]
LAND_COVER = ["agricultural", "forest", "urban", "grassland", "wetland"]
USAGE_TYPES = ["agriculture", "drinking_water", "industry"]

TABLE1_SIZES = {
    "n_wells": 2858,
    "n_meteo": 872,
    "n_hydro": 1418,
    "n_abstraction": (1047, 1487, 1814),
}


@dataclass
class SynthConfig:
    seed: int = 42
    n_wells: int = 200
    n_meteo: int = 50
    n_hydro: int = 60
    n_abstraction: tuple[int, int, int] = (40, 45, 50)
    start: str = "2021-01-01"
    end: str = "2023-12-31"
    lat_range: tuple[float, float] = (43.0, 49.5)
    lon_range: tuple[float, float] = (-1.0, 6.5)
    recharge_gain: float = 0.55
    recession_rate: float = 0.02
    temperature_loss_gain: float = 0.12
    temperature_threshold: float = 12.0
    noise_scale: float = 0.5
    missing_rate: float = 0.02
    n_short_history_wells: int = 0
    sparse_variable: bool = True

    def __post_init__(self) -> None:
        sizes = [self.n_wells, self.n_meteo, self.n_hydro, *self.n_abstraction]
        if any(s < 1 for s in sizes):
            raise ValueError("all network sizes must be >= 1")
        if not 0.0 < self.recession_rate < 1.0:
            raise ValueError("recession_rate must be in (0, 1)")
        if self.noise_scale < 0 or self.missing_rate < 0:
            raise ValueError("noise_scale and missing_rate must be >= 0")

    def dates(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, self.end, freq="D")


@dataclass
class SynthData:
    config: SynthConfig
    stations: dict[Network, list[StationRecord]]
    observations: dict[Network, pd.DataFrame]
    ground_truth: dict

    def write(self, out_dir) -> dict[str, str]:
        """Emit the ingest CSV contracts plus ground_truth.json."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths: dict[str, str] = {}
        for net, records in self.stations.items():
            p = out / f"stations_{net.value}.csv"
            ingest.write_stations(records, p)
            paths[f"stations_{net.value}"] = str(p)
        for net, obs in self.observations.items():
            p = out / f"observations_{net.value}.csv"
            ingest.write_observations(obs, p)
            paths[f"observations_{net.value}"] = str(p)
        gt_path = out / "ground_truth.json"
        with open(gt_path, "w") as fh:
            json.dump(self.ground_truth, fh, indent=2, sort_keys=True)
        paths["ground_truth"] = str(gt_path)
        return paths


def _station_ids(prefix: str, n: int) -> list[str]:
    width = max(3, len(str(n)))
    return [f"{prefix}{i + 1:0{width}d}" for i in range(n)]


def _department(lat, lon, cfg: SynthConfig) -> str:
    nx, ny = DEPARTMENT_GRID
    fx = (lon - cfg.lon_range[0]) / (cfg.lon_range[1] - cfg.lon_range[0])
    fy = (lat - cfg.lat_range[0]) / (cfg.lat_range[1] - cfg.lat_range[0])
    ix = min(int(fx * nx), nx - 1)
    iy = min(int(fy * ny), ny - 1)
    return f"{iy * nx + ix + 1:02d}"


def generate_stations(config: SynthConfig) -> dict[Network, list[StationRecord]]:
    """Station registries for every network (no series; cheap at any scale)."""
    ss = np.random.SeedSequence(config.seed, spawn_key=(0,))
    rng = np.random.Generator(np.random.PCG64(ss))
    stations: dict[Network, list[StationRecord]] = {}

    def draw_coords(n):
        lat = rng.uniform(*config.lat_range, size=n)
        lon = rng.uniform(*config.lon_range, size=n)
        return lat, lon

    lat, lon = draw_coords(config.n_wells)
    wells = []
    for i, sid in enumerate(_station_ids("P", config.n_wells)):
        dept = _department(lat[i], lon[i], config)
        fractions = rng.dirichlet([2.0, 3.0, 2.0, 1.0])
        attrs = {
            "department_code": dept,
            "insee_code": f"{dept}{int(rng.integers(1, 999)):03d}",
            "region_code": f"R{(int(dept) - 1) // 3 + 1}",
            "aquifer_type": AQUIFER_TYPES[int(rng.integers(len(AQUIFER_TYPES)))],
            "land_cover_class": LAND_COVER[int(rng.integers(len(LAND_COVER)))],
            "urban_fraction": round(float(fractions[2]), 4),
            "agricultural_fraction": round(float(fractions[0]), 4),
            "forest_fraction": round(float(fractions[1]), 4),
            "screen_length_m": round(float(rng.uniform(2.0, 25.0)), 2),
        }
        # a few wells miss their depth record, exercising median imputation
        if rng.random() >= 0.03:
            attrs["investigation_depth"] = round(float(rng.uniform(5.0, 80.0)), 2)
        wells.append(StationRecord(sid, Network.PIEZOMETER, float(lat[i]), float(lon[i]), attrs))
    stations[Network.PIEZOMETER] = wells

    lat, lon = draw_coords(config.n_meteo)
    stations[Network.METEO] = [
        StationRecord(sid, Network.METEO, float(lat[i]), float(lon[i]), {})
        for i, sid in enumerate(_station_ids("M", config.n_meteo))
    ]

    lat, lon = draw_coords(config.n_hydro)
    stations[Network.HYDRO] = [
        StationRecord(
            sid, Network.HYDRO, float(lat[i]), float(lon[i]),
            {"catchment_area_km2": round(float(rng.uniform(50.0, 2000.0)), 1)},
        )
        for i, sid in enumerate(_station_ids("H", config.n_hydro))
    ]

    ab_nets = (Network.ABSTRACTION_0, Network.ABSTRACTION_1, Network.ABSTRACTION_2)
    for k, net in enumerate(ab_nets):
        n = config.n_abstraction[k]
        lat, lon = draw_coords(n)
        stations[net] = [
            StationRecord(
                sid, net, float(lat[i]), float(lon[i]),
                {"usage_type": USAGE_TYPES[int(rng.integers(len(USAGE_TYPES)))]},
            )
            for i, sid in enumerate(_station_ids(f"A{k}_", n))
        ]
    return stations


def _nearest_meteo(record: StationRecord, meteo: list[StationRecord]) -> str:
    """Generator-side nearest meteo node (brute force on the unit sphere)."""
    from .spatial import chord_sq, unit_vectors

    v = unit_vectors(record.latitude, record.longitude)
    vm = unit_vectors([m.latitude for m in meteo], [m.longitude for m in meteo])
    c2 = chord_sq(v, vm)
    best = np.flatnonzero(c2 == c2.min())
    ids = np.asarray([m.station_id for m in meteo], dtype=object)
    return str(sorted(ids[best])[0])


def _ar1(rng, n, phi, sigma):
    eps = rng.normal(0.0, sigma, size=n)
    return lfilter([1.0], [1.0, -phi], eps)


def _weather(rng, dates: pd.DatetimeIndex, lat: float) -> dict[str, np.ndarray]:
    n = len(dates)
    doy = dates.dayofyear.to_numpy(dtype=np.float64)
    year_angle = 2.0 * np.pi * doy / 365.25

    temp = (
        12.0
        - 0.6 * (lat - 46.0)
        + 8.0 * np.sin(2.0 * np.pi * (doy - 105.0) / 365.25)
        + _ar1(rng, n, 0.7, 1.5)
        + rng.normal(0.0, 0.8)
    )
    wet_prob = np.clip(0.42 + 0.10 * np.cos(year_angle), 0.05, 0.95)
    wet = rng.random(n) < wet_prob
    amounts = rng.exponential(1.0, size=n) * (4.0 + 1.0 * np.cos(year_angle))
    rain = np.where(wet, amounts, 0.0)
    solar = np.maximum(0.0, 160.0 + 120.0 * np.sin(2.0 * np.pi * (doy - 81.0) / 365.25)
                       + rng.normal(0.0, 18.0, size=n))
    pet = np.maximum(0.0, 0.012 * solar + 0.12 * np.maximum(temp, 0.0) - 1.2
                     + rng.normal(0.0, 0.2, size=n))
    return {"precipitation_mm": rain, "temperature_c": temp,
            "pet_mm": pet, "solar_radiation": solar}


def simulate_levels(
    rain: np.ndarray,
    temp: np.ndarray,
    level0: float,
    alpha: float,
    beta: float,
    rho: float,
    theta: float,
    noise: np.ndarray,
) -> np.ndarray:
    """Run the linear-reservoir recurrence; returns one level per day."""
    forcing = alpha * rain - beta * np.maximum(temp - theta, 0.0) + noise
    x = np.concatenate([[level0], forcing[:-1]])
    return lfilter([1.0], [1.0, -(1.0 - rho)], x)


def _long_frame(station_id: str, dates, values: dict[str, np.ndarray]) -> pd.DataFrame:
    parts = []
    for variable, series in values.items():
        parts.append(
            pd.DataFrame(
                {
                    "station_id": station_id,
                    "date": dates,
                    "variable": variable,
                    "value": series,
                }
            )
        )
    return pd.concat(parts, ignore_index=True)


def generate(config: SynthConfig) -> SynthData:
    """Generate stations, observations, and the ground-truth sidecar."""
    stations = generate_stations(config)
    dates = config.dates()
    n_days = len(dates)
    root = np.random.SeedSequence(config.seed)

    meteo = stations[Network.METEO]
    weather: dict[str, dict[str, np.ndarray]] = {}
    frames = []
    for i, st in enumerate(meteo):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(1, i))))
        series = _weather(rng, dates, st.latitude)
        weather[st.station_id] = series
        emit = dict(series)
        if config.sparse_variable:
            wind = rng.uniform(0.0, 12.0, size=n_days)
            wind[rng.random(n_days) < 0.7] = np.nan
            emit["wind_speed"] = wind
        frames.append(_long_frame(st.station_id, dates, emit))
    obs_meteo = pd.concat(frames, ignore_index=True)

    frames = []
    for i, st in enumerate(stations[Network.HYDRO]):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(2, i))))
        node = _nearest_meteo(st, meteo)
        rain = weather[node]["precipitation_mm"]
        area = float(st.static_attrs.get("catchment_area_km2", 500.0))
        storage = lfilter([1.0], [1.0, -(1.0 - 0.08)], rain)
        discharge = 0.5 + area / 1000.0 * 0.06 * storage + rng.lognormal(0.0, 0.08, n_days) - 1.0
        discharge = np.maximum(discharge, 0.05)
        stage = 0.3 * np.power(discharge, 0.6) + rng.normal(0.0, 0.02, n_days)
        frames.append(_long_frame(st.station_id, dates,
                                  {"discharge_m3s": discharge, "stage_m": stage}))
    obs_hydro = pd.concat(frames, ignore_index=True)

    obs_abstraction: dict[Network, pd.DataFrame] = {}
    ab_nets = (Network.ABSTRACTION_0, Network.ABSTRACTION_1, Network.ABSTRACTION_2)
    weekend = np.asarray(dates.dayofweek >= 5)
    doy = dates.dayofyear.to_numpy(dtype=np.float64)
    seasonal_demand = 1.0 + 0.6 * np.maximum(0.0, np.sin(2.0 * np.pi * (doy - 140.0) / 365.25))
    for k, net in enumerate(ab_nets):
        frames = []
        for i, st in enumerate(stations[net]):
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence(config.seed, spawn_key=(3 + k, i))))
            base = float(rng.lognormal(4.0, 0.6))
            factor = np.where(weekend, 0.75, 1.0)
            volume = base * seasonal_demand * factor * rng.lognormal(0.0, 0.25, n_days)
            frames.append(_long_frame(st.station_id, dates, {"abstraction_volume": volume}))
        obs_abstraction[net] = pd.concat(frames, ignore_index=True)

    wells = stations[Network.PIEZOMETER]
    truth_wells = {}
    frames = []
    for i, st in enumerate(wells):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(6, i))))
        node = _nearest_meteo(st, meteo)
        rain = weather[node]["precipitation_mm"]
        temp = weather[node]["temperature_c"]
        alpha = config.recharge_gain * rng.uniform(0.7, 1.3)
        beta = config.temperature_loss_gain * rng.uniform(0.7, 1.3)
        rho = float(np.clip(config.recession_rate * rng.uniform(0.6, 1.6), 0.005, 0.2))
        theta = config.temperature_threshold + rng.normal(0.0, 1.0)
        sigma = config.noise_scale * rng.uniform(0.5, 1.5)
        excess = np.maximum(temp - theta, 0.0)
        equilibrium = (alpha * rain.mean() - beta * excess.mean()) / rho
        level0 = equilibrium + rng.normal(0.0, 2.0)
        noise = rng.normal(0.0, sigma, size=n_days)
        levels = simulate_levels(rain, temp, level0, alpha, beta, rho, theta, noise)

        well_dates = dates
        well_levels = levels
        if i < config.n_short_history_wells:
            well_dates = dates[-120:]
            well_levels = levels[-120:]
        frames.append(_long_frame(st.station_id, well_dates, {"groundwater_level": well_levels}))
        truth_wells[st.station_id] = {
            "meteo_id": node,
            "alpha": alpha,
            "beta": beta,
            "rho": rho,
            "theta": theta,
            "noise_scale": sigma,
            "level0": level0,
        }
    obs_piezo = pd.concat(frames, ignore_index=True)

    observations = {
        Network.PIEZOMETER: obs_piezo,
        Network.METEO: obs_meteo,
        Network.HYDRO: obs_hydro,
        **obs_abstraction,
    }

    if config.missing_rate > 0:
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(9,))))
        for net, obs in observations.items():
            mask = rng.random(len(obs)) < config.missing_rate
            obs.loc[mask, "value"] = np.nan

    for obs in observations.values():
        obs.sort_values(["station_id", "date", "variable"], kind="mergesort",
                        inplace=True, ignore_index=True)

    ground_truth = {
        "rule": "level[t+1] = (1-rho)*level[t] + alpha*rain[t] - beta*max(temp[t]-theta,0) + eps[t]",
        "wells": truth_wells,
        "config": {**asdict(config), "n_abstraction": list(config.n_abstraction),
                   "lat_range": list(config.lat_range), "lon_range": list(config.lon_range)},
    }
    return SynthData(config, stations, observations, ground_truth)
