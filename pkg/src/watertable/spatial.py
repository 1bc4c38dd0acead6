"""Nearest-neighbor matching between monitoring networks.

Each piezometer is linked to its single nearest station (k = 1) in every
auxiliary network by great-circle distance. Candidate search runs on a
k-d tree over unit-sphere embeddings; final selection compares squared
chord lengths, which involve only exactly-rounded arithmetic and are
therefore bit-identical to a brute-force scan. Ties break on the
lexicographically smallest station_id.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from .errors import EmptyNetwork
from .ingest import AUX_NETWORKS, NETWORK_KEYS, Network, StationRecord

EARTH_RADIUS_KM = 6371.0088

#: Relative/absolute slack on the pruning radius so the candidate set
#: provably contains every station whose great-circle distance could tie
#: the minimum under floating-point rounding.
_PRUNE_REL = 1e-6
_PRUNE_ABS = 1e-9

JOIN_COLUMNS = ["piezometer_id"]
for _net in AUX_NETWORKS:
    JOIN_COLUMNS += [f"{NETWORK_KEYS[_net]}_id", f"{NETWORK_KEYS[_net]}_km"]


class GeoPoint(NamedTuple):
    latitude: float
    longitude: float


def unit_vectors(lat_deg, lon_deg) -> np.ndarray:
    """Embed latitude/longitude (degrees) on the unit sphere."""
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lon_deg, dtype=np.float64))
    cos_lat = np.cos(lat)
    return np.stack([cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)], axis=-1)


def chord_sq(v_query: np.ndarray, v_points: np.ndarray) -> np.ndarray:
    """Squared chord length between one embedded query and many points."""
    d = v_points - v_query
    return d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2]


def chord_sq_to_km(c2) -> np.ndarray:
    """Convert squared chord length to great-circle distance in km."""
    half = np.sqrt(np.clip(np.asarray(c2, dtype=np.float64), 0.0, 4.0)) / 2.0
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(half, 1.0))


def haversine_km(a, b) -> float:
    """Great-circle (haversine) distance in km between two (lat, lon) points.

    Symmetric, non-negative, zero iff the coordinates coincide; Earth
    radius fixed at 6371.0088 km so results are bit-reproducible.
    """
    va = unit_vectors(a[0], a[1])
    vb = unit_vectors(b[0], b[1])
    return float(chord_sq_to_km(chord_sq(va, vb)))


class SpatialIndex:
    """Immutable nearest-station index over one network.

    Queries return exactly what a brute-force scan over the same stations
    would: the k-d tree only prunes candidates, and the winner is chosen
    by (squared chord, station_id) among them.
    """

    def __init__(self, stations: Sequence[StationRecord]):
        if len(stations) == 0:
            raise EmptyNetwork("cannot index an empty station list")
        order = np.argsort([s.station_id for s in stations], kind="stable")
        self.ids = np.asarray([stations[i].station_id for i in order], dtype=object)
        self.lat = np.asarray([stations[i].latitude for i in order], dtype=np.float64)
        self.lon = np.asarray([stations[i].longitude for i in order], dtype=np.float64)
        self.vectors = unit_vectors(self.lat, self.lon)
        self._tree = cKDTree(self.vectors)

    def __len__(self) -> int:
        return len(self.ids)

    def nearest(self, lat: float, lon: float) -> tuple[str, float]:
        """Nearest station_id and its great-circle distance in km."""
        idx, c2 = self.query_many(np.asarray([lat]), np.asarray([lon]))
        return str(self.ids[idx[0]]), float(chord_sq_to_km(c2[0]))

    def query_many(self, lat, lon) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized nearest query; returns (indices, squared chords)."""
        q = unit_vectors(lat, lon)
        d0, _ = self._tree.query(q, k=1)
        radius = d0 * (1.0 + _PRUNE_REL) + _PRUNE_ABS
        candidate_lists = self._tree.query_ball_point(q, radius)
        out_idx = np.empty(len(q), dtype=np.int64)
        out_c2 = np.empty(len(q), dtype=np.float64)
        for i, cand in enumerate(candidate_lists):
            cand = np.asarray(cand, dtype=np.int64)
            c2 = chord_sq(q[i], self.vectors[cand])
            best = np.flatnonzero(c2 == c2.min())
            # ids are pre-sorted, so the smallest index among the tied
            # candidates is the lexicographically smallest station_id
            winner = cand[best].min()
            out_idx[i] = winner
            out_c2[i] = chord_sq(q[i], self.vectors[winner])
        return out_idx, out_c2


def build_index(stations: Sequence[StationRecord]) -> SpatialIndex:
    return SpatialIndex(stations)


def match_networks(
    piezometers: Sequence[StationRecord],
    networks: dict[Network, Sequence[StationRecord]],
) -> pd.DataFrame:
    """Build the join table mapping each piezometer to one station per network.

    Raises EmptyNetwork naming the offending network if any input is empty.
    """
    if len(piezometers) == 0:
        raise EmptyNetwork("piezometer network is empty")
    for net in AUX_NETWORKS:
        if len(networks.get(net, ())) == 0:
            raise EmptyNetwork(f"{net.value} network is empty")

    piezo_ids = [s.station_id for s in piezometers]
    lat = np.asarray([s.latitude for s in piezometers])
    lon = np.asarray([s.longitude for s in piezometers])

    data: dict[str, object] = {"piezometer_id": piezo_ids}
    for net in AUX_NETWORKS:
        index = SpatialIndex(networks[net])
        idx, c2 = index.query_many(lat, lon)
        key = NETWORK_KEYS[net]
        data[f"{key}_id"] = [str(index.ids[i]) for i in idx]
        data[f"{key}_km"] = chord_sq_to_km(c2)
    join = pd.DataFrame(data, columns=JOIN_COLUMNS)
    return join.sort_values("piezometer_id", kind="mergesort").reset_index(drop=True)


def diagnostics(
    join: pd.DataFrame,
    extra_pairs: dict[str, np.ndarray] | None = None,
    bin_km: float = 1.0,
    max_km: float = 50.0,
) -> dict:
    """Summary statistics and fixed-width histograms of match distances.

    One entry per network pair; the final histogram bin counts matches
    beyond ``max_km``. Pairs with no distances are excluded.
    """
    pairs: dict[str, np.ndarray] = {}
    for net in AUX_NETWORKS:
        key = NETWORK_KEYS[net]
        col = f"{key}_km"
        if col in join.columns:
            pairs[f"piezo_to_{key}"] = join[col].to_numpy(dtype=np.float64)
    for name, dists in (extra_pairs or {}).items():
        pairs[name] = np.asarray(dists, dtype=np.float64)

    edges = np.arange(0.0, max_km + bin_km, bin_km)
    report = {}
    for name, dists in pairs.items():
        if len(dists) == 0:
            continue
        hist, _ = np.histogram(dists, bins=edges)
        report[name] = {
            "count": int(len(dists)),
            "min_km": float(np.min(dists)),
            "median_km": float(np.median(dists)),
            "p90_km": float(np.percentile(dists, 90)),
            "max_km": float(np.max(dists)),
            "bin_km": bin_km,
            "histogram": hist.astype(int).tolist(),
            "overflow": int(np.sum(dists >= max_km)),
        }
    return report


def write_join(join: pd.DataFrame, path) -> None:
    out = join.copy()
    for col in out.columns:
        if col.endswith("_km"):
            out[col] = out[col].map(lambda v: repr(float(v)))
    out.to_csv(path, index=False)


def read_join(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={c: (float if c.endswith("_km") else str) for c in JOIN_COLUMNS})
    return df[JOIN_COLUMNS]
