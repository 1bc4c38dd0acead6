import numpy as np
import pandas as pd
import pytest

from watertable import ingest
from watertable.errors import DuplicateStationId, MalformedHeader
from watertable.ingest import Network, StationRegistry
from watertable.synth import SynthConfig, TABLE1_SIZES, generate_stations


def write_csv(path, text):
    path.write_text(text)
    return path


def test_load_stations_identity_case(tmp_path):
    p = write_csv(tmp_path / "st.csv", (
        "station_id,network,latitude,longitude,attr:investigation_depth,attr:department_code\n"
        "P001,piezometer,45.0,2.0,12.5,01\n"
        "P002,piezometer,45.5,2.5,,02\n"
        "P003,piezometer,46.0,3.0,30.0,02\n"
    ))
    records, report = ingest.load_stations(p, Network.PIEZOMETER)
    assert len(records) == 3
    assert report.rows_kept == 3 and report.rows_read == 3
    registry = StationRegistry()
    registry.add_all(records)
    assert registry.inventory()["piezometer"] == 3
    # numeric attr parsed, categorical kept as string even when digit-only
    assert records[0].static_attrs["investigation_depth"] == 12.5
    assert records[0].static_attrs["department_code"] == "01"
    assert "investigation_depth" not in records[1].static_attrs


def test_load_stations_out_of_range_latitude(tmp_path):
    p = write_csv(tmp_path / "st.csv", (
        "station_id,network,latitude,longitude\n"
        "P001,piezometer,91.0,2.0\n"
        "P002,piezometer,45.0,2.0\n"
    ))
    records, report = ingest.load_stations(p, Network.PIEZOMETER)
    assert [r.station_id for r in records] == ["P002"]
    assert report.skipped["out_of_range_coordinate"] == 1


def test_load_stations_duplicate_id_fatal(tmp_path):
    p = write_csv(tmp_path / "st.csv", (
        "station_id,network,latitude,longitude\n"
        "P001,piezometer,45.0,2.0\n"
        "P001,piezometer,45.1,2.1\n"
    ))
    with pytest.raises(DuplicateStationId):
        ingest.load_stations(p, Network.PIEZOMETER)


def test_load_stations_malformed_header(tmp_path):
    p = write_csv(tmp_path / "st.csv", "id,network,lat,lon\nP001,piezometer,45.0,2.0\n")
    with pytest.raises(MalformedHeader):
        ingest.load_stations(p, Network.PIEZOMETER)


def test_table1_inventory_through_loaders(tmp_path):
    stations = generate_stations(SynthConfig(**TABLE1_SIZES))
    registry = StationRegistry()
    for net, records in stations.items():
        path = tmp_path / f"{net.value}.csv"
        ingest.write_stations(records, path)
        loaded, report = ingest.load_stations(path, net)
        assert report.skipped == {}
        registry.add_all(loaded)
    inv = registry.inventory()
    assert (inv["piezometer"], inv["meteo"], inv["hydro"],
            inv["abstraction_0"], inv["abstraction_1"], inv["abstraction_2"]) == (
        2858, 872, 1418, 1047, 1487, 1814)


def test_load_observations_dedup_last_wins(tmp_path):
    p = write_csv(tmp_path / "obs.csv", (
        "station_id,date,variable,value\n"
        "M001,2021-01-01,precipitation_mm,1.0\n"
        "M001,2021-01-01,precipitation_mm,2.5\n"
    ))
    obs, report = ingest.load_observations(p, Network.METEO, {"M001"})
    assert len(obs) == 1
    assert obs.loc[0, "value"] == 2.5
    assert report.warnings["duplicate_key"] == 1


def test_load_observations_empty_file(tmp_path):
    p = write_csv(tmp_path / "obs.csv", "station_id,date,variable,value\n")
    obs, report = ingest.load_observations(p, Network.METEO, {"M001"})
    assert len(obs) == 0
    assert report.rows_read == 0


def test_load_observations_sorted_fixture(tmp_path):
    # 10 rows written intentionally out of order
    rows = [
        ("M002", "2021-01-02", "t", "2.0"),
        ("M001", "2021-01-03", "t", "3.0"),
        ("M002", "2021-01-01", "t", "1.0"),
        ("M001", "2021-01-01", "t", "0.5"),
        ("M003", "2021-01-02", "t", "9.0"),
        ("M001", "2021-01-02", "t", "1.5"),
        ("M003", "2021-01-01", "t", "8.0"),
        ("M002", "2021-01-03", "t", "4.0"),
        ("M001", "2021-01-04", "t", "2.5"),
        ("M003", "2021-01-03", "t", "7.0"),
    ]
    text = "station_id,date,variable,value\n" + "".join(",".join(r) + "\n" for r in rows)
    p = write_csv(tmp_path / "obs.csv", text)
    obs, _ = ingest.load_observations(p, Network.METEO, {"M001", "M002", "M003"})
    assert len(obs) == 10
    expected = sorted(rows, key=lambda r: (r[0], r[1]))
    assert list(obs["station_id"]) == [r[0] for r in expected]
    assert [d.strftime("%Y-%m-%d") for d in obs["date"]] == [r[1] for r in expected]


def test_load_observations_skips_and_warnings(tmp_path):
    p = write_csv(tmp_path / "obs.csv", (
        "station_id,date,variable,value\n"
        "M001,2021-01-01,t,1.0\n"
        "MXXX,2021-01-01,t,1.0\n"          # unknown station
        "M001,not-a-date,t,1.0\n"           # unparseable date
        "M001,2021-01-02T13:45:00,t,2.0\n"  # sub-daily, truncated
        "M001,2021-01-03,t,\n"              # missing value kept
        "M001,2020-01-01,t,1.0\n"           # outside window
    ))
    obs, report = ingest.load_observations(
        p, Network.METEO, {"M001"}, window=("2021-01-01", "2021-12-31"))
    assert report.skipped["unknown_station_id"] == 1
    assert report.skipped["unparseable_date"] == 1
    assert report.skipped["outside_window"] == 1
    assert report.warnings["subdaily_truncated"] == 1
    assert len(obs) == 3
    truncated = obs[obs["date"] == pd.Timestamp("2021-01-02")]
    assert len(truncated) == 1
    missing = obs[obs["date"] == pd.Timestamp("2021-01-03")]
    assert np.isnan(missing["value"].iloc[0])


def _wide_fixture():
    # 10 rows: full column, 60%-missing column, exactly-50%-missing column
    idx = pd.MultiIndex.from_product(
        [["S1"], pd.date_range("2021-01-01", periods=10)], names=["station_id", "date"])
    full = np.arange(10.0)
    sixty = np.where(np.arange(10) < 6, np.nan, 1.0)
    fifty = np.where(np.arange(10) < 5, np.nan, 1.0)
    return pd.DataFrame({"full": full, "sixty": sixty, "fifty": fifty}, index=idx)


def test_drop_sparse_columns_rule():
    wide = _wide_fixture()
    # independent oracle: count missing cells per column
    missing_fracs = {c: float(np.mean(np.isnan(wide[c].to_numpy()))) for c in wide.columns}
    assert missing_fracs == {"full": 0.0, "sixty": 0.6, "fifty": 0.5}
    out, dropped = ingest.drop_sparse_columns(wide, threshold=0.5)
    assert set(dropped) == {"sixty"}
    assert dropped["sixty"] == 0.6
    assert list(out.columns) == ["full", "fifty"]  # exactly 50% kept (<= rule)


def test_drop_sparse_columns_idempotent():
    wide = _wide_fixture()
    once, _ = ingest.drop_sparse_columns(wide, 0.5)
    twice, dropped2 = ingest.drop_sparse_columns(once, 0.5)
    assert dropped2 == {}
    pd.testing.assert_frame_equal(once, twice)


def test_observation_round_trip_byte_stable(tmp_path):
    p = write_csv(tmp_path / "obs.csv", (
        "station_id,date,variable,value\n"
        "M001,2021-01-01,t,1.3333333333333333\n"
        "M001,2021-01-02,t,\n"
        "M001,2021-01-03,t,2.0\n"
    ))
    obs, _ = ingest.load_observations(p, Network.METEO, {"M001"})
    out1 = tmp_path / "out1.csv"
    out2 = tmp_path / "out2.csv"
    ingest.write_observations(obs, out1)
    reloaded, _ = ingest.load_observations(out1, Network.METEO, {"M001"})
    ingest.write_observations(reloaded, out2)
    assert out1.read_bytes() == out2.read_bytes()
    pd.testing.assert_frame_equal(obs, reloaded)


def test_inventory_invariant_under_observation_loading(tmp_path):
    st = write_csv(tmp_path / "st.csv",
                   "station_id,network,latitude,longitude\nM001,meteo,45.0,2.0\n")
    records, _ = ingest.load_stations(st, Network.METEO)
    registry = StationRegistry()
    registry.add_all(records)
    before = registry.inventory()
    obs_path = write_csv(tmp_path / "obs.csv", (
        "station_id,date,variable,value\nM001,2021-01-01,t,1.0\n"))
    ingest.load_observations(obs_path, Network.METEO, registry.ids(Network.METEO))
    assert registry.inventory() == before
