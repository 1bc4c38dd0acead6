import numpy as np
import pytest

from watertable.ingest import Network
from watertable.synth import SynthConfig, TABLE1_SIZES, generate, generate_stations, simulate_levels


def small_config(**kw):
    base = dict(seed=7, n_wells=4, n_meteo=3, n_hydro=2, n_abstraction=(2, 2, 2),
                start="2021-01-01", end="2021-03-31", missing_rate=0.0)
    base.update(kw)
    return SynthConfig(**base)


def test_same_seed_byte_identical(tmp_path):
    a = generate(small_config())
    b = generate(small_config())
    pa = a.write(tmp_path / "a")
    pb = b.write(tmp_path / "b")
    assert pa.keys() == pb.keys()
    for key in pa:
        assert open(pa[key], "rb").read() == open(pb[key], "rb").read(), key


def test_different_seed_differs():
    a = generate(small_config())
    b = generate(small_config(seed=8))
    la = a.observations[Network.PIEZOMETER]["value"]
    lb = b.observations[Network.PIEZOMETER]["value"]
    assert not np.allclose(la, lb)


def test_table1_network_sizes():
    cfg = SynthConfig(**TABLE1_SIZES)
    stations = generate_stations(cfg)
    counts = tuple(len(stations[n]) for n in (
        Network.PIEZOMETER, Network.METEO, Network.HYDRO,
        Network.ABSTRACTION_0, Network.ABSTRACTION_1, Network.ABSTRACTION_2))
    assert counts == (2858, 872, 1418, 1047, 1487, 1814)


def test_geometric_decay_closed_form():
    n = 40
    rain = np.zeros(n)
    temp = np.zeros(n)  # below threshold -> no loss
    noise = np.zeros(n)
    levels = simulate_levels(rain, temp, level0=5.0, alpha=0.5, beta=0.1,
                             rho=0.1, theta=12.0, noise=noise)
    expected = 5.0 * 0.9 ** np.arange(n)
    assert np.allclose(levels, expected, rtol=1e-12)


def test_rain_today_never_lowers_tomorrow():
    rng = np.random.default_rng(0)
    n = 200
    rain = rng.exponential(3.0, n)
    temp = rng.normal(14.0, 6.0, n)
    noise = rng.normal(0.0, 0.3, n)
    base = simulate_levels(rain, temp, 10.0, 0.5, 0.1, 0.05, 12.0, noise)
    for t in (0, 50, 150):
        bumped_rain = rain.copy()
        bumped_rain[t] += 5.0
        bumped = simulate_levels(bumped_rain, temp, 10.0, 0.5, 0.1, 0.05, 12.0, noise)
        assert np.all(bumped[t + 1:] >= base[t + 1:] - 1e-12)
        assert np.all(bumped[: t + 1] == base[: t + 1])


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_wells=0)
    with pytest.raises(ValueError):
        SynthConfig(recession_rate=1.5)
    with pytest.raises(ValueError):
        SynthConfig(noise_scale=-1.0)


def test_well_depends_on_its_nearest_node():
    data = generate(small_config())
    truth = data.ground_truth["wells"]
    meteo_ids = {s.station_id for s in data.stations[Network.METEO]}
    for well, info in truth.items():
        assert info["meteo_id"] in meteo_ids
        assert 0.0 < info["rho"] < 1.0
