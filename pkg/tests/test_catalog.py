import math
from pathlib import Path

import pytest

from sailtour import catalog as cat
from sailtour.astro import KeplerianElements, mean_to_true, sample_pseudo_neas
from sailtour.units import CANONICAL

DATA = Path(__file__).parent / "data"


def test_load_three_line_fixture():
    c = cat.load_catalog(DATA / "three_bodies.csv")
    assert c.ids == ["A1", "B2", "C3"]
    a1 = c.get("A1")
    assert a1.a == 1.05 and a1.e == 0.10
    assert a1.i == pytest.approx(math.radians(5.0))
    assert a1.raan == pytest.approx(math.radians(30.0))
    assert a1.argp == pytest.approx(math.radians(45.0))
    assert a1.true_anomaly == pytest.approx(0.0)
    assert a1.epoch == 0.0
    # circular orbit: mean and true anomaly coincide
    assert c.get("B2").true_anomaly == pytest.approx(math.pi / 2)
    c3 = c.get("C3")
    assert c3.true_anomaly == pytest.approx(mean_to_true(math.pi, 0.05))
    assert c3.epoch == pytest.approx(CANONICAL.mjd_to_tu(57858.1324))


def test_filter_removes_out_of_bounds():
    c = cat.filter_catalog(cat.load_catalog(DATA / "three_bodies.csv"))
    assert c.ids == ["A1", "B2"]  # C3 has a = 1.5 AU


def test_filter_keeps_all_samples(tmp_path):
    c = cat.catalog_from_samples(sample_pseudo_neas(200, seed=2))
    assert len(cat.filter_catalog(c)) == 200


def test_empty_filter_warns(caplog):
    c = cat.BodyCatalog((("far", KeplerianElements(2.0, 0.1, 0.1, 0, 0, 0)),))
    with caplog.at_level("WARNING"):
        assert len(cat.filter_catalog(c)) == 0
    assert "removed every entry" in caplog.text


def test_save_load_round_trip(tmp_path):
    c = cat.catalog_from_samples(sample_pseudo_neas(20, seed=4, epoch=3.0))
    cat.save_catalog(c, tmp_path / "c.csv")
    back = cat.load_catalog(tmp_path / "c.csv")
    assert back.ids == c.ids
    for (_, x), (_, y) in zip(c, back):
        assert y.a == x.a and y.e == x.e
        assert y.true_anomaly == pytest.approx(x.true_anomaly, abs=1e-10)
        assert y.epoch == pytest.approx(x.epoch, abs=1e-12)


@pytest.mark.parametrize("body,where", [
    ("id,a_au,e\nA,1,0\n", ":1:"),
    ("id,a_au,e,i_deg,raan_deg,argp_deg,ma_deg,epoch_mjd\nA,1,0,0,0,0,0,57800\nB,1,0,0,0\n", ":3:"),
    ("id,a_au,e,i_deg,raan_deg,argp_deg,ma_deg,epoch_mjd\nA,1,abc,0,0,0,0,57800\n", ":2:"),
    ("id,a_au,e,i_deg,raan_deg,argp_deg,ma_deg,epoch_mjd\nA,1,1.5,0,0,0,0,57800\n", ":2:"),
])
def test_parse_errors_carry_line_numbers(tmp_path, body, where):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(cat.CatalogError, match=where):
        cat.load_catalog(p)


def test_duplicate_ids_rejected():
    k = KeplerianElements(1.0, 0.0, 0.0, 0, 0, 0)
    with pytest.raises(cat.CatalogError):
        cat.BodyCatalog((("x", k), ("x", k)))


def test_earth_elements_inside_domain():
    e = cat.earth_elements()
    assert e.a == pytest.approx(1.0, abs=1e-5) and e.e == pytest.approx(0.0167, abs=1e-4)
