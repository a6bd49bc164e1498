import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinprobe.constants import CM2, K_B, MILLIGAUSS, NANOKELVIN
from spinprobe.cross_sections import (
    ALL_CHANNELS,
    CSV_COLUMNS,
    ENDO_CHANNELS,
    EXO_CHANNELS,
    CollisionChannel,
    CrossSectionTable,
    Direction,
    SyntheticCrossSections,
    TabulatedCrossSections,
    load_tables,
    query_sigma,
    save_tables,
    tabulate,
)
from spinprobe.exceptions import MissingChannelError, RangeError, TableFormatError
from spinprobe.states import endoergic_threshold

B_GRID = np.array([0.0, 20.0, 50.0, 100.0]) * MILLIGAUSS
E_GRID = np.linspace(0.0, 20000.0, 41) * NANOKELVIN * K_B


def test_channel_set():
    assert len(ALL_CHANNELS) == 12
    assert len(set(ALL_CHANNELS)) == 12
    ch = CollisionChannel(2, "endo")
    assert ch.final_mF == 3 and ch.bath_delta == -1 and str(ch) == "endo(+2->+3)"
    assert CollisionChannel(-2, Direction.EXO).final_mF == -3
    with pytest.raises(ValueError):
        CollisionChannel(3, "endo")
    with pytest.raises(ValueError):
        CollisionChannel(-3, "exo")


def _bilinear_table(channel):
    # sigma = c0 + c1 B + c2 E + c3 B E is reproduced exactly by bilinear interpolation
    b = B_GRID[:, None] / MILLIGAUSS
    e = E_GRID[None, :] / (NANOKELVIN * K_B)
    sig = (1.0 + 0.01 * b + 1e-4 * e + 1e-6 * b * e) * 1e-16
    return CrossSectionTable(channel, B_GRID, E_GRID, sig)


@given(st.floats(min_value=0.0, max_value=100.0), st.floats(min_value=0.0, max_value=20000.0))
def test_bilinear_exact(b_mG, e_nK):
    t = _bilinear_table(EXO_CHANNELS[1])
    expected = (1.0 + 0.01 * b_mG + 1e-4 * e_nK + 1e-6 * b_mG * e_nK) * 1e-16
    assert t.query(b_mG * MILLIGAUSS, e_nK * NANOKELVIN * K_B) == pytest.approx(expected, rel=1e-12)


@given(st.floats(min_value=0.0, max_value=100.0), st.floats(min_value=0.0, max_value=20000.0))
def test_interpolant_bounded_by_table(b_mG, e_nK):
    prov = tabulate(SyntheticCrossSections(), [ENDO_CHANNELS[3]], B_GRID, E_GRID)
    t = prov.table(ENDO_CHANNELS[3])
    v = t.query(b_mG * MILLIGAUSS, e_nK * NANOKELVIN * K_B)
    assert 0.0 <= v <= t.sigma.max() * (1 + 4e-16)  # convex weights may round up an ulp


def test_endoergic_zero_at_threshold():
    prov = tabulate(SyntheticCrossSections(), [ENDO_CHANNELS[0]], B_GRID, E_GRID)
    B = 35 * MILLIGAUSS
    assert prov.sigma(ENDO_CHANNELS[0], B, endoergic_threshold(B)) == 0.0
    assert prov.sigma(ENDO_CHANNELS[0], B, 0.5 * endoergic_threshold(B)) == 0.0


def test_out_of_range_queries():
    t = _bilinear_table(EXO_CHANNELS[0])
    with pytest.raises(RangeError):
        t.query(150 * MILLIGAUSS, E_GRID[3])
    with pytest.raises(RangeError):
        t.query(10 * MILLIGAUSS, E_GRID[-1] * 1.01)


def test_missing_channel():
    prov = TabulatedCrossSections([_bilinear_table(EXO_CHANNELS[0])])
    with pytest.raises(MissingChannelError):
        query_sigma(prov, ENDO_CHANNELS[0], 0.0, 0.0)


def test_threshold_violation_rejected():
    sig = np.ones((B_GRID.size, E_GRID.size))
    with pytest.raises(ValueError, match="threshold violation"):
        CrossSectionTable(ENDO_CHANNELS[0], B_GRID, E_GRID, sig)


def test_negative_sigma_rejected():
    sig = -np.ones((B_GRID.size, E_GRID.size))
    with pytest.raises(ValueError):
        CrossSectionTable(EXO_CHANNELS[0], B_GRID, E_GRID, sig)


def test_synthetic_threshold_law():
    prov = SyntheticCrossSections(sigma0_endo=2.0, threshold_exponent=0.5)
    B = 10 * MILLIGAUSS
    th = endoergic_threshold(B)
    assert prov.sigma(ENDO_CHANNELS[0], B, 4 * th) == pytest.approx(2.0 * np.sqrt(0.75))
    assert prov.sigma(ENDO_CHANNELS[0], B, th) == 0.0
    assert prov.sigma(EXO_CHANNELS[0], B, 0.0) == prov.sigma0_exo
    over = SyntheticCrossSections(overrides={EXO_CHANNELS[2]: 7.0})
    assert over.sigma(EXO_CHANNELS[2], B, 1e-30) == 7.0
    with pytest.raises(ValueError):
        SyntheticCrossSections(sigma0_exo=-1.0)


def test_csv_round_trip(tmp_path):
    prov = tabulate(SyntheticCrossSections(), ALL_CHANNELS, B_GRID, E_GRID)
    path = tmp_path / "xs.csv"
    save_tables(prov, path)
    back = load_tables(path)
    assert back.channels == prov.channels
    for ch in ALL_CHANNELS:
        np.testing.assert_allclose(back.table(ch).sigma, prov.table(ch).sigma, rtol=1e-15)
        np.testing.assert_allclose(back.table(ch).Ec_grid, prov.table(ch).Ec_grid, rtol=1e-15)


def _write(path, lines):
    path.write_text("\n".join([",".join(CSV_COLUMNS), *lines]) + "\n")
    return path


def test_csv_header_required(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("mF,dir,B,E,s\n")
    with pytest.raises(TableFormatError, match="row 1"):
        load_tables(p)


def test_csv_negative_sigma_names_row(tmp_path):
    p = _write(tmp_path / "x.csv", ["1,exo,0,0,1e-11", "1,exo,0,100,-1e-11"])
    with pytest.raises(TableFormatError, match="row 3"):
        load_tables(p)


def test_csv_threshold_violation_names_row(tmp_path):
    p = _write(tmp_path / "x.csv", ["0,endo,10,0,0", "0,endo,10,100,1e-11", "0,endo,10,300,1e-11"])
    with pytest.raises(TableFormatError, match="row 3: threshold violation"):
        load_tables(p)


def test_csv_duplicate_and_missing_points(tmp_path):
    p = _write(tmp_path / "x.csv", ["1,exo,0,0,1", "1,exo,0,0,1"])
    with pytest.raises(TableFormatError, match="row 3: duplicate"):
        load_tables(p)
    p = _write(tmp_path / "y.csv", ["1,exo,0,0,1", "1,exo,0,10,1", "1,exo,5,0,1"])
    with pytest.raises(TableFormatError, match="missing grid point"):
        load_tables(p)


def test_csv_units(tmp_path):
    p = _write(tmp_path / "x.csv", ["1,exo,0,0,2e-11", "1,exo,0,100,2e-11"])
    t = load_tables(p).table(CollisionChannel(1, "exo"))
    assert t.sigma[0, 0] == pytest.approx(2e-11 * CM2)
    assert t.Ec_grid[1] == pytest.approx(100 * NANOKELVIN * K_B)
