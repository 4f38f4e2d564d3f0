import numpy as np
import pytest
from hypothesis import given, strategies as st

from cwc.errors import ParameterError
from cwc.grid_medium import (Grid, Medium, constant_medium, make_piecewise_medium,
                             make_random_bv_medium, make_sinusoidal_medium, make_smooth_medium,
                             read_medium_csv, write_medium_csv)
from cwc.seeding import derive_seed, stream
from oracles import DERIVE_SEED_0_EIGENSET_0, SMOOTH_GAMMA2_N16_HEAD


def test_grid_points():
    assert np.allclose(Grid(8, "periodic").points, np.arange(8) / 8)
    assert np.allclose(Grid(8, "dirichlet").points, (np.arange(8) + 0.5) / 8)


@pytest.mark.parametrize("n,bc", [(4, "periodic"), (12, "periodic"), (16, "robin"), (7, "dirichlet")])
def test_grid_rejects(n, bc):
    with pytest.raises(ParameterError):
        Grid(n, bc)


def test_medium_rejects_nonpositive():
    with pytest.raises(ParameterError):
        Medium(Grid(8), np.r_[np.ones(7), 0.0])
    with pytest.raises(ParameterError):
        Medium(Grid(8), np.ones(9))


def test_smooth_medium_frozen():
    m = make_smooth_medium(2, Grid(16))
    assert np.allclose(m.sigma[:5], SMOOTH_GAMMA2_N16_HEAD, atol=1e-8)
    assert np.allclose(make_smooth_medium(1, Grid(16)).sigma, 1.0)


@given(st.floats(1.0, 20.0))
def test_smooth_medium_range(gamma):
    m = make_smooth_medium(gamma, Grid(64))
    smax = 1 + 9 * (gamma - 1) / 19
    # (s+1)/2 + (s-1)/2 (sin + 3) spans [(3s-1)/2, (5s-3)/2]
    assert m.sigma.min() >= (3 * smax - 1) / 2 - 1e-12
    assert m.sigma.max() <= (5 * smax - 3) / 2 + 1e-12


def test_sinusoidal_contrast():
    m = make_sinusoidal_medium(Grid(256), 3, 1.5)
    assert m.contrast == pytest.approx(1.5, rel=1e-3)


@given(st.integers(1, 20), st.integers(0, 2**31))
def test_piecewise_medium_bounds(gamma, seed):
    m = make_piecewise_medium(gamma, Grid(256), seed)
    smax = 1 + 9 * (gamma - 1) / 19
    assert m.sigma.min() >= 1 - 1e-9 and m.sigma.max() <= smax + 1e-9


@given(st.floats(0.0, 3.0), st.integers(0, 10), st.integers(0, 2**31),
       st.sampled_from(["periodic", "dirichlet", "neumann"]))
def test_random_bv_variation(var, jumps, seed, bc):
    m = make_random_bv_medium(var, jumps, Grid(64, bc), seed)
    assert m.var_log_sigma <= var + 1e-12
    if jumps and var > 0:
        assert m.var_log_sigma == pytest.approx(var, rel=1e-9)
    assert np.mean(np.log(m.sigma)) == pytest.approx(0.0, abs=1e-12)


def test_piecewise_constant_variation_by_hand():
    s = np.ones(8)
    s[3:] = np.e
    assert Medium(Grid(8, "dirichlet"), s).var_log_sigma == pytest.approx(1.0)
    # periodic: the wrap-around jump counts too
    assert Medium(Grid(8, "periodic"), s).var_log_sigma == pytest.approx(2.0)


def test_medium_csv_roundtrip(tmp_path):
    m = make_random_bv_medium(1.0, 3, Grid(32, "neumann"), 5)
    p = tmp_path / "m.csv"
    write_medium_csv(m, p)
    m2 = read_medium_csv(p)
    assert m2.bc == "neumann" and np.array_equal(m.sigma, m2.sigma)


def test_medium_csv_header_required(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1\n2\n")
    with pytest.raises(ParameterError):
        read_medium_csv(p)


def test_crossing_time_and_refine():
    m = constant_medium(Grid(16), 2.0)
    assert m.crossing_time() == pytest.approx(2.0)
    assert m.t_sharp() == pytest.approx(0.5)
    assert m.refined().n == 32 and np.allclose(m.refined().sigma, 2.0)


def test_seeding_frozen_and_independent():
    assert derive_seed(0, "eigenset", 0) == DERIVE_SEED_0_EIGENSET_0
    assert derive_seed(0, "eigenset", 0) != derive_seed(0, "eigenset", 1)
    assert derive_seed(0, "a") != derive_seed(1, "a")
    assert stream(3, "x").random() == stream(3, "x").random()
