import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cwc.eigensolver import full_decomposition
from cwc.errors import ParameterError
from cwc.grid_medium import Grid, constant_medium, make_random_bv_medium, make_smooth_medium
from cwc.operators import WaveOperator
from cwc.propagation import (InitialData, compressive_solve, crossing_times, energy,
                             error_measure, essential_support, evolve_coefficients, gaussian_bump,
                             project_initial_data, reference_solution, split_initial_data,
                             time_split_solve)
from oracles import dalembert_periodic


@pytest.mark.parametrize("shift", [0, 5, 17, 64])
def test_reference_matches_dalembert(shift):
    n = 128
    med = constant_medium(Grid(n))
    u0 = gaussian_bump(med.grid, 0.4)
    u, _ = reference_solution(med, InitialData.at_rest(u0), shift / n)
    assert np.max(np.abs(u - dalembert_periodic(u0, shift))) < 1e-10


def test_reference_velocity_translation():
    # u0 = f, u1 = -f': right-moving wave, exact translation
    n = 128
    g = Grid(n)
    med = constant_medium(g)
    x = g.points
    f = np.exp(-0.5 * ((x - 0.3) / 0.03) ** 2)
    fp = -(x - 0.3) / 0.03**2 * f
    u, _ = reference_solution(med, InitialData(f, -fp), 10 / n)
    assert np.max(np.abs(u - np.roll(f, 10))) < 1e-6


@given(st.integers(0, 2**31), st.sampled_from(["periodic", "dirichlet", "neumann"]),
       st.floats(0.01, 3.0))
@settings(max_examples=10)
def test_energy_conserved(seed, bc, t):
    med = make_random_bv_medium(1.5, 5, Grid(64, bc), seed)
    rng = np.random.default_rng(seed)
    data = InitialData(rng.standard_normal(64), rng.standard_normal(64))
    e0 = energy(med, data.u0, data.u1)
    u, ut = reference_solution(med, data, t)
    assert energy(med, u, ut) == pytest.approx(e0, rel=1e-9)


def test_time_reversibility():
    med = make_smooth_medium(4, Grid(64))
    es = full_decomposition(WaveOperator(med))
    c = project_initial_data(es, med, InitialData.at_rest(gaussian_bump(med.grid)))
    back = evolve_coefficients(evolve_coefficients(c, 0.7), -0.7)
    assert np.allclose(back.c0, c.c0, atol=1e-10) and np.allclose(back.c1, c.c1, atol=1e-8)


def test_essential_support():
    sigma = np.ones(6)
    u = np.array([0.0, 1.0, -3.0, 0.1, 0.2, 2.0])
    assert essential_support(u, sigma, 0.0) == 5
    assert essential_support(u, sigma, 0.31) == 3
    assert essential_support(u, sigma, 100.0) == 0
    assert essential_support(np.ones(4), sigma[:4], 0.5) == 4  # ties dropped together


def test_compressive_full_set_equals_reference():
    med = make_smooth_medium(2, Grid(64))
    data = InitialData.at_rest(gaussian_bump(med.grid))
    t = crossing_times(med, 5)
    u = compressive_solve(med, data, t, 64, 0)
    u_ref, _ = reference_solution(med, data, t)
    assert np.max(np.abs(u - u_ref)) < 1e-6


def test_compressive_recovers_sparse_field():
    med = make_smooth_medium(2, Grid(512))
    data = InitialData.at_rest(gaussian_bump(med.grid))
    t = med.crossing_time()
    u = compressive_solve(med, data, t, 256, 3)
    u_ref, _ = reference_solution(med, data, t)
    assert np.linalg.norm(u - u_ref) <= 0.05 * np.linalg.norm(u_ref)


def test_initial_data_splitting_sums_and_recovers():
    med = make_smooth_medium(2, Grid(256))
    g = med.grid
    data = InitialData(gaussian_bump(g, 0.3) + gaussian_bump(g, 0.7), np.zeros(256))
    parts = split_initial_data(data, 2)
    assert np.allclose(sum(p.u0 for p in parts), data.u0)
    u = compressive_solve(med, data, 0.4, 256, 1, n_components=2)
    u_ref, _ = reference_solution(med, data, 0.4)
    assert np.max(np.abs(u - u_ref)) < 1e-5


def test_split_rejects():
    data = InitialData(np.r_[1.0, np.zeros(7)], np.zeros(8))
    with pytest.raises(ParameterError):
        split_initial_data(data, 2)
    with pytest.raises(ParameterError):
        split_initial_data(data, 0)


def test_time_split_full_set():
    med = make_smooth_medium(2, Grid(64))
    data = InitialData.at_rest(gaussian_bump(med.grid))
    u = time_split_solve(med, data, 1.0, 4, 64, 0)
    u_ref, _ = reference_solution(med, data, 1.0)
    assert np.max(np.abs(u - u_ref)) < 1e-5


def test_error_measure_deterministic_and_full():
    med = make_smooth_medium(2, Grid(64))
    a = error_measure(med, 0.5, 2, n_t=5, seed=4)
    b = error_measure(med, 0.5, 2, n_t=5, seed=4)
    assert a.err == b.err and a.seeds == b.seeds
    full = error_measure(med, 1.0, 1, n_t=5)
    assert full.err < 1e-6 and full.rel_l2 < 1e-6


def test_k_too_large():
    med = constant_medium(Grid(16))
    with pytest.raises(ParameterError):
        compressive_solve(med, InitialData.at_rest(np.ones(16)), 0.1, 17, 0)
    with pytest.raises(ParameterError):
        InitialData(np.ones(4), np.ones(5))
