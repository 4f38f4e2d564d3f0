import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cwc.eigensolver import (dense_spectrum, draw_eigenset, estimate_omega_max, faithfulness_report,
                             full_decomposition, load_eigenset, nearest_eigenpair,
                             residual_tolerance, save_eigenset, selection_probabilities)
from cwc.errors import ParameterError
from cwc.grid_medium import (Grid, constant_medium, make_random_bv_medium, make_smooth_medium)
from cwc.operators import WaveOperator
from oracles import fd_dirichlet_omegas, fd_neumann_omegas, periodic_constant_omegas


def test_periodic_constant_spectrum():
    es = full_decomposition(WaveOperator(constant_medium(Grid(64))))
    assert np.allclose(es.omegas, periodic_constant_omegas(64), rtol=1e-10, atol=1e-8)


def test_fd_constant_spectra():
    es = full_decomposition(WaveOperator(constant_medium(Grid(64, "dirichlet"))))
    assert np.allclose(es.omegas, fd_dirichlet_omegas(64), rtol=1e-12)
    es = full_decomposition(WaveOperator(constant_medium(Grid(64, "neumann"))))
    ex = fd_neumann_omegas(64)
    assert np.allclose(es.omegas[1:], ex[1:], rtol=1e-12)
    assert es.omegas[0] < 1e-5


@pytest.mark.parametrize("bc", ["periodic", "dirichlet", "neumann"])
def test_eigenvectors_normalized_and_residuals(bc):
    med = make_random_bv_medium(1.0, 3, Grid(64, bc), 2)
    op = WaveOperator(med)
    es = full_decomposition(op)
    SV = med.sigma[:, None] * es.vectors
    assert np.allclose(SV.T @ SV, np.eye(64), atol=1e-10)
    lhs = op.apply_weighted(es.vectors)
    assert np.allclose(lhs, -(es.omegas**2) * es.vectors, atol=1e-8 * es.omegas.max() ** 2)


def test_omega_max_power_iteration():
    op = WaveOperator(make_smooth_medium(3, Grid(128)))
    assert estimate_omega_max(op) == pytest.approx(dense_spectrum(op).omega_max, rel=1e-6)


@settings(max_examples=8)
@given(st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_nearest_eigenpair_matches_dense(seed, frac):
    med = make_random_bv_medium(1.0, 4, Grid(128, "dirichlet"), seed)
    op = WaveOperator(med)
    spec = dense_spectrum(op)
    w = frac * spec.omega_max
    (p,) = nearest_eigenpair(op, w)
    j = int(np.argmin(np.abs(spec.omegas - w)))
    assert p.omega == pytest.approx(spec.omegas[j], rel=1e-8)
    v = spec.vectors[:, j]
    s = np.sign(v @ (med.sigma**2 * p.vector))
    assert np.max(np.abs(s * p.vector - v)) <= 1e-6 * np.max(np.abs(v))
    assert p.residual <= residual_tolerance(op)


def test_periodic_double_eigenvalue_returns_pair():
    op = WaveOperator(make_smooth_medium(2, Grid(64)))
    pairs = nearest_eigenpair(op, 30.0)
    assert len(pairs) == 2
    V = np.column_stack([p.vector for p in pairs])
    s = op.medium.sigma[:, None]
    assert np.allclose((s * V).T @ (s * V), np.eye(2), atol=1e-8)


@pytest.mark.parametrize("bc", ["periodic", "dirichlet"])
def test_draw_eigenset_methods_agree(bc):
    med = make_random_bv_medium(0.8, 3, Grid(64, bc), 4)
    op = WaveOperator(med)
    a = draw_eigenset(op, 12, 3, method="dense")
    b = draw_eigenset(op, 12, 3, method="shift_invert")
    assert a.k == b.k == 12
    assert np.allclose(a.omegas, b.omegas, rtol=1e-8)


def test_draw_eigenset_distinct_and_deterministic():
    op = WaveOperator(make_random_bv_medium(1.0, 3, Grid(64, "neumann"), 1))
    a = draw_eigenset(op, 20, 9, method="dense")
    b = draw_eigenset(op, 20, 9, method="dense")
    assert np.array_equal(a.omegas, b.omegas)
    assert np.all(np.diff(a.omegas) > 0)


def test_draw_eigenset_endpoints_and_full():
    op = WaveOperator(make_random_bv_medium(1.0, 3, Grid(32, "dirichlet"), 1))
    es = draw_eigenset(op, 2, 0, method="dense", include_endpoints=True)
    spec = dense_spectrum(op)
    assert es.omegas[0] == spec.omegas[0] and es.omegas[-1] == spec.omegas[-1]
    assert draw_eigenset(op, 32, 0, method="dense").k == 32


def test_draw_eigenset_rejects():
    op = WaveOperator(constant_medium(Grid(16)))
    for k in (0, 17, 2.5):
        with pytest.raises(ParameterError):
            draw_eigenset(op, k, 0)
    with pytest.raises(ParameterError):
        draw_eigenset(op, 2, 0, method="magic")


def test_selection_probabilities_sum_to_one():
    op = WaveOperator(make_random_bv_medium(1.0, 3, Grid(64, "dirichlet"), 1))
    lv, p, mult = selection_probabilities(op)
    assert p.sum() == pytest.approx(1.0, abs=1e-6)
    # interior level: half the distance to each neighbor, over omega_max
    assert p[5] == pytest.approx(0.5 * (lv[6] - lv[4]) / estimate_omega_max(op), rel=1e-6)


def test_shift_sampling_frequencies_match_probabilities():
    op = WaveOperator(make_random_bv_medium(1.0, 3, Grid(16, "dirichlet"), 1))
    lv, p, _ = selection_probabilities(op)
    hits = np.zeros(lv.size)
    for s in range(4000):
        es = draw_eigenset(op, 1, s, method="dense")
        hits[np.argmin(np.abs(lv - es.omegas[0]))] += 1
    sd = np.sqrt(p * (1 - p) / 4000)
    assert np.all(np.abs(hits / 4000 - p) <= 4 * sd + 1e-12)


def test_faithfulness_smooth_medium():
    rep = faithfulness_report(make_smooth_medium(2, Grid(128)), 16)
    assert rep.passed and rep.worst_gap_factor < 1.1


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_eigenset_roundtrip(tmp_path, fmt):
    op = WaveOperator(make_smooth_medium(2, Grid(32)))
    es = draw_eigenset(op, 5, 1, method="dense")
    p = tmp_path / "es"
    save_eigenset(es, p, fmt=fmt)
    es2 = load_eigenset(p)
    assert es2.k == 5 and es2.seed == 1 and es2.bc == "periodic"
    assert np.array_equal(es.vectors, es2.vectors)
    assert np.array_equal(es.omegas, es2.omegas)


def test_load_eigenset_skips_manifest(tmp_path):
    op = WaveOperator(make_smooth_medium(2, Grid(32)))
    es = draw_eigenset(op, 3, 1, method="dense")
    p = tmp_path / "es"
    save_eigenset(es, p)
    p.write_text("## manifest line\n## another\n" + p.read_text())
    assert np.array_equal(load_eigenset(p).omegas, es.omegas)
