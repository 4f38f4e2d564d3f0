"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected into the terminal summary.  Thresholds are the gate values and are
not relaxed here; lines tagged ``info`` are diagnostics, not gated.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from cwc.eigensolver import (dense_spectrum, draw_eigenset, estimate_omega_max, full_decomposition,
                             nearest_eigenpair)
from cwc.grid_medium import Grid, constant_medium, make_random_bv_medium, make_smooth_medium
from cwc.operators import WaveOperator
from cwc.propagation import error_measure
from cwc.recovery import MeasurementOperator, RecoveryConfig, ist_solve
from cwc.rtm import adjoint_test, reference_image, rtm_error, two_reflector_configuration
from cwc.theory_checks import (bump_data_suite, check_gap_bounds, check_incoherence,
                               check_l1_growth, check_sampling_proposition, random_media_suite)
from oracles import fd_dirichlet_omegas, periodic_constant_omegas

pytestmark = pytest.mark.slow


def report(num, ok, text):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {text}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def info(num, text):
    line = f"criterion {num}: info - {text}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def test_criterion_1_spectral_correctness():
    t0 = time.perf_counter()
    op = WaveOperator(constant_medium(Grid(256)))
    om = full_decomposition(op).omegas
    ex = periodic_constant_omegas(256)
    rel_dense = float(np.max(np.abs(om[1:] - ex[1:]) / ex[1:]))
    zero = float(om[0] / ex[-1])
    # matrix-free path on a sample of shifts
    rng = np.random.default_rng(0)
    om_max = estimate_omega_max(op)
    rel_si = 0.0
    for w in rng.random(10) * om_max:
        for p in nearest_eigenpair(op, w, omega_max=om_max):
            m = np.argmin(np.abs(ex - p.omega))
            rel_si = max(rel_si, abs(p.omega - ex[m]) / max(ex[m], 1.0))
    fd = full_decomposition(WaveOperator(constant_medium(Grid(512, "dirichlet")))).omegas[:10]
    rel_fd = float(np.max(np.abs(fd - np.pi * np.arange(1, 11)) / (np.pi * np.arange(1, 11))))
    dt = time.perf_counter() - t0
    ok = rel_dense <= 1e-10 and zero <= 1e-10 and rel_si <= 1e-10 and rel_fd <= 1e-3 and dt < 10
    report(1, ok, f"periodic max rel err {rel_dense:.1e} (dense), {rel_si:.1e} (shift-invert), "
                  f"zero mode {zero:.1e}; Dirichlet lowest 10 vs n pi {rel_fd:.1e} <= 1e-3; {dt:.1f}s < 10s")
    info(1, f"Dirichlet lowest 10 vs discrete closed form "
            f"{np.max(np.abs(fd - fd_dirichlet_omegas(512)[:10]) / fd):.1e}")
    assert ok


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    worst_w = worst_v = 0.0
    for i in range(5):
        med = make_random_bv_medium(1.0, 4, Grid(512, "dirichlet"), 100 + i)
        op = WaveOperator(med)
        spec = dense_spectrum(op)
        om_max = estimate_omega_max(op)
        for w in np.random.default_rng(i).random(50) * om_max:
            (p,) = nearest_eigenpair(op, w, omega_max=om_max)
            j = int(np.argmin(np.abs(spec.omegas - w)))
            worst_w = max(worst_w, abs(p.omega - spec.omegas[j]) / spec.omegas[j])
            v = spec.vectors[:, j]
            s = np.sign(v @ (med.sigma**2 * p.vector))
            worst_v = max(worst_v, float(np.max(np.abs(s * p.vector - v)) / np.max(np.abs(v))))
    dt = time.perf_counter() - t0
    ok = worst_w <= 1e-6 and worst_v <= 1e-6 and dt < 120
    report(2, ok, f"250 shifts on 5 media n=512: eigenvalue rel {worst_w:.1e}, vector {worst_v:.1e} "
                  f"(<= 1e-6); {dt:.1f}s < 120s")
    assert ok


def test_criterion_3_l1_solver():
    cfg = RecoveryConfig(epsilon=0.0, tol=1e-10, max_iter=20000, accelerate=True)
    med = make_smooth_medium(3, Grid(256))
    m = MeasurementOperator(full_decomposition(WaveOperator(med)), med)
    x = np.random.default_rng(0).standard_normal(256)
    full_err = float(np.max(np.abs(ist_solve(m, m.apply(med.sigma**2 * x), cfg).x - x)) / np.max(np.abs(x)))
    bv = make_random_bv_medium(1.0, 4, Grid(256, "dirichlet"), 3)
    op = WaveOperator(bv)
    errs = []
    for s in range(100):
        mm = MeasurementOperator(draw_eigenset(op, 64, s, method="dense"), bv)
        rng = np.random.default_rng(1000 + s)
        u = np.zeros(256)
        u[rng.choice(256, 5, replace=False)] = rng.standard_normal(5)
        r = ist_solve(mm, mm.apply(bv.sigma**2 * u), cfg)
        errs.append(np.linalg.norm(r.x - u) / np.linalg.norm(u))
    rate = float(np.mean(np.array(errs) <= 1e-4))
    ok = full_err <= 1e-6 and rate >= 0.95
    report(3, ok, f"complete set err {full_err:.1e} <= 1e-6; 5-sparse 64/256 success {rate:.0%} >= 95% "
                  f"(median err {np.median(errs):.1e})")
    assert ok


def test_criterion_4_compressive_propagation():
    t0 = time.perf_counter()
    med = make_smooth_medium(2, Grid(1024))
    kns = [0.05, 0.1, 0.2, 0.3, 0.4]
    stats = [error_measure(med, kn, 10, n_t=100, seed=0) for kn in kns]
    err = [s.err for s in stats]
    dt = time.perf_counter() - t0
    mono = all(b <= a for a, b in zip(err, err[1:]))
    ok = err[2] <= 0.1 and mono and dt < 600
    report(4, ok, "Err " + ", ".join(f"{k}:{e:.4f}" for k, e in zip(kns, err))
           + f"; Err(0.2) <= 0.1 and non-increasing: {mono}; {dt:.0f}s < 600s")
    info(4, "relative l2 error " + ", ".join(f"{k}:{s.rel_l2:.3f}" for k, s in zip(kns, stats)))
    assert ok


def test_criterion_5_rtm():
    t0 = time.perf_counter()
    prob = two_reflector_configuration(1024)
    r0 = reference_image(prob)
    st = {kn: rtm_error(prob, int(round(kn * 1024)), 5, seed=0, reference=r0) for kn in (0.2, 0.3)}
    e1 = adjoint_test(prob.sigma0_sq, prob.u0_src, prob.T, n_quad=1024)
    e2 = adjoint_test(prob.sigma0_sq, prob.u0_src, prob.T, n_quad=2048)
    dt = time.perf_counter() - t0
    ratio = e1 / e2
    ok_err = st[0.2].err <= 10**-0.5 and st[0.3].err <= 0.1
    ok_adj = e2 <= 1e-4 and 3.0 <= ratio <= 5.0
    ok = ok_err and ok_adj and dt < 900
    report(5, ok, f"Err(0.2) {st[0.2].err:.3f} <= 0.316, Err(0.3) {st[0.3].err:.3f} <= 0.1 "
                  f"[{'ok' if ok_err else 'FAIL'}]; adjoint {e2:.1e} <= 1e-4, refinement ratio "
                  f"{ratio:.2f} ~ 4 [{'ok' if ok_adj else 'FAIL'}]; {dt:.0f}s < 900s")
    info(5, f"relative l2 image error {st[0.2].rel_l2:.3f} (0.2), {st[0.3].rel_l2:.3f} (0.3); "
            f"module-level targets 0.1 / 10^-1.3 also missed" if not ok_err else "")
    assert ok


def test_criterion_6_theory_checks():
    t0 = time.perf_counter()
    suite = random_media_suite(20, 256, "dirichlet", (0.2, 2.0), seed=0)
    gaps = check_gap_bounds(suite)
    gaps_half = check_gap_bounds(suite, modes_fraction=0.5)
    inc = check_incoherence(suite)
    l1_suite = random_media_suite(20, 256, "dirichlet", (0.1, 0.95), seed=1)
    l1 = check_l1_growth(l1_suite, lambda g: bump_data_suite(g, 10, seed=2))
    dt = time.perf_counter() - t0
    ok = gaps.passed and inc.passed and l1.passed and dt < 300
    report(6, ok, f"gaps {gaps.n_violations}/{gaps.n_cases} violations; incoherence "
                  f"{inc.n_violations}/{inc.n_cases}; L1 growth {l1.n_violations}/{l1.n_cases}; {dt:.0f}s < 300s")
    info(6, f"gaps over lowest half of the spectrum: {gaps_half.n_violations}/{gaps_half.n_cases} violations")
    bad = [c for c in inc.cases if c.status == "violation"]
    if bad:
        info(6, "incoherence violations: " + "; ".join(
            f"{c.case} max mu {c.details['max_mu']:.2f} > {c.details['bound']:.2f} at mode "
            f"{c.details['argmax_mode']} ({c.details['n_bad_modes']} modes, "
            f"{c.details['resolved_violations']} in lowest quarter)" for c in bad))
    assert ok


def test_criterion_7_sampling():
    t0 = time.perf_counter()
    uni = check_sampling_proposition(np.full(10, 0.1), 3, 100000, seed=0)
    non = check_sampling_proposition(np.array([0.4, 0.3, 0.2, 0.1]), 2, 100000, seed=1)
    dt = time.perf_counter() - t0
    ok = uni.passed and non.passed and dt < 30
    report(7, ok, f"uniform K/N within 3 sd (margin {uni.worst_margin:.2f}); nonuniform floor K min p "
                  f"(margin {non.worst_margin:.2f}); {dt:.1f}s < 30s")
    assert ok


def test_criterion_8_determinism(tmp_path):
    runs = [
        ["medium", "--n", "128", "--kind", "random_bv", "--seed", "3"],
        ["eig", "--n", "64", "--k", "10", "--seed", "3"],
        ["propagate", "--n", "128", "--k-over-n", "0.4", "--seed", "3"],
        ["sweep", "--n", "64", "--gammas", "2,4", "--k-over-n", "0.3,0.6", "--trials", "2",
         "--n-t", "5", "--seed", "3"],
        ["rtm", "--n", "64", "--k-over-n", "0.5", "--trials", "1", "--seed", "3"],
        ["check", "--n", "32", "--media", "2", "--trials", "1000", "--seed", "3"],
    ]
    diffs = []
    for args in runs:
        blobs = []
        for rep in range(2):
            d = tmp_path / f"{args[0]}{rep}"
            d.mkdir()
            extra = ["--jobs", "2"] if args[0] == "sweep" and rep else []
            subprocess.run([sys.executable, "-m", "cwc.cli", *args, *extra], cwd=d, check=False,
                           capture_output=True)
            files = sorted(p for p in d.rglob("*") if p.is_file() and not p.name.startswith("manifest"))
            blobs.append({p.relative_to(d).as_posix(): p.read_bytes() for p in files})
        a, b = blobs
        if args[0] == "sweep":  # --jobs is recorded in the header; compare the data rows
            a = {k: v.split(b"\ngamma,", 1)[1] for k, v in a.items()}
            b = {k: v.split(b"\ngamma,", 1)[1] for k, v in b.items()}
        if not a or a != b:
            diffs.append(args[0])
    ok = not diffs
    report(8, ok, f"{len(runs)} subcommands rerun with the same seed: "
                  + ("byte-identical data files" if ok else f"differences in {diffs}")
                  + " (sweep also compared serial vs --jobs 2)")
    assert ok
