"""Snapshot reverse-time migration with compressively computed wavefields.

Data ``(d1, d2) = (u(T), u_t(T))`` are synthesized in the perturbed medium
``sigma^2 = sigma0^2 + r``.  The image is the quadrature

    r~(x) = -(1/n_t) sum_i q(x, t_i) d^2 u_inc/dt^2 (x, t_i)

where ``u_inc`` solves the wave equation in ``sigma0`` from the source and
``q`` solves the adjoint final-value problem ``q(T) = d2/sigma0^2``,
``q_t(T) = -d1/sigma0^2``.  Every snapshot of ``u_inc`` and ``q`` is
recovered independently by l1 synthesis from a random eigenset; no time
stepping is involved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolver import EigenSet, draw_eigenset, full_decomposition
from .errors import ParameterError
from .grid_medium import Grid, Medium
from .operators import WaveOperator
from .propagation import (DEFAULT_CFG, CoefficientVector, InitialData, evolve_many,
                          gaussian_bump, project_initial_data, reference_solution)
from .recovery import MeasurementOperator, RecoveryConfig, ist_solve
from .seeding import derive_seed


@dataclass
class RtmProblem:
    """Snapshot migration setup.

    Attributes
    ----------
    sigma0_sq : ndarray
        Smooth reference squared impedance.
    r : ndarray
        Reflectors; the true medium is ``sigma0_sq + r``.
    data : tuple of ndarray
        Snapshot pair ``(d1, d2)`` at time ``T``.
    u0_src : ndarray
        Source displacement (the source velocity is zero).
    T : float
    n_t : int
        Number of imaging snapshots.
    grid : Grid
    """

    sigma0_sq: np.ndarray
    r: np.ndarray
    data: tuple
    u0_src: np.ndarray
    T: float
    n_t: int
    grid: Grid

    def __post_init__(self):
        self.sigma0_sq = np.asarray(self.sigma0_sq, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        n = self.grid.n
        for name, a in (("sigma0_sq", self.sigma0_sq), ("r", self.r), ("u0_src", self.u0_src)):
            if np.shape(a) != (n,):
                raise ParameterError(f"{name} must have length {n}")
        if np.any(self.sigma0_sq <= 0) or np.any(self.sigma0_sq + self.r <= 0):
            raise ParameterError("sigma0^2 + r must be positive")
        if self.n_t < 3:
            raise ParameterError("n_t must be >= 3")
        if self.T <= 0:
            raise ParameterError("T must be positive")

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def medium0(self) -> Medium:
        return Medium(self.grid, np.sqrt(self.sigma0_sq))

    @property
    def medium(self) -> Medium:
        return Medium(self.grid, np.sqrt(self.sigma0_sq + self.r))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t)


def ricker(grid: Grid, center: float, std: float | None = None) -> np.ndarray:
    """Second derivative of a Gaussian, scaled to ``1`` at its center (sign flipped)."""
    if std is None:
        std = 7.0 / grid.n
    d = grid.points - center
    if grid.periodic:
        d = (d + 0.5) % 1.0 - 0.5
    z = (d / std) ** 2
    return (1.0 - z) * np.exp(-0.5 * z)


def synthesize_data(problem: RtmProblem, scattered: bool = False):
    """Full-basis snapshot ``(u(T), u_t(T))`` in the perturbed medium.

    With ``scattered`` the incident field (same source, reference medium) is
    subtracted, leaving only the reflected and transmitted perturbation.
    """
    src = InitialData.at_rest(problem.u0_src)
    d1, d2 = reference_solution(problem.medium, src, problem.T)
    if scattered:
        i1, i2 = reference_solution(problem.medium0, src, problem.T)
        d1, d2 = d1 - i1, d2 - i2
    return d1, d2


def mute_window(grid: Grid, center: float, halfwidth: float, taper: float) -> np.ndarray:
    """Weights that are 0 within ``halfwidth`` of ``center`` and rise to 1 over ``taper`` (cosine)."""
    d = np.abs(grid.points - center)
    if grid.periodic:
        d = np.minimum(d, 1.0 - d)
    ramp = np.clip((d - halfwidth) / taper, 0.0, 1.0) if taper > 0 else (d > halfwidth).astype(float)
    return 0.5 - 0.5 * np.cos(np.pi * ramp)


def smooth_reference_sq(grid: Grid, contrast_sq: float) -> np.ndarray:
    """Squared one-oscillation smooth profile with ``max/min = contrast_sq``."""
    if contrast_sq < 1:
        raise ParameterError("contrast must be >= 1")
    R = np.sqrt(contrast_sq)
    # (2.5 s - 1.5) / (1.5 s - 0.5) = R
    s = (1.5 - 0.5 * R) / (2.5 - 1.5 * R)
    sig = (s + 1) / 2 + (s - 1) / 2 * (np.sin(2 * np.pi * grid.points) + 3)
    return sig**2


def two_reflector_configuration(n: int = 1024, n_t: int | None = None, contrast_sq: float = 1.4,
                        source: float = 0.2, reflectors=((0.6, -0.6), (0.8, 0.6)),
                        mute: float | None = 0.05, scattered: bool = False) -> RtmProblem:
    """One-oscillation smooth reference medium with two Gaussian reflectors.

    ``sigma0`` follows the smooth-medium profile
    ``(s+1)/2 + (s-1)/2 (sin(2 pi x) + 3)`` with ``s`` chosen so that
    ``max sigma0^2 / min sigma0^2 = contrast_sq``;
    reflectors are Gaussians of std ``7/n`` at the given ``(center, amplitude)``
    pairs; the source is a :func:`ricker` wavelet of std ``7/n``; ``T`` is the
    crossing time of the reference medium and ``n_t`` defaults to ``n // 10``.

    At ``T`` the two halves of the direct (transmitted) wave meet again at the
    source, while a reflection from ``x_r`` sits near ``2 x_r - source``.
    Unless ``mute`` is ``None`` the data are zeroed within ``mute`` of the
    source (cosine taper of the same width), keeping only reflected energy.
    """
    grid = Grid(n, "periodic")
    s0 = smooth_reference_sq(grid, contrast_sq)
    r = np.zeros(n)
    for c, a in reflectors:
        r += gaussian_bump(grid, c, amplitude=a)
    u0 = ricker(grid, source)
    T = Medium(grid, np.sqrt(s0)).crossing_time()
    n_t = max(3, n // 10) if n_t is None else n_t
    prob = RtmProblem(s0, r, (np.zeros(n), np.zeros(n)), u0, T, n_t, grid)
    d1, d2 = synthesize_data(prob, scattered=scattered)
    if mute is not None:
        w = mute_window(grid, source, mute, mute)
        d1, d2 = w * d1, w * d2
    prob.data = (d1, d2)
    return prob


def adjoint_final_conditions(d1, d2, sigma0_sq):
    """``q(T) = d2 / sigma0^2`` and ``q_t(T) = -d1 / sigma0^2``."""
    d1, d2, s = (np.asarray(a, dtype=float) for a in (d1, d2, sigma0_sq))
    if not d1.shape == d2.shape == s.shape:
        raise ParameterError("d1, d2 and sigma0_sq must have equal shapes")
    return d2 / s, -d1 / s


def _final_value_coefficients(eigenset: EigenSet, medium0: Medium, qT, qtT, T) -> CoefficientVector:
    """Coefficients at ``t = 0`` of the solution with final state ``(qT, qtT)``."""
    c = project_initial_data(eigenset, medium0, InitialData(qT, qtT))
    d, v = evolve_many(c, [-T])
    return CoefficientVector(c.omegas, d[:, 0], v[:, 0])


def evolve_final_value(medium0: Medium, qT, qtT, t, T: float,
                       eigenset: EigenSet | None = None, cfg: RecoveryConfig | None = None):
    """Solution at time(s) ``t`` of the wave equation with data given at ``T``.

    Without ``eigenset`` the full basis is used; otherwise the field is
    recovered by l1 synthesis from the eigenset's coefficients.
    """
    if np.any(np.asarray(t) > T * (1 + 1e-12)):
        raise ParameterError("t must not exceed T")
    full = eigenset is None
    es = full_decomposition(WaveOperator(medium0)) if full else eigenset
    c = project_initial_data(es, medium0, InitialData(qT, qtT))
    disp, _ = evolve_many(c, np.atleast_1d(np.asarray(t, dtype=float)) - T)
    if full:
        out = es.vectors @ disp
    else:
        out = ist_solve(MeasurementOperator(es, medium0), disp, DEFAULT_CFG if cfg is None else cfg).x
    return out[:, 0] if np.ndim(t) == 0 else out


def second_time_derivative(snapshots, dt: float):
    """Second derivative along axis 1: 3-point central inside, one-sided 4-point at the ends."""
    u = np.asarray(snapshots, dtype=float)
    if u.shape[1] < 4:
        raise ParameterError("need at least 4 snapshots")
    out = np.empty_like(u)
    out[:, 1:-1] = u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]
    out[:, 0] = 2 * u[:, 0] - 5 * u[:, 1] + 4 * u[:, 2] - u[:, 3]
    out[:, -1] = 2 * u[:, -1] - 5 * u[:, -2] + 4 * u[:, -3] - u[:, -4]
    return out / dt**2


def _fields(problem: RtmProblem, eigenset: EigenSet, cfg: RecoveryConfig | None, full: bool):
    med0 = problem.medium0
    times = problem.times
    src = project_initial_data(eigenset, med0, InitialData.at_rest(problem.u0_src))
    u_c, _ = evolve_many(src, times)
    qT, qtT = adjoint_final_conditions(*problem.data, problem.sigma0_sq)
    q0 = _final_value_coefficients(eigenset, med0, qT, qtT, problem.T)
    q_c, _ = evolve_many(q0, times)
    if full:
        V = eigenset.vectors
        return V @ u_c, V @ q_c
    m = MeasurementOperator(eigenset, med0)
    cfg = DEFAULT_CFG if cfg is None else cfg
    return ist_solve(m, u_c, cfg).x, ist_solve(m, q_c, cfg).x


def image_from_fields(u_inc, q, dt: float):
    """``-(1/n_t) sum_i q(t_i) d^2 u_inc/dt^2 (t_i)``."""
    return -np.mean(q * second_time_derivative(u_inc, dt), axis=1)


def migrate(problem: RtmProblem, k: int, seed: int, cfg: RecoveryConfig | None = None,
            method: str = "dense", eigenset: EigenSet | None = None) -> np.ndarray:
    """Compressive snapshot migration image from ``k`` random eigenvectors."""
    n = problem.n
    if int(k) != k or not 1 <= k <= n:
        raise ParameterError(f"k must be an integer in [1, {n}]")
    if eigenset is None:
        eigenset = draw_eigenset(WaveOperator(problem.medium0), int(k), seed, method=method)
    u, q = _fields(problem, eigenset, cfg, full=False)
    return image_from_fields(u, q, problem.times[1] - problem.times[0])


def reference_image(problem: RtmProblem) -> np.ndarray:
    """Image from the full eigenbasis (direct synthesis, no l1 solve)."""
    es = full_decomposition(WaveOperator(problem.medium0))
    u, q = _fields(problem, es, None, full=True)
    return image_from_fields(u, q, problem.times[1] - problem.times[0])


@dataclass
class RtmErrorStats:
    """``err``: normalized error with ``||r~0||`` in the denominator; ``rel_l2``: mean relative error."""

    k: int
    err: float
    rel_l2: float
    per_set_err: np.ndarray
    per_set_rel: np.ndarray
    seeds: list


def rtm_error(problem: RtmProblem, k: int, trials: int, seed: int = 0,
              reference: np.ndarray | None = None, cfg: RecoveryConfig | None = None,
              method: str = "dense") -> RtmErrorStats:
    """``Err^2 = sum_sets sum_j (r~0 - r~)^2 / (n |sets| ||r~0||)`` and relative l2 error."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    r0 = reference_image(problem) if reference is None else reference
    nrm = float(np.linalg.norm(r0))
    seeds = [derive_seed(seed, "rtm", s) for s in range(trials)]
    e2 = np.array([float(np.sum((r0 - migrate(problem, k, sd, cfg, method)) ** 2)) for sd in seeds])
    n = problem.n
    return RtmErrorStats(int(k), float(np.sqrt(e2.sum() / (n * trials * nrm))),
                         float(np.mean(np.sqrt(e2) / nrm)),
                         np.sqrt(e2 / (n * nrm)), np.sqrt(e2) / nrm, seeds)


def peak_positions(image, count: int = 2, periodic: bool = True) -> np.ndarray:
    """Indices of the ``count`` largest local maxima of ``|image|``."""
    a = np.abs(np.asarray(image, dtype=float))
    if periodic:
        left, right = np.roll(a, 1), np.roll(a, -1)
    else:
        left = np.concatenate(([-np.inf], a[:-1]))
        right = np.concatenate((a[1:], [-np.inf]))
    idx = np.nonzero((a >= left) & (a > right))[0]
    return idx[np.argsort(a[idx])[::-1][:count]]


# -- adjoint test ---------------------------------------------------------

def _trapezoid_weights(T: float, m: int) -> tuple:
    s = np.linspace(0.0, T, m)
    w = np.full(m, T / (m - 1))
    w[0] = w[-1] = 0.5 * T / (m - 1)
    return s, w


def forward_linearized(medium0: Medium, u0_src, r, T: float, n_quad: int, chunk: int = 512):
    """``F r``: snapshot ``(u(T), u_t(T))`` of ``sigma0^2 u_tt - u_xx = -r d^2u_inc/dt^2``.

    Duhamel's principle in the full eigenbasis with trapezoid quadrature on
    ``n_quad`` points in ``[0, T]``; zero initial data.
    """
    es = full_decomposition(WaveOperator(medium0))
    V, w = es.vectors, es.omegas
    c0 = V.T @ (medium0.sigma**2 * np.asarray(u0_src, dtype=float))
    s, wt = _trapezoid_weights(T, n_quad)
    a = np.zeros(V.shape[1])
    ad = np.zeros(V.shape[1])
    for lo in range(0, n_quad, chunk):
        sl = slice(lo, lo + chunk)
        acc = V @ (-(w**2)[:, None] * np.cos(np.outer(w, s[sl])) * c0[:, None])
        g = V.T @ (-np.asarray(r)[:, None] * acc)
        tau = T - s[sl]
        wt_g = g * wt[sl]
        with np.errstate(invalid="ignore", divide="ignore"):
            sinc = np.where(w[:, None] > 0,
                            np.sin(np.outer(w, tau)) / np.where(w > 0, w, 1.0)[:, None],
                            tau[None, :])
        a += np.sum(sinc * wt_g, axis=1)
        ad += np.sum(np.cos(np.outer(w, tau)) * wt_g, axis=1)
    return V @ a, V @ ad


def imaging_operator(medium0: Medium, u0_src, d1, d2, T: float, n_quad: int, chunk: int = 512):
    """``F^*(d1, d2) = -int_0^T q d^2u_inc/dt^2 dt`` in the full basis, trapezoid on ``n_quad`` points."""
    es = full_decomposition(WaveOperator(medium0))
    V, w = es.vectors, es.omegas
    s2 = medium0.sigma**2
    c0 = V.T @ (s2 * np.asarray(u0_src, dtype=float))
    qT, qtT = adjoint_final_conditions(d1, d2, s2)
    q0 = _final_value_coefficients(es, medium0, qT, qtT, T)
    s, wt = _trapezoid_weights(T, n_quad)
    out = np.zeros(V.shape[0])
    for lo in range(0, n_quad, chunk):
        sl = slice(lo, lo + chunk)
        qd, _ = evolve_many(q0, s[sl])
        acc = V @ (-(w**2)[:, None] * np.cos(np.outer(w, s[sl])) * c0[:, None])
        out -= (V @ qd * acc) @ wt[sl]
    return out


def smooth_random_field(grid: Grid, rng, width: float = 7.0) -> np.ndarray:
    """Gaussian-filtered white noise (filter std ``width`` cells), unit max."""
    from scipy.ndimage import gaussian_filter1d

    mode = "wrap" if grid.periodic else "reflect"
    f = gaussian_filter1d(rng.standard_normal(grid.n), width, mode=mode)
    return f / np.max(np.abs(f))


def adjoint_test(sigma0_sq, u0_src, T: float, n_quad: int = 4096, seed: int = 0,
                 grid: Grid | None = None, r=None, d=None) -> float:
    """Relative discrepancy ``|<F r, d> - <r, F^* d>| / max(|.|, |.|)``.

    ``F`` uses ``4 n_quad`` trapezoid nodes and ``F^*`` uses ``n_quad``, so the
    discrepancy measures the second-order time-quadrature error.  Random
    ``r`` and ``d = (d1, d2)`` are smooth fields drawn from ``seed`` unless
    given.
    """
    sigma0_sq = np.asarray(sigma0_sq, dtype=float)
    grid = Grid(sigma0_sq.size, "periodic") if grid is None else grid
    med0 = Medium(grid, np.sqrt(sigma0_sq))
    rng = np.random.default_rng(seed)
    r = smooth_random_field(grid, rng) if r is None else np.asarray(r, dtype=float)
    if d is None:
        d = (smooth_random_field(grid, rng), smooth_random_field(grid, rng))
    f1, f2 = forward_linearized(med0, u0_src, r, T, 4 * n_quad)
    lhs = float(f1 @ d[0] + f2 @ d[1])
    rhs = float(r @ imaging_operator(med0, u0_src, d[0], d[1], T, n_quad))
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else abs(lhs - rhs) / scale
