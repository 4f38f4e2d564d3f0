"""Compressive wave propagation: project, evolve, recover.

Solves ``sigma^2 u_tt = u_xx`` (semi-discretely, ``u_tt = Sigma^-2 L u``) by

1. drawing a random eigenset,
2. projecting the initial data onto it (``c0 = V^T Sigma^2 u0``, ``c1 = V^T Sigma^2 u1``),
3. evolving ``c(t) = cos(w t) c0 + sin(w t)/w c1`` exactly,
4. recovering ``u(t)`` from ``c(t)`` by weighted-l1 minimization.

The full-basis expansion (:func:`reference_solution`) is the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolver import EigenSet, draw_eigenset, full_decomposition
from .errors import ParameterError
from .grid_medium import Grid, Medium
from .operators import WaveOperator
from .recovery import MeasurementOperator, RecoveryConfig, ist_solve
from .seeding import derive_seed

DEFAULT_CFG = RecoveryConfig(epsilon=1e-8, relative_epsilon=True, accelerate=True,
                             update_every=50, inner_tol=1e-5)


@dataclass(frozen=True)
class InitialData:
    """Displacement ``u0`` and velocity ``u1`` on the grid."""

    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        u1 = np.asarray(self.u1, dtype=float)
        if u0.ndim != 1 or u0.shape != u1.shape:
            raise ParameterError(f"u0 and u1 must be vectors of equal length, got {u0.shape}, {u1.shape}")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "u1", u1)

    @property
    def n(self) -> int:
        return self.u0.shape[0]

    @classmethod
    def at_rest(cls, u0) -> "InitialData":
        u0 = np.asarray(u0, dtype=float)
        return cls(u0, np.zeros_like(u0))


def gaussian_bump(grid: Grid, center: float = 0.5, std: float | None = None,
                  amplitude: float = 1.0) -> np.ndarray:
    """Gaussian of standard deviation ``std`` (default ``7/n``) centered at ``center``.

    Distances wrap around on periodic grids.
    """
    if std is None:
        std = 7.0 / grid.n
    d = grid.points - center
    if grid.periodic:
        d = (d + 0.5) % 1.0 - 0.5
    return amplitude * np.exp(-0.5 * (d / std) ** 2)


@dataclass(frozen=True)
class CoefficientVector:
    """Eigen-coefficients of a state: displacement ``c0`` and velocity ``c1``."""

    omegas: np.ndarray
    c0: np.ndarray
    c1: np.ndarray


def project_initial_data(eigenset: EigenSet, medium: Medium, data: InitialData) -> CoefficientVector:
    """``c0[w] = sum_j sigma_j^2 v_w[j] u0[j]`` and likewise ``c1`` from ``u1``."""
    if data.n != medium.n or eigenset.n != medium.n:
        raise ParameterError("data, eigenset and medium sizes differ")
    V = eigenset.vectors
    s2 = medium.sigma**2
    return CoefficientVector(eigenset.omegas, V.T @ (s2 * data.u0), V.T @ (s2 * data.u1))


def _propagator(omegas, t):
    """``cos(w t)``, ``sin(w t)/w`` (limit ``t`` at ``w = 0``) and ``-w sin(w t)``."""
    w = omegas[:, None]
    t = np.atleast_1d(np.asarray(t, dtype=float))[None, :]
    cos = np.cos(w * t)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(w > 0, np.sin(w * t) / np.where(w > 0, w, 1.0), t)
    msin = -w * np.sin(w * t)
    return cos, sinc, msin


def evolve_many(c: CoefficientVector, times):
    """Displacement and velocity coefficients at each time, shape ``(k, n_t)``."""
    cos, sinc, msin = _propagator(c.omegas, times)
    disp = cos * c.c0[:, None] + sinc * c.c1[:, None]
    vel = msin * c.c0[:, None] + cos * c.c1[:, None]
    return disp, vel


def evolve_coefficients(c: CoefficientVector, t: float) -> CoefficientVector:
    """State coefficients at time ``t``: ``c(t) = cos(w t) c0 + sin(w t)/w c1``.

    Negative ``t`` evolves backward.  The returned ``c1`` holds ``c'(t)``.
    """
    disp, vel = evolve_many(c, [t])
    return CoefficientVector(c.omegas, disp[:, 0], vel[:, 0])


def _squeeze(a, t):
    return a[:, 0] if np.ndim(t) == 0 else a


def reference_solution(medium: Medium, data: InitialData, t):
    """Full-basis solution ``(u, u_t)`` at time(s) ``t``.

    Returns arrays of shape ``(n,)`` for scalar ``t`` or ``(n, n_t)``.
    """
    es = full_decomposition(WaveOperator(medium))
    c = project_initial_data(es, medium, data)
    disp, vel = evolve_many(c, t)
    V = es.vectors
    return _squeeze(V @ disp, t), _squeeze(V @ vel, t)


def energy(medium: Medium, u, ut) -> float:
    """Discrete energy ``h (sum sigma^2 u_t^2 - u^T L u)`` (conserved in time)."""
    op = WaveOperator(medium)
    h = medium.grid.spacing
    return h * float(np.sum(medium.sigma**2 * ut**2) - u @ op.apply_laplacian(u))


def essential_support(u, sigma, eta: float = 0.0) -> int:
    """Size ``S_eta`` of the essential support of ``u``.

    The largest level ``g`` with ``sum_{|u_j| <= g} sigma_j |u_j| <= eta`` is
    found by sorting; the entries above that level are counted.
    """
    a = np.abs(np.asarray(u, dtype=float))
    w = np.asarray(sigma, dtype=float) * a
    order = np.argsort(a, kind="stable")
    a_s = a[order]
    cum = np.cumsum(w[order])
    # entries with equal |u| are discarded together
    last_of_level = np.append(a_s[1:] != a_s[:-1], True)
    ok = (cum <= eta) & last_of_level
    if not ok.any():
        return int(a.size)
    dropped = int(np.nonzero(ok)[0][-1]) + 1
    return int(a.size - dropped)


def _recover(m: MeasurementOperator, coeffs, cfg: RecoveryConfig):
    return ist_solve(m, coeffs, cfg)


def compressive_solve(medium: Medium, data: InitialData, t, k: int, seed: int,
                      cfg: RecoveryConfig | None = None, method: str = "dense",
                      eigenset: EigenSet | None = None, n_components: int = 1,
                      return_velocity: bool = False):
    """Recover ``u(t)`` from ``k`` randomly drawn eigen-coefficients.

    Parameters
    ----------
    t : float or array of times
    k : int
        Number of eigenvectors, ``k <= n``.
    seed : int
        Seed of the eigenset draw.
    cfg : RecoveryConfig, optional
        Defaults to ``epsilon = 1e-8 ||c||``.
    method : {"dense", "shift_invert"}
        Eigenpair resolver used by :func:`~cwc.eigensolver.draw_eigenset`.
    eigenset : EigenSet, optional
        Reuse a previously drawn set instead of drawing.
    n_components : int
        Split the initial data into this many equal-mass windows, solve
        each separately and sum (linearity).
    return_velocity : bool
        Also recover ``u_t(t)`` (second l1 solve on ``c'(t)``).
    """
    if k > medium.n:
        raise ParameterError(f"k={k} exceeds n={medium.n}")
    cfg = DEFAULT_CFG if cfg is None else cfg
    if eigenset is None:
        eigenset = draw_eigenset(WaveOperator(medium), k, seed, method=method)
    m = MeasurementOperator(eigenset, medium)
    parts = [data] if n_components == 1 else split_initial_data(data, n_components)
    u = 0.0
    ut = 0.0
    for part in parts:
        c = project_initial_data(eigenset, medium, part)
        disp, vel = evolve_many(c, t)
        u = u + _recover(m, disp, cfg).x
        if return_velocity:
            ut = ut + _recover(m, vel, cfg).x
    u = _squeeze(u, t)
    if return_velocity:
        return u, _squeeze(ut, t)
    return u


@dataclass
class ErrorStats:
    """Error of compressive propagation against the full-basis reference.

    ``err`` is the normalized quantity
    ``sqrt( sum_sets sum_i sum_j e^2 / (n n_t |sets| ||u||) )`` with ``||u||``
    the l2 norm of the space-time reference array; ``rel_l2`` is the mean
    over sets of the plain relative l2 error.
    """

    k: int
    err: float
    rel_l2: float
    per_set_err: np.ndarray
    per_set_rel: np.ndarray
    seeds: list


def crossing_times(medium: Medium, n_t: int) -> np.ndarray:
    """``n_t`` equispaced times in ``[0, T]``, ``T`` the domain-crossing time."""
    return np.linspace(0.0, medium.crossing_time(), n_t)


def error_measure(medium: Medium, k_over_n: float, trials: int, n_t: int = 100,
                  seed: int = 0, data: InitialData | None = None,
                  cfg: RecoveryConfig | None = None, method: str = "dense",
                  times=None) -> ErrorStats:
    """Average recovery error over ``trials`` random eigensets."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    n = medium.n
    k = max(1, min(n, int(round(k_over_n * n))))
    if data is None:
        data = InitialData.at_rest(gaussian_bump(medium.grid))
    if times is None:
        times = crossing_times(medium, n_t)
    times = np.asarray(times, dtype=float)
    u_ref, _ = reference_solution(medium, data, times)
    unorm = float(np.linalg.norm(u_ref))
    nt = times.size
    e2 = []
    seeds = [derive_seed(seed, "eigenset", s) for s in range(trials)]
    for sd in seeds:
        u = compressive_solve(medium, data, times, k, sd, cfg=cfg, method=method)
        e2.append(float(np.sum((u_ref - u) ** 2)))
    e2 = np.array(e2)
    per_set = np.sqrt(e2 / (n * nt * unorm))
    per_rel = np.sqrt(e2) / unorm
    err = float(np.sqrt(e2.sum() / (n * nt * trials * unorm)))
    return ErrorStats(k, err, float(per_rel.mean()), per_set, per_rel, seeds)


def split_initial_data(data: InitialData, L: int) -> list:
    """Split into ``L`` contiguous windows of equal l1 mass of ``|u0| + |u1|``.

    Components are masked copies, so they sum to ``data`` exactly.
    """
    if int(L) != L or L < 1:
        raise ParameterError("L must be a positive integer")
    L = int(L)
    if L == 1:
        return [data]
    mass = np.abs(data.u0) + np.abs(data.u1)
    nz = np.count_nonzero(mass)
    if nz < L:
        raise ParameterError(f"cannot split data with {nz} nonzero entries into {L} parts")
    cum = np.cumsum(mass)
    total = cum[-1]
    cuts = [0]
    for i in range(1, L):
        j = int(np.searchsorted(cum, total * i / L, side="left")) + 1
        cuts.append(min(max(j, cuts[-1] + 1), data.n - 1))
    cuts.append(data.n)
    parts = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mask = np.zeros(data.n, dtype=bool)
        mask[a:b] = True
        parts.append(InitialData(np.where(mask, data.u0, 0.0), np.where(mask, data.u1, 0.0)))
    if any(not np.any(np.abs(p.u0) + np.abs(p.u1)) for p in parts):
        raise ParameterError(f"data cannot be split into {L} nonempty windows")
    return parts


def time_split_solve(medium: Medium, data: InitialData, t: float, n_intervals: int, k: int,
                     seed: int, cfg: RecoveryConfig | None = None, method: str = "dense",
                     eigenset: EigenSet | None = None, return_velocity: bool = False):
    """Propagate to ``t`` through ``n_intervals`` compressive restarts.

    At every restart both ``u`` and ``u_t`` are recovered (two l1 solves)
    and re-projected as new initial data; the same eigenset is used on
    every interval.
    """
    if int(n_intervals) != n_intervals or n_intervals < 1:
        raise ParameterError("n_intervals must be a positive integer")
    cfg = DEFAULT_CFG if cfg is None else cfg
    if eigenset is None:
        eigenset = draw_eigenset(WaveOperator(medium), k, seed, method=method)
    m = MeasurementOperator(eigenset, medium)
    dt = float(t) / n_intervals
    state = data
    u = ut = None
    for _ in range(int(n_intervals)):
        c = project_initial_data(eigenset, medium, state)
        disp, vel = evolve_many(c, [dt])
        both = ist_solve(m, np.column_stack([disp[:, 0], vel[:, 0]]), cfg).x
        u, ut = both[:, 0], both[:, 1]
        state = InitialData(u, ut)
    if return_velocity:
        return u, ut
    return u
