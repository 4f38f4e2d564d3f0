"""Uniform 1D grids and impedance media.

A :class:`Grid` fixes the number of points and the boundary condition; a
:class:`Medium` carries the sampled impedance ``sigma`` together with its
summary statistics.  Periodic grids are vertex-centered (``x_j = j/n``);
Dirichlet and Neumann grids are cell-centered (``x_j = (j + 1/2)/n``) so the
boundary sits half a cell outside the first and last unknowns.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ParameterError

BOUNDARY_CONDITIONS = ("periodic", "dirichlet", "neumann")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the unit interval.

    Parameters
    ----------
    n : int
        Number of unknowns, ``n >= 8``; a power of two when periodic.
    bc : str
        One of ``"periodic"``, ``"dirichlet"``, ``"neumann"``.
    """

    n: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ParameterError(f"unknown boundary condition {self.bc!r}")
        if int(self.n) != self.n or self.n < 8:
            raise ParameterError(f"grid needs n >= 8, got {self.n}")
        if self.bc == "periodic" and (self.n & (self.n - 1)) != 0:
            raise ParameterError(f"periodic grid needs a power-of-two n, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def points(self) -> np.ndarray:
        j = np.arange(self.n, dtype=float)
        if self.periodic:
            return j / self.n
        return (j + 0.5) / self.n

    def refined(self) -> "Grid":
        """The same grid with twice as many points."""
        return Grid(2 * self.n, self.bc)


def _log_variation(sigma: np.ndarray, periodic: bool) -> float:
    ls = np.log(sigma)
    var = float(np.sum(np.abs(np.diff(ls))))
    if periodic:
        var += float(abs(ls[0] - ls[-1]))
    return var


class Medium:
    """Impedance sampled on a grid.

    Attributes
    ----------
    grid : Grid
    sigma : ndarray, read-only
    sigma_min, sigma_max : float
    var_log_sigma : float
        Discrete total variation of ``log sigma`` (wrap-around term included
        iff periodic).
    """

    def __init__(self, grid: Grid, sigma):
        sigma = np.array(sigma, dtype=float)
        if sigma.shape != (grid.n,):
            raise ParameterError(f"sigma has shape {sigma.shape}, expected ({grid.n},)")
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ParameterError("sigma must be finite and strictly positive")
        sigma.flags.writeable = False
        self.grid = grid
        self.sigma = sigma
        self.sigma_min = float(sigma.min())
        self.sigma_max = float(sigma.max())
        self.var_log_sigma = _log_variation(sigma, grid.periodic)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def bc(self) -> str:
        return self.grid.bc

    @property
    def contrast(self) -> float:
        return self.sigma_max / self.sigma_min

    def integral(self) -> float:
        """Approximate ``int_0^1 sigma dx`` (periodic trapezoid / midpoint rule)."""
        return float(np.sum(self.sigma)) / self.n

    def crossing_time(self) -> float:
        """Time for a wave (speed ``1/sigma``) to cross the unit interval."""
        return self.integral()

    def t_sharp(self) -> float:
        """Lower bound ``1/sigma_min`` on the crossing time of a transmitted bump."""
        return 1.0 / self.sigma_min

    def key(self) -> tuple:
        """Hashable content key (used for spectrum caching)."""
        return (self.grid.n, self.grid.bc, self.sigma.tobytes())

    def with_bc(self, bc: str) -> "Medium":
        return Medium(Grid(self.n, bc), self.sigma)

    def refined(self) -> "Medium":
        """Resample on the doubly refined grid by linear interpolation."""
        g2 = self.grid.refined()
        if self.grid.periodic:
            s = self.sigma
            fine = np.empty(g2.n)
            fine[0::2] = s
            fine[1::2] = 0.5 * (s + np.roll(s, -1))
        else:
            fine = np.interp(g2.points, self.grid.points, self.sigma)
        return Medium(g2, fine)

    def __repr__(self):
        return (f"Medium(n={self.n}, bc={self.bc!r}, sigma in [{self.sigma_min:.4g}, "
                f"{self.sigma_max:.4g}], Var(log sigma)={self.var_log_sigma:.4g})")


def total_variation_log(medium: Medium) -> float:
    """``Var(log sigma)`` of a medium, in grid units (sum of absolute log jumps)."""
    return medium.var_log_sigma


def _gamma_contrast(gamma: float) -> float:
    return 1.0 + 9.0 * (gamma - 1.0) / 19.0


def make_smooth_medium(gamma: float, grid: Grid) -> Medium:
    """Sinusoidal medium with ``gamma`` oscillations and contrast growing with gamma.

    ``sigma[j] = (smax+1)/2 + (smax-1)/2 * (sin(2 pi gamma j/n) + 3)`` with
    ``smax = 1 + 9 (gamma-1)/19``; ``gamma = 1`` gives a constant medium.
    """
    if not (1 <= gamma <= 20):
        raise ParameterError(f"gamma must lie in [1, 20], got {gamma}")
    smax = _gamma_contrast(gamma)
    j = np.arange(grid.n, dtype=float)
    sigma = (smax + 1) / 2 + (smax - 1) / 2 * (np.sin(2 * np.pi * gamma * j / grid.n) + 3)
    return Medium(grid, sigma)


def make_sinusoidal_medium(grid: Grid, cycles: int, contrast: float, mean: float = 1.0) -> Medium:
    """``sigma = mean * (1 + b sin(2 pi cycles x))`` with ``(1+b)/(1-b) = contrast``."""
    if contrast < 1:
        raise ParameterError("contrast must be >= 1")
    b = (contrast - 1.0) / (contrast + 1.0)
    return Medium(grid, mean * (1.0 + b * np.sin(2 * np.pi * cycles * grid.points)))


def piecewise_plateaus(gamma: int, seed: int) -> np.ndarray:
    """Plateau values of the piecewise medium: ``gamma + 1`` values spanning ``[1, smax]``."""
    rng = np.random.default_rng(seed)
    smax = _gamma_contrast(gamma)
    vals = rng.uniform(1.0, max(smax, 1.0), size=gamma + 1)
    lo, hi = vals.min(), vals.max()
    if smax == 1.0 or hi == lo:
        return np.ones(gamma + 1)
    return 1.0 + (vals - lo) * (smax - 1.0) / (hi - lo)


def make_piecewise_medium(gamma: int, grid: Grid, seed: int) -> Medium:
    """Piecewise-constant medium with ``gamma`` equispaced jumps, Gaussian-smoothed.

    Plateau values are random in ``[1, smax]`` (affinely stretched to hit both
    ends); the profile is smoothed with a Gaussian of standard deviation five
    cells, truncated at six standard deviations.
    """
    if int(gamma) != gamma or not (1 <= gamma <= 20):
        raise ParameterError(f"gamma must be an integer in [1, 20], got {gamma}")
    gamma = int(gamma)
    plateaus = piecewise_plateaus(gamma, seed)
    x = grid.points
    which = np.minimum((x * (gamma + 1)).astype(int), gamma)
    raw = plateaus[which]
    mode = "wrap" if grid.periodic else "reflect"
    sigma = gaussian_filter1d(raw, 5.0, mode=mode, truncate=6.0)
    return Medium(grid, sigma)


def make_random_bv_medium(var_budget: float, n_jumps: int, grid: Grid, seed: int,
                          smoothing: float = 0.0) -> Medium:
    """Random piecewise-constant log-impedance with prescribed total variation.

    Jump locations are distinct random cell interfaces, jump sizes are
    standard normal; the log-profile is then scaled so that
    ``Var(log sigma)`` equals ``var_budget`` (up to rounding, never above).
    ``sigma`` has geometric mean one.  ``smoothing`` (in cells) optionally
    applies a Gaussian filter before the scaling.
    """
    if var_budget < 0:
        raise ParameterError("var_budget must be nonnegative")
    if n_jumps < 0 or n_jumps > grid.n - 1:
        raise ParameterError(f"n_jumps must lie in [0, {grid.n - 1}]")
    rng = np.random.default_rng(seed)
    ell = np.zeros(grid.n)
    if n_jumps and var_budget > 0:
        pos = np.sort(rng.choice(np.arange(1, grid.n), size=n_jumps, replace=False))
        jumps = rng.standard_normal(n_jumps)
        for p, jv in zip(pos, jumps):
            ell[p:] += jv
        if smoothing > 0:
            ell = gaussian_filter1d(ell, smoothing, mode="wrap" if grid.periodic else "nearest",
                                    truncate=6.0)
        ell -= ell.mean()
        v = _log_variation(np.exp(ell), grid.periodic)
        if v > 0:
            ell *= var_budget / v * (1.0 - 1e-12)
    return Medium(grid, np.exp(ell - ell.mean()))


def constant_medium(grid: Grid, value: float = 1.0) -> Medium:
    return Medium(grid, np.full(grid.n, float(value)))


def write_medium_csv(medium: Medium, path) -> None:
    """Write ``# n,bc`` followed by one sigma value per line (17 significant digits)."""
    lines = [f"# {medium.n},{medium.bc}"]
    lines += [f"{v:.17g}" for v in medium.sigma]
    Path(path).write_text("\n".join(lines) + "\n")


def read_medium_csv(path) -> Medium:
    text = Path(path).read_text().splitlines()
    header = None
    values = []
    for line in text:
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s.lstrip("#").strip()
            parts = body.split(",")
            if len(parts) == 2 and parts[0].strip().isdigit():
                header = (int(parts[0]), parts[1].strip())
            continue
        values.append(float(s))
    if header is None:
        raise ParameterError(f"{path}: missing '# n,bc' header")
    n, bc = header
    if len(values) != n:
        raise ParameterError(f"{path}: header says n={n} but found {len(values)} values")
    return Medium(Grid(n, bc), np.array(values))
