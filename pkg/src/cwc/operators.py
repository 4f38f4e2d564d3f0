"""Discrete Laplacian ``L``, weighted operator ``Sigma^-2 L`` and its symmetrization.

Periodic media use the Fourier (spectral) Laplacian with symbol
``-4 pi^2 m^2``; Dirichlet and Neumann media use the 3-point stencil on a
cell-centered grid with ghost-point closures (odd reflection for Dirichlet,
even reflection for Neumann).  Every operator accepts a vector of length
``n`` or a block of shape ``(n, m)`` (columns are independent vectors).
"""
from __future__ import annotations

import logging

import numpy as np

from . import _kernels
from .errors import ParameterError, SizeGuardError
from .grid_medium import Medium

log = logging.getLogger(__name__)

DENSE_LIMIT = 8192


class WaveOperator:
    """Matrix-free ``L``, ``Sigma^-2 L`` and ``W = Sigma^-1 L Sigma^-1`` for a medium.

    Parameters
    ----------
    medium : Medium
    form : {"spectral", "fd"}, optional
        Defaults to ``"spectral"`` for periodic grids and ``"fd"`` otherwise;
        any other combination is rejected.
    """

    def __init__(self, medium: Medium, form: str | None = None):
        expected = "spectral" if medium.grid.periodic else "fd"
        if form is None:
            form = expected
        if form != expected:
            raise ParameterError(f"form {form!r} is incompatible with bc {medium.bc!r}")
        self.medium = medium
        self.form = form
        n = medium.n
        self.n = n
        self._inv_sigma = 1.0 / medium.sigma
        if form == "spectral":
            m = np.arange(n // 2 + 1, dtype=float)
            self._symbol = -4.0 * np.pi**2 * m**2
        else:
            main = np.full(n, -2.0)
            edge = -3.0 if medium.bc == "dirichlet" else -1.0
            main[0] = main[-1] = edge
            self._lap_diag = main * n * n
            self._lap_off = np.full(n - 1, float(n * n))
            s = medium.sigma
            self.w_diag = self._lap_diag / s**2
            self.w_off = self._lap_off / (s[:-1] * s[1:])

    # -- shapes -----------------------------------------------------------
    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n or v.ndim > 2:
            raise ParameterError(f"expected leading dimension {self.n}, got shape {v.shape}")
        return v

    # -- applies ----------------------------------------------------------
    def apply_laplacian(self, v):
        """``L v``."""
        v = self._check(v)
        if self.form == "spectral":
            vh = np.fft.rfft(v, axis=0)
            sym = self._symbol if v.ndim == 1 else self._symbol[:, None]
            return np.fft.irfft(sym * vh, n=self.n, axis=0)
        n2 = float(self.n * self.n)
        out = self._lap_diag[:, None] * v if v.ndim == 2 else self._lap_diag * v
        out[:-1] += n2 * v[1:]
        out[1:] += n2 * v[:-1]
        return out

    def apply_weighted(self, v):
        """``Sigma^-2 L v`` (the operator whose eigenvalues are ``-omega^2``)."""
        v = self._check(v)
        w = self._inv_sigma**2
        return self.apply_laplacian(v) * (w if v.ndim == 1 else w[:, None])

    def apply_symmetrized(self, v):
        """``W v = Sigma^-1 L Sigma^-1 v``."""
        v = self._check(v)
        if self.form == "fd" and v.ndim == 1:
            return _kernels.tridiag_matvec(self.w_diag, self.w_off, v)
        s = self._inv_sigma if v.ndim == 1 else self._inv_sigma[:, None]
        return s * self.apply_laplacian(s * v)

    # -- bounds -----------------------------------------------------------
    def norm_bound(self) -> float:
        """Cheap upper bound on ``||W||_2``."""
        if self.form == "spectral":
            return np.pi**2 * self.n**2 / self.medium.sigma_min**2
        return 4.0 * self.n**2 / self.medium.sigma_min**2


def apply_laplacian(op: WaveOperator, v):
    return op.apply_laplacian(v)


def apply_weighted(op: WaveOperator, v):
    return op.apply_weighted(v)


def assemble_dense_symmetrized(op: WaveOperator, return_asymmetry: bool = False):
    """Dense ``W``, built column by column from canonical basis vectors.

    The result is symmetrized as ``(W + W^T)/2``; the relative asymmetry of
    the raw assembly is logged (and returned when ``return_asymmetry``).
    """
    n = op.n
    if n > DENSE_LIMIT:
        raise SizeGuardError(f"dense assembly limited to n <= {DENSE_LIMIT}, got {n}")
    if op.form == "fd":
        W = np.diag(op.w_diag) + np.diag(op.w_off, 1) + np.diag(op.w_off, -1)
    else:
        W = op.apply_symmetrized(np.eye(n))
    asym = float(np.max(np.abs(W - W.T)) / max(np.max(np.abs(W)), 1e-300))
    if asym > 1e-10:
        log.warning("dense operator asymmetry %.3e exceeds 1e-10", asym)
    W = 0.5 * (W + W.T)
    if return_asymmetry:
        return W, asym
    return W
