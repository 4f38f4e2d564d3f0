"""Weighted-l1 recovery from eigen-coefficients by iterative soft thresholding.

The measurement operator maps a grid function ``x`` to ``Phi x = V^T x`` where
the columns of ``V`` are the eigenvectors of an :class:`~cwc.eigensolver.EigenSet`.
Because the rows ``sigma v`` are orthonormal, ``Phi Sigma^2 Phi^* = I`` and the
thresholding iteration

    u <- S_{lambda/sigma}( u + Phi^*(c - Phi Sigma^2 u) )

needs no step size.  The multiplier ``lambda`` is continued toward the
constraint ``||Phi Sigma^2 u - c|| <= epsilon`` (see :class:`RecoveryConfig`).
Several right-hand sides can be solved at once: pass ``c`` of shape ``(k, m)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ParameterError
from .grid_medium import Medium


class MeasurementOperator:
    """``Phi x = V^T x`` and ``Phi^* c = V c`` for an eigenset on a medium."""

    def __init__(self, eigenset, medium: Medium):
        if eigenset.n != medium.n:
            raise ParameterError("eigenset and medium sizes differ")
        self.eigenset = eigenset
        self.medium = medium
        self.V = np.ascontiguousarray(eigenset.vectors)
        self.sigma = medium.sigma
        self.sigma2 = medium.sigma**2

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def k(self) -> int:
        return self.V.shape[1]

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ParameterError(f"expected length {self.n}, got {x.shape[0]}")
        return self.V.T @ x

    def adjoint(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape[0] != self.k:
            raise ParameterError(f"expected length {self.k}, got {c.shape[0]}")
        return self.V @ c


def phi_apply(m: MeasurementOperator, x):
    """``c[w] = sum_j x[j] v_w[j]``."""
    return m.apply(x)


def phi_adjoint(m: MeasurementOperator, c):
    """``x[j] = sum_w c[w] v_w[j]``."""
    return m.adjoint(c)


def soft_threshold(alpha, lam):
    """``S_lam(alpha)``: zero when ``|alpha| < lam``, else shrink toward 0 by ``lam``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ParameterError("threshold must be nonnegative")
    alpha = np.asarray(alpha, dtype=float)
    out = np.sign(alpha) * np.maximum(np.abs(alpha) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RecoveryConfig:
    """Settings for :func:`ist_solve`.

    Attributes
    ----------
    epsilon : float
        Constraint radius; multiplied by ``||c||`` (per column) when
        ``relative_epsilon`` is set.
    lambda0 : float or None
        Initial multiplier; ``None`` uses ``0.1 * max_j |Phi^* c|_j / sigma_j``.
    tol : float
        Stop when ``||u_new - u|| <= tol * max(1, ||u||)`` and the multiplier
        has settled.
    max_iter : int
    update_every : int
        The multiplier is updated whenever the inner iteration stalls
        (change below ``inner_tol``) or every ``update_every`` sweeps.
    inner_tol : float or None
        Defaults to ``tol``.
    lambda_floor : float
        With ``epsilon = 0`` the multiplier is halved until it falls below
        ``lambda_floor * lambda0``.
    accelerate : bool
        Add Nesterov momentum (FISTA), restarted at every multiplier update.
        Off by default: the plain thresholding iteration is the reference
        algorithm.
    trace_path : str or None
        Write per-iteration diagnostics (CSV) to this path.
    """

    epsilon: float = 0.0
    relative_epsilon: bool = False
    lambda0: float | None = None
    tol: float = 1e-6
    max_iter: int = 5000
    update_every: int = 50
    inner_tol: float | None = None
    lambda_floor: float = 1e-12
    accelerate: bool = False
    trace_path: str | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ParameterError("epsilon must be nonnegative")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.update_every < 1:
            raise ParameterError("update_every must be >= 1")
        if self.lambda0 is not None and self.lambda0 < 0:
            raise ParameterError("lambda0 must be nonnegative")

    def with_(self, **kw) -> "RecoveryConfig":
        return replace(self, **kw)


class IstResult(NamedTuple):
    x: np.ndarray
    iterations: np.ndarray | int
    residual: np.ndarray | float
    lam: np.ndarray | float
    converged: np.ndarray | bool


def initial_lambda(m: MeasurementOperator, c) -> np.ndarray:
    """``0.1 * max_j |(Phi^* c)_j| / sigma_j`` per column."""
    c2 = c if c.ndim == 2 else c[:, None]
    return 0.1 * np.max(np.abs(m.V @ c2) / m.sigma[:, None], axis=0)


def ist_solve(m: MeasurementOperator, c_target, cfg: RecoveryConfig = RecoveryConfig(),
              x0=None, lam0=None, freeze_lambda: bool = False) -> IstResult:
    """Solve ``min sum sigma|u|  s.t.  ||Phi Sigma^2 u - c|| <= epsilon`` by thresholding.

    Parameters
    ----------
    m : MeasurementOperator
    c_target : ndarray, shape (k,) or (k, m)
    cfg : RecoveryConfig
    x0 : ndarray, optional
        Warm start (same trailing shape as the solution).
    lam0 : float or ndarray, optional
        Warm-start multiplier(s); overrides ``cfg.lambda0``.
    freeze_lambda : bool
        Keep the multiplier fixed (plain Lagrangian IST).

    Returns
    -------
    IstResult
        ``x`` plus per-column iteration counts, final residuals
        ``||Phi Sigma^2 x - c||``, final multipliers and convergence flags
        (scalars for a single right-hand side).
    """
    c = np.asarray(c_target, dtype=float)
    single = c.ndim == 1
    C = c[:, None] if single else c
    if C.shape[0] != m.k:
        raise ParameterError(f"expected {m.k} coefficients, got {C.shape[0]}")
    ncol = C.shape[1]
    V = m.V
    s2 = m.sigma2[:, None]
    inv_sigma = 1.0 / m.sigma
    cnorm = np.linalg.norm(C, axis=0)
    eps = cfg.epsilon * (cnorm if cfg.relative_epsilon else np.ones(ncol))
    inner_tol = cfg.tol if cfg.inner_tol is None else cfg.inner_tol

    if x0 is None:
        U = np.zeros((m.n, ncol))
    else:
        U = np.array(x0, dtype=float).reshape(m.n, ncol)
    R = C - V.T @ (s2 * U)
    if lam0 is not None:
        lam = np.broadcast_to(np.asarray(lam0, dtype=float), (ncol,)).copy()
    elif cfg.lambda0 is not None:
        lam = np.full(ncol, float(cfg.lambda0))
    else:
        lam = initial_lambda(m, C)
    lam_ref = lam.copy()
    since = np.zeros(ncol, dtype=np.int64)
    iters = np.zeros(ncol, dtype=np.int64)
    done = np.zeros(ncol, dtype=bool)
    res = np.linalg.norm(R, axis=0)

    # momentum state: extrapolated point Y with residual RY
    Y = U.copy() if cfg.accelerate else U
    RY = R.copy() if cfg.accelerate else R
    tk = np.ones(ncol)

    trace_rows = [] if cfg.trace_path else None
    for it in range(1, cfg.max_iter + 1):
        A = np.nonzero(~done)[0]
        if A.size == 0:
            break
        UA = U[:, A]
        B = Y[:, A] + V @ RY[:, A]
        UN = _kernels.soft_threshold_cols(B, lam[A], inv_sigma)
        du = np.linalg.norm(UN - UA, axis=0)
        nu = np.linalg.norm(UA, axis=0)
        RA = C[:, A] - V.T @ (s2 * UN)
        if cfg.accelerate:
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk[A] ** 2))
            beta = (tk[A] - 1.0) / tn
            tk[A] = tn
            Y[:, A] = UN + beta * (UN - UA)
            RY[:, A] = RA + beta * (RA - R[:, A])
        U[:, A] = UN
        R[:, A] = RA
        resA = np.linalg.norm(RA, axis=0)
        res[A] = resA
        iters[A] = it
        since[A] += 1
        small = du <= np.maximum(1.0, nu) * inner_tol
        lamA = lam[A]
        floor_hit = lamA <= cfg.lambda_floor * lam_ref[A]
        epsA = eps[A]
        if not freeze_lambda:
            upd = (since[A] >= cfg.update_every) | small
            with np.errstate(divide="ignore", invalid="ignore"):
                factor = np.where(epsA > 0,
                                  np.clip(epsA / np.maximum(resA, 1e-300), 0.5, 2.0),
                                  0.5)
            factor = np.where(resA < 1e-14 * np.maximum(cnorm[A], 1e-300), 1.0, factor)
            factor = np.where(floor_hit & (factor < 1.0), 1.0, factor)
            lamA = np.where(upd, lamA * factor, lamA)
            lam[A] = lamA
            since[A] = np.where(upd, 0, since[A])
            if cfg.accelerate and upd.any():
                Au = A[upd]
                tk[Au] = 1.0
                Y[:, Au] = U[:, Au]
                RY[:, Au] = R[:, Au]
            settled = np.where(epsA > 0, (resA <= 1.05 * epsA) | floor_hit, floor_hit)
        else:
            settled = np.ones(A.size, dtype=bool)
        stop = (du <= cfg.tol * np.maximum(1.0, nu)) & settled
        done[A] = stop
        if trace_rows is not None:
            for col, d_, r_, l_ in zip(A, du, resA, lamA):
                trace_rows.append((it, int(col), float(l_), float(r_), float(d_)))

    if trace_rows is not None:
        with open(cfg.trace_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iteration", "column", "lambda", "residual", "change"])
            wr.writerows(trace_rows)

    if single:
        return IstResult(U[:, 0], int(iters[0]), float(res[0]), float(lam[0]), bool(done[0]))
    return IstResult(U, iters, res, lam, done)


def lagrangian_objective(m: MeasurementOperator, u, c, lam) -> float:
    """``1/2 ||Phi Sigma^2 u - c||^2 + lam * sum sigma |u|``."""
    r = m.V.T @ (m.sigma2 * u) - c
    return 0.5 * float(r @ r) + lam * float(np.sum(m.sigma * np.abs(u)))
