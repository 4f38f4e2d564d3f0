"""Eigenpairs of the weighted operator ``Sigma^-2 L``.

Eigenvectors are stored in the physical variable ``v`` and normalized so that
``sum_j (sigma_j v_j)^2 = 1``; the corresponding eigenvalue is ``-omega^2``.

Two resolvers are provided:

* a dense oracle (:func:`full_decomposition`) via ``numpy.linalg.eigh`` on the
  symmetrized operator ``W = Sigma^-1 L Sigma^-1``;
* a matrix-free shift-invert path (:func:`nearest_eigenpair`): block
  Lanczos on ``(W + s I)^-1`` with MINRES inner solves, followed by
  fixed-shift inverse iteration and a Jacobi-Davidson polishing step.

:func:`draw_eigenset` samples random shifts uniformly in ``[0, omega_max]`` and
keeps the nearest eigenpairs without replacement, with either resolver.
"""
from __future__ import annotations

import bisect
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConvergenceError, ParameterError, SizeGuardError
from .grid_medium import Medium
from .operators import DENSE_LIMIT, WaveOperator, assemble_dense_symmetrized

log = logging.getLogger(__name__)

DEDUP_REL = 1e-8


@dataclass(frozen=True)
class EigenPair:
    """One eigenpair ``(omega, v)`` with ``Sigma^-2 L v = -omega^2 v``."""

    omega: float
    vector: np.ndarray
    residual: float


@dataclass
class EigenSet:
    """A set of eigenpairs sorted by ``omega``."""

    pairs: list
    seed: int | None
    omega_max: float
    n: int = 0
    bc: str = ""
    _vectors: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.pairs = sorted(self.pairs, key=lambda p: p.omega)
        if self.pairs and not self.n:
            self.n = self.pairs[0].vector.shape[0]

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.pairs])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([p.residual for p in self.pairs])

    @property
    def vectors(self) -> np.ndarray:
        """Eigenvectors as columns, shape ``(n, k)``."""
        if self._vectors is None:
            if not self.pairs:
                self._vectors = np.zeros((self.n, 0))
            else:
                self._vectors = np.column_stack([p.vector for p in self.pairs])
        return self._vectors


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def residual_tolerance(op: WaveOperator) -> float:
    """Acceptance threshold for eigenpair residuals.

    ``1e-8``, raised to ``1e-14 * ||W||`` on fine grids where the rounding
    floor of the operator itself exceeds it.
    """
    return max(1e-8, 1e-14 * op.norm_bound())


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _relative_residuals(op: WaveOperator, w, theta):
    """``||L~ v + omega^2 v|| / ||v||`` for ``v = Sigma^-1 w`` (columns of w)."""
    inv_s = 1.0 / op.medium.sigma
    if w.ndim == 1:
        r = inv_s * (op.apply_symmetrized(w) - theta * w)
        return float(np.linalg.norm(r) / np.linalg.norm(inv_s * w))
    r = inv_s[:, None] * (op.apply_symmetrized(w) - w * theta[None, :])
    return np.linalg.norm(r, axis=0) / np.linalg.norm(inv_s[:, None] * w, axis=0)


def _to_pairs(op, w, theta, residuals):
    """Map orthonormal eigenvectors ``w`` of W to normalized physical pairs."""
    inv_s = 1.0 / op.medium.sigma
    out = []
    for i in range(w.shape[1]):
        v = _fix_sign(inv_s * w[:, i])
        v = v / np.sqrt(np.sum((op.medium.sigma * v) ** 2))
        om = float(np.sqrt(max(-theta[i], 0.0)))
        out.append(EigenPair(om, v, float(residuals[i])))
    return out


def _omega_from_lambda(lam, scale):
    neg = -lam
    bad = neg < -1e-8 * max(scale, 1.0)
    if np.any(bad):
        raise ConvergenceError(f"operator is not negative semi-definite (max eigenvalue {lam.max():.3e})")
    return np.sqrt(np.clip(neg, 0.0, None))


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------

class DenseSpectrum:
    """Full spectrum of a medium, sorted by omega, with clusters of equal omegas."""

    def __init__(self, op: WaveOperator):
        if op.n > DENSE_LIMIT:
            raise SizeGuardError(f"full decomposition limited to n <= {DENSE_LIMIT}")
        W = assemble_dense_symmetrized(op)
        lam, U = np.linalg.eigh(W)
        order = np.argsort(-lam, kind="stable")  # ascending omega
        lam = lam[order]
        U = U[:, order]
        self.omegas = _omega_from_lambda(lam, op.norm_bound())
        theta = -self.omegas**2
        res = _relative_residuals(op, U, lam)
        inv_s = 1.0 / op.medium.sigma
        V = inv_s[:, None] * U
        idx = np.argmax(np.abs(V), axis=0)
        signs = np.sign(V[idx, np.arange(V.shape[1])])
        signs[signs == 0] = 1.0
        V *= signs
        V /= np.sqrt(np.sum((op.medium.sigma[:, None] * V) ** 2, axis=0))
        self.vectors = V
        self.residuals = res
        self.theta = theta
        self.omega_max = float(self.omegas[-1])
        tol = DEDUP_REL * self.omega_max
        starts = [0]
        for i in range(1, len(self.omegas)):
            if self.omegas[i] - self.omegas[i - 1] > tol:
                starts.append(i)
        self.cluster_start = np.array(starts)
        self.cluster_stop = np.append(self.cluster_start[1:], len(self.omegas))
        self.levels = np.array([self.omegas[a:b].mean()
                                for a, b in zip(self.cluster_start, self.cluster_stop)])
        self.multiplicity = self.cluster_stop - self.cluster_start

    def cluster_pairs(self, c: int):
        a, b = self.cluster_start[c], self.cluster_stop[c]
        return tuple(EigenPair(float(self.omegas[i]), self.vectors[:, i], float(self.residuals[i]))
                     for i in range(a, b))

    def nearest_cluster(self, w):
        return _kernels._nearest_np(self.levels, np.asarray(w, dtype=float),
                                    DEDUP_REL * self.omega_max)


_CACHE: "OrderedDict[tuple, DenseSpectrum]" = OrderedDict()
_CACHE_SIZE = 4


def dense_spectrum(op: WaveOperator) -> DenseSpectrum:
    """Cached :class:`DenseSpectrum` keyed by medium content."""
    key = op.medium.key()
    spec = _CACHE.get(key)
    if spec is None:
        spec = DenseSpectrum(op)
        _CACHE[key] = spec
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    else:
        _CACHE.move_to_end(key)
    return spec


def full_decomposition(op: WaveOperator) -> EigenSet:
    """All ``n`` eigenpairs from a dense symmetric eigendecomposition."""
    spec = dense_spectrum(op)
    pairs = [EigenPair(float(spec.omegas[i]), spec.vectors[:, i], float(spec.residuals[i]))
             for i in range(op.n)]
    es = EigenSet(pairs, seed=None, omega_max=spec.omega_max, n=op.n, bc=op.medium.bc)
    es._vectors = spec.vectors
    return es


# ---------------------------------------------------------------------------
# omega_max
# ---------------------------------------------------------------------------

def estimate_omega_max(op: WaveOperator, rtol: float = 1e-7, max_iter: int = 200000,
                       seed: int = 0) -> float:
    """Largest ``omega`` by power iteration on ``-W``.

    Iterates until the Rayleigh quotient changes by less than ``rtol``
    (relative) over a window of ten iterations.
    """
    cached = getattr(op, "_omega_max", None)
    if cached is not None:
        return cached
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.n)
    x /= np.linalg.norm(x)
    hist = []
    theta = 0.0
    for it in range(max_iter):
        y = -op.apply_symmetrized(x)
        theta = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            theta = 0.0
            break
        x = y / nrm
        hist.append(theta)
        if it >= 20 and abs(theta - hist[-11]) <= rtol * abs(theta):
            break
    else:
        raise ConvergenceError(f"power iteration did not stabilize in {max_iter} steps")
    om = float(np.sqrt(max(theta, 0.0)))
    op._omega_max = om
    return om


# ---------------------------------------------------------------------------
# shift-invert
# ---------------------------------------------------------------------------

class _ShiftedSolver:
    def __init__(self, op: WaveOperator):
        self.op = op
        self.maxiter = 8 * op.n
        self.solves = 0
        self.iterations = 0

    def solve(self, shift, b, rtol):
        """Solve ``(W + shift I) x = b``."""
        self.solves += 1
        if self.op.form == "fd":
            x, it = _kernels.tridiag_minres(self.op.w_diag, self.op.w_off, shift, b, rtol, self.maxiter)
        else:
            x, it = _kernels.minres_generic(self.op.apply_symmetrized, b, shift, rtol, self.maxiter)
        self.iterations += it
        if not np.all(np.isfinite(x)):
            raise ConvergenceError("inner solve produced non-finite values")
        return x


def _pick_nearest(omegas, target, tie_tol=0.0):
    d = np.abs(omegas - target)
    close = np.nonzero(d <= d.min() + tie_tol)[0]
    return int(close[np.argmin(omegas[close])])


def _rayleigh_ritz(op, V):
    V, _ = np.linalg.qr(V)
    WV = op.apply_symmetrized(V) if V.shape[1] > 1 else op.apply_symmetrized(V[:, 0])[:, None]
    H = V.T @ WV
    th, Y = np.linalg.eigh(0.5 * (H + H.T))
    return V @ Y, th


def _jd_polish(op, solver, v, theta, others, rtol=1e-6):
    """One Jacobi-Davidson correction for ``v`` orthogonal to ``others``."""
    Q = np.column_stack([v] + others) if others else v[:, None]

    def proj(x):
        return x - Q @ (Q.T @ x)

    r = op.apply_symmetrized(v) - theta * v

    def mv(x):
        px = proj(x)
        return proj(op.apply_symmetrized(px) - theta * px)

    t, it = _kernels.minres_generic(mv, -proj(r), 0.0, rtol, solver.maxiter)
    solver.iterations += it
    solver.solves += 1
    v = v + proj(t)
    return v / np.linalg.norm(v)


def nearest_eigenpair(op: WaveOperator, shift_omega: float, tol: float | None = None,
                      omega_max: float | None = None, lanczos_steps: int = 20,
                      _retry: bool = True):
    """Eigenpair(s) whose ``omega`` is closest to ``shift_omega``.

    Parameters
    ----------
    op : WaveOperator
    shift_omega : float
        Target frequency in ``[0, omega_max]``.
    tol : float, optional
        Residual acceptance threshold; defaults to :func:`residual_tolerance`.
    omega_max : float, optional
        Used for the duplicate tolerance ``1e-8 * omega_max``; estimated when
        omitted.

    Returns
    -------
    tuple of EigenPair
        One pair, or two orthonormal pairs when the eigenvalue is (numerically)
        double, as happens for periodic media.  Ties between two eigenvalues
        equidistant from the shift resolve toward the smaller ``omega``.
    """
    if shift_omega < 0:
        raise ParameterError("shift_omega must be nonnegative")
    if tol is None:
        tol = residual_tolerance(op)
    if omega_max is None:
        omega_max = estimate_omega_max(op)
    dedup = DEDUP_REL * omega_max
    n = op.n
    block = 2 if op.medium.grid.periodic else 1
    steps = max(2, lanczos_steps // block + (1 if block == 2 else 0))
    solver = _ShiftedSolver(op)
    # offset keeps the shifted system away from exact singularity
    s = float(shift_omega) ** 2 + 1e-10 * op.norm_bound()
    seed = int(np.frombuffer(np.float64(shift_omega).tobytes(), dtype=np.uint64)[0] % (2**63))
    rng = np.random.default_rng(seed)

    try:
        Q0, _ = np.linalg.qr(rng.standard_normal((n, block)))
        basis = [Q0]
        images = []
        for step in range(steps):
            Qb = basis[-1]
            Z = np.column_stack([solver.solve(s, Qb[:, c], 1e-10) for c in range(Qb.shape[1])])
            images.append(Z)
            if step == steps - 1:
                break
            Qall = np.hstack(basis)
            Zn = Z - Qall @ (Qall.T @ Z)
            Zn = Zn - Qall @ (Qall.T @ Zn)
            Qn, R = np.linalg.qr(Zn)
            if np.min(np.abs(np.diag(R))) < 1e-12 * max(np.max(np.abs(R)), 1e-300):
                break
            basis.append(Qn)
        Qall = np.hstack(basis[:len(images)])
        Zall = np.hstack(images)
        H = Qall.T @ Zall
        mu, Y = np.linalg.eigh(0.5 * (H + H.T))
        good = np.argsort(-np.abs(mu))[:6]
        good = good[np.abs(mu[good]) > 0]
        lam = 1.0 / mu[good] - s
        oms = np.sqrt(np.clip(-lam, 0.0, None))
        best = _pick_nearest(oms, shift_omega, dedup)
        group = [best]
        if block == 2:
            for c in range(len(good)):
                if c != best and abs(oms[c] - oms[best]) <= 1e-3 * max(oms[best], 1.0):
                    group.append(c)
                    break
        V = Qall @ Y[:, good[group]]
        V, theta = _rayleigh_ritz(op, V)

        # fixed-shift inverse iteration with tightening inner tolerance
        for rtol in (1e-8, 1e-11):
            res = np.atleast_1d(_relative_residuals(op, V, theta))
            if np.all(res <= 0.1 * tol):
                break
            shift = -float(np.mean(theta))
            V = np.column_stack([solver.solve(shift, V[:, c], rtol) for c in range(V.shape[1])])
            V, theta = _rayleigh_ritz(op, V)
        # Jacobi-Davidson polishing
        for _ in range(3):
            res = np.atleast_1d(_relative_residuals(op, V, theta))
            if np.all(res <= 0.1 * tol):
                break
            cols = [V[:, c] for c in range(V.shape[1])]
            for c in range(len(cols)):
                if res[c] > 0.1 * tol:
                    others = [cols[o] for o in range(len(cols)) if o != c]
                    cols[c] = _jd_polish(op, solver, cols[c], theta[c], others)
            V, theta = _rayleigh_ritz(op, np.column_stack(cols))
        res = np.atleast_1d(_relative_residuals(op, V, theta))
    except ConvergenceError:
        if not _retry:
            raise
        log.info("inner solve broke down at shift %.17g; retrying with perturbed shift", shift_omega)
        return nearest_eigenpair(op, shift_omega * (1 + 1e-7) + 1e-12, tol, omega_max,
                                 lanczos_steps, _retry=False)

    oms = np.sqrt(np.clip(-theta, 0.0, None))
    if len(oms) == 2 and abs(oms[1] - oms[0]) > dedup:
        keep = [_pick_nearest(oms, shift_omega, dedup)]
    else:
        keep = list(range(len(oms)))
    if np.any(res[keep] > tol):
        raise ConvergenceError(
            f"nearest_eigenpair(shift={shift_omega:.17g}): residual {res[keep].max():.3e} > {tol:.3e} "
            f"after {solver.solves} solves")
    return tuple(_to_pairs(op, V[:, keep], theta[keep], res[keep]))


# ---------------------------------------------------------------------------
# random eigensets
# ---------------------------------------------------------------------------

class _ShiftInvertResolver:
    def __init__(self, op, omega_max):
        self.op = op
        self.omega_max = omega_max

    def __call__(self, w):
        return nearest_eigenpair(self.op, float(w), omega_max=self.omega_max)


def draw_eigenset(op: WaveOperator, k: int, seed: int, method: str = "shift_invert",
                  include_endpoints: bool = False, omega_max: float | None = None) -> EigenSet:
    """Random eigenset of ``k`` eigenvectors from uniformly drawn shifts.

    Shifts are drawn from ``numpy.random.default_rng(seed)`` uniformly in
    ``[0, omega_max]`` and resolved to the nearest eigenvalue; duplicates
    (``|omega_a - omega_b| <= 1e-8 omega_max``) are rejected.  A double
    eigenvalue contributes both of its vectors, except that the last
    accepted eigenspace is truncated so exactly ``k`` vectors are kept.

    Parameters
    ----------
    method : {"shift_invert", "dense"}
        ``"dense"`` resolves shifts against the cached full decomposition
        (same draws, same selection; used for large sweeps).
    include_endpoints : bool
        Resolve the shifts ``0`` and ``omega_max`` first.
    """
    n = op.n
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    k = int(k)
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of eigenvectors n={n}")
    if method not in ("shift_invert", "dense"):
        raise ParameterError(f"unknown method {method!r}")
    if omega_max is None:
        omega_max = estimate_omega_max(op)
    rng = np.random.default_rng(seed)
    dedup = DEDUP_REL * omega_max
    chosen = []
    count = 0

    if method == "dense":
        spec = dense_spectrum(op)
        if k == n:
            es = full_decomposition(op)
            es.seed = seed
            es.omega_max = omega_max
            return es
        taken = np.zeros(len(spec.levels), dtype=bool)

        def consume(cidx):
            nonlocal count
            if taken[cidx]:
                return
            taken[cidx] = True
            pairs = spec.cluster_pairs(cidx)[: k - count]
            chosen.extend(pairs)
            count += len(pairs)

        if include_endpoints:
            for c in spec.nearest_cluster(np.array([0.0, omega_max])):
                if count < k:
                    consume(int(c))
        draws = 0
        cap = 50 * n * n + 10000
        while count < k:
            batch = rng.random(max(k - count, 8)) * omega_max
            draws += len(batch)
            for c in spec.nearest_cluster(batch):
                consume(int(c))
                if count >= k:
                    break
            if draws > cap:
                raise ConvergenceError("shift sampling failed to collect k eigenvectors")
    else:
        resolver = _ShiftInvertResolver(op, omega_max)
        levels: list[float] = []

        def is_dup(om):
            i = bisect.bisect_left(levels, om)
            for j in (i - 1, i):
                if 0 <= j < len(levels) and abs(levels[j] - om) <= dedup:
                    return True
            return False

        def consume_pairs(pairs):
            nonlocal count
            om = pairs[0].omega
            if is_dup(om):
                return
            bisect.insort(levels, om)
            pairs = pairs[: k - count]
            chosen.extend(pairs)
            count += len(pairs)

        if include_endpoints:
            for w in (0.0, omega_max):
                if count < k:
                    consume_pairs(resolver(w))
        draws = 0
        cap = 50 * n * n + 10000
        while count < k:
            batch = rng.random(max(k - count, 8)) * omega_max
            draws += len(batch)
            for w in batch:
                consume_pairs(resolver(w))
                if count >= k:
                    break
            if draws > cap:
                raise ConvergenceError("shift sampling failed to collect k eigenvectors")

    return EigenSet(chosen, seed=seed, omega_max=omega_max, n=n, bc=op.medium.bc)


def selection_probabilities(op: WaveOperator, omega_max: float | None = None):
    """Probability that one uniform shift in ``[0, omega_max]`` lands on each eigenvalue.

    Returns ``(levels, probabilities, multiplicity)`` from the dense spectrum.
    """
    spec = dense_spectrum(op)
    if omega_max is None:
        omega_max = estimate_omega_max(op)
    lv = spec.levels
    mids = 0.5 * (lv[1:] + lv[:-1])
    lo = np.concatenate([[0.0], mids])
    hi = np.concatenate([mids, [np.inf]])
    width = np.clip(np.minimum(hi, omega_max) - np.clip(lo, 0.0, omega_max), 0.0, None)
    return lv, width / omega_max, spec.multiplicity.copy()


# ---------------------------------------------------------------------------
# faithfulness
# ---------------------------------------------------------------------------

@dataclass
class FaithfulnessReport:
    """Comparison of low modes between a grid and its 2x refinement."""

    k_check: int
    gap_factors: np.ndarray
    norm_factors: np.ndarray
    worst_gap_factor: float
    worst_norm_factor: float
    flagged_modes: list
    passed: bool


def _levels_and_sup(medium: Medium):
    op = WaveOperator(medium)
    spec = dense_spectrum(op)
    sv = medium.sigma[:, None] * spec.vectors * np.sqrt(medium.n)
    om = spec.omegas
    if medium.grid.periodic:
        groups = [[0]] + [[i, i + 1] for i in range(1, medium.n - 1, 2)] + [[medium.n - 1]]
    else:
        groups = [[i] for i in range(medium.n)]
    levels = np.array([om[g].mean() for g in groups])
    sup = np.array([np.max(np.sqrt(np.sum(sv[:, g] ** 2, axis=1))) for g in groups])
    return levels, sup


def faithfulness_report(medium: Medium, k_check: int, refined: Medium | None = None) -> FaithfulnessReport:
    """Gap and sup-norm factors of the lowest ``k_check`` modes, n-grid vs 2n-grid.

    Eigenvectors are normalized by ``(1/n) sum sigma^2 v^2 = 1`` on each grid
    before comparing ``max |sigma v|``.  For periodic media the eigenvalues are
    grouped into the zero mode followed by consecutive pairs.
    """
    if refined is None:
        refined = medium.refined()
    l1, s1 = _levels_and_sup(medium)
    l2, s2 = _levels_and_sup(refined)
    k = min(k_check, len(l1) - 1)
    g1 = np.diff(l1[: k + 1])
    g2 = np.diff(l2[: k + 1])
    gr = g1 / g2
    gap_f = np.maximum(gr, 1.0 / gr)
    nr = s1[:k] / s2[:k]
    norm_f = np.maximum(nr, 1.0 / nr)
    flagged = sorted(set(np.nonzero(gap_f > 2)[0].tolist()) | set(np.nonzero(norm_f > 2)[0].tolist()))
    wg = float(gap_f.max()) if len(gap_f) else 1.0
    wn = float(norm_f.max()) if len(norm_f) else 1.0
    return FaithfulnessReport(k, gap_f, norm_f, wg, wn, flagged, bool(wg <= 2 and wn <= 2))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_eigenset(es: EigenSet, path, fmt: str = "csv") -> None:
    """Write an eigenset: one header line, then one record per pair.

    ``fmt="csv"``: ``omega,residual,v_0,...,v_{n-1}`` per line (17 digits).
    ``fmt="binary"``: header line, then per pair little-endian float64
    ``omega, residual, v_0..v_{n-1}``.
    """
    seed = "none" if es.seed is None else str(es.seed)
    header = (f"# eigenset n={es.n} bc={es.bc} seed={seed} k={es.k} "
              f"omega_max={es.omega_max:.17g} format={fmt}\n")
    path = Path(path)
    if fmt == "csv":
        lines = [header.rstrip("\n")]
        for p in es.pairs:
            lines.append(",".join(f"{x:.17g}" for x in (p.omega, p.residual, *p.vector)))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            for p in es.pairs:
                fh.write(struct.pack("<2d", p.omega, p.residual))
                fh.write(np.asarray(p.vector, dtype="<f8").tobytes())
    else:
        raise ParameterError(f"unknown eigenset format {fmt!r}")


def load_eigenset(path) -> EigenSet:
    path = Path(path)
    raw = path.read_bytes()
    # skip any preceding comment block (e.g. a run manifest)
    start = raw.find(b"# eigenset")
    if start < 0:
        raise ParameterError(f"{path}: missing eigenset header")
    raw = raw[start:]
    nl = raw.index(b"\n")
    header = raw[:nl].decode("ascii").lstrip("#").split()
    meta = dict(tok.split("=", 1) for tok in header[1:])
    n, k = int(meta["n"]), int(meta["k"])
    seed = None if meta["seed"] == "none" else int(meta["seed"])
    pairs = []
    if meta["format"] == "csv":
        for line in raw[nl + 1:].decode("ascii").splitlines():
            if not line.strip():
                continue
            vals = np.array([float(t) for t in line.split(",")])
            pairs.append(EigenPair(vals[0], vals[2:], vals[1]))
    else:
        body = np.frombuffer(raw[nl + 1:], dtype="<f8").reshape(k, n + 2)
        for row in body:
            pairs.append(EigenPair(float(row[0]), row[2:].copy(), float(row[1])))
    if len(pairs) != k:
        raise ParameterError(f"{path}: expected {k} pairs, found {len(pairs)}")
    return EigenSet(pairs, seed=seed, omega_max=float(meta["omega_max"]), n=n, bc=meta["bc"])
