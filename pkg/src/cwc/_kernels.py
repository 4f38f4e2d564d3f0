"""Hot inner loops with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``CWC_NUMBA`` is not set to ``0``/``false``/``no``.  Both paths
implement the same algorithms on the same inputs (random numbers are always
drawn by numpy beforehand), so results agree to rounding.

Kernels
-------
soft_threshold_cols(a, lam, inv_sigma)
    Soft thresholding of a (n, m) block with threshold ``lam[c] * inv_sigma[j]``.
tridiag_minres(d, e, shift, b, rtol, maxiter)
    MINRES for ``(T + shift*I) x = b`` with T symmetric tridiagonal.
sequential_inclusion(p, k, uniforms)
    Inclusion counts of sequential renormalized draws without replacement.
shift_inclusion(levels, mult, omega_max, k, uniforms)
    Inclusion counts of the random-shift nearest-eigenvalue sampler.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:  # pragma: no cover - import guard
    import numba

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def _env_enabled() -> bool:
    val = os.environ.get("CWC_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _env_enabled()

_EPS = np.finfo(float).eps


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _soft_threshold_cols_np(a, lam, inv_sigma):
    thr = inv_sigma[:, None] * lam[None, :]
    return np.sign(a) * np.maximum(np.abs(a) - thr, 0.0)


def _tridiag_matvec_np(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def minres_generic(matvec, b, shift, rtol, maxiter):
    """Unpreconditioned MINRES for ``(A + shift*I) x = b``.

    Follows the Paige-Saunders recurrences (as in SciPy's implementation)
    and stops on the backward-error test
    ``|r| <= rtol * (|A| |x| + |b|)``.

    Returns
    -------
    x : ndarray
    itn : int
        Iterations used.
    """
    n = b.shape[0]
    x = np.zeros(n)
    beta1 = float(np.sqrt(b @ b))
    if beta1 == 0.0:
        return x, 0
    r1 = b.copy()
    r2 = b.copy()
    y = b.copy()
    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs = -1.0
    sn = 0.0
    tnorm2 = 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    itn = 0
    while itn < maxiter:
        itn += 1
        s = 1.0 / beta
        v = s * y
        y = matvec(v) + shift * v
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        oldb = beta
        beta = float(np.sqrt(r2 @ r2))
        tnorm2 += alfa * alfa + oldb * oldb + beta * beta
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), _EPS)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        anorm = np.sqrt(tnorm2)
        if phibar <= rtol * (anorm * np.sqrt(x @ x) + beta1) or beta == 0.0:
            break
    return x, itn


def _tridiag_minres_np(d, e, shift, b, rtol, maxiter):
    return minres_generic(lambda v: _tridiag_matvec_np(d, e, v), b, shift, rtol, maxiter)


def _nearest_np(levels, w, tie_tol=0.0):
    # tie (within tie_tol) -> smaller level
    i = np.searchsorted(levels, w, side="left")
    i = np.clip(i, 1, len(levels) - 1) if len(levels) > 1 else np.zeros_like(i)
    if len(levels) == 1:
        return i
    lo = levels[i - 1]
    hi = levels[i]
    return np.where(w - lo <= hi - w + tie_tol, i - 1, i)


def _sequential_inclusion_np(p, k, uniforms):
    trials = uniforms.shape[0]
    N = p.shape[0]
    avail = np.ones((trials, N), dtype=bool)
    counts = np.zeros(N, dtype=np.int64)
    rows = np.arange(trials)
    for step in range(k):
        w = np.where(avail, p[None, :], 0.0)
        cum = np.cumsum(w, axis=1)
        target = uniforms[:, step] * cum[:, -1]
        idx = (cum <= target[:, None]).sum(axis=1)
        # guard against landing on an exhausted tail by rounding
        idx = np.minimum(idx, N - 1)
        bad = ~avail[rows, idx]
        if bad.any():
            for t in np.nonzero(bad)[0]:
                idx[t] = np.nonzero(avail[t])[0][-1]
        avail[rows, idx] = False
    counts += (~avail).sum(axis=0)
    return counts


def _shift_inclusion_np(levels, mult, omega_max, k, uniforms):
    trials, B = uniforms.shape
    L = levels.shape[0]
    chosen = np.zeros((trials, L), dtype=bool)
    count = np.zeros(trials, dtype=np.int64)
    rows = np.arange(trials)
    for b in range(B):
        active = count < k
        if not active.any():
            break
        idx = _nearest_np(levels, uniforms[:, b] * omega_max)
        new = active & ~chosen[rows, idx]
        chosen[rows[new], idx[new]] = True
        count[new] += mult[idx[new]]
    short = int((count < k).sum())
    return chosen.sum(axis=0).astype(np.int64), short


numpy_impl = SimpleNamespace(
    soft_threshold_cols=_soft_threshold_cols_np,
    tridiag_matvec=_tridiag_matvec_np,
    tridiag_minres=_tridiag_minres_np,
    sequential_inclusion=_sequential_inclusion_np,
    shift_inclusion=_shift_inclusion_np,
    name="numpy",
)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    njit = numba.njit(cache=False, nogil=True)

    @njit
    def _soft_threshold_cols_nb(a, lam, inv_sigma):
        n, m = a.shape
        out = np.empty_like(a)
        for j in range(n):
            s = inv_sigma[j]
            for c in range(m):
                t = lam[c] * s
                v = a[j, c]
                if v > t:
                    out[j, c] = v - t
                elif v < -t:
                    out[j, c] = v + t
                else:
                    out[j, c] = 0.0
        return out

    @njit
    def _tridiag_matvec_nb(d, e, x):
        n = x.shape[0]
        y = np.empty(n)
        for j in range(n):
            acc = d[j] * x[j]
            if j > 0:
                acc += e[j - 1] * x[j - 1]
            if j < n - 1:
                acc += e[j] * x[j + 1]
            y[j] = acc
        return y

    @njit
    def _tridiag_minres_nb(d, e, shift, b, rtol, maxiter):
        n = b.shape[0]
        eps = 2.220446049250313e-16
        x = np.zeros(n)
        beta1 = np.sqrt(np.dot(b, b))
        if beta1 == 0.0:
            return x, 0
        r1 = b.copy()
        r2 = b.copy()
        y = b.copy()
        v = np.empty(n)
        w = np.zeros(n)
        w1 = np.zeros(n)
        w2 = np.zeros(n)
        oldb = 0.0
        beta = beta1
        dbar = 0.0
        epsln = 0.0
        phibar = beta1
        cs = -1.0
        sn = 0.0
        tnorm2 = 0.0
        itn = 0
        while itn < maxiter:
            itn += 1
            s = 1.0 / beta
            for j in range(n):
                v[j] = s * y[j]
            # y = (T + shift) v - (beta/oldb) r1
            c1 = beta / oldb if itn >= 2 else 0.0
            alfa = 0.0
            for j in range(n):
                acc = (d[j] + shift) * v[j]
                if j > 0:
                    acc += e[j - 1] * v[j - 1]
                if j < n - 1:
                    acc += e[j] * v[j + 1]
                acc -= c1 * r1[j]
                y[j] = acc
                alfa += v[j] * acc
            c2 = alfa / beta
            bb = 0.0
            for j in range(n):
                yj = y[j] - c2 * r2[j]
                y[j] = yj
                r1[j] = r2[j]
                r2[j] = yj
                bb += yj * yj
            oldb = beta
            beta = np.sqrt(bb)
            tnorm2 += alfa * alfa + oldb * oldb + beta * beta
            oldeps = epsln
            delta = cs * dbar + sn * alfa
            gbar = sn * dbar - cs * alfa
            epsln = sn * beta
            dbar = -cs * beta
            gamma = np.sqrt(gbar * gbar + beta * beta)
            if gamma < eps:
                gamma = eps
            cs = gbar / gamma
            sn = beta / gamma
            phi = cs * phibar
            phibar = sn * phibar
            xx = 0.0
            for j in range(n):
                w1[j] = w2[j]
                w2[j] = w[j]
                w[j] = (v[j] - oldeps * w1[j] - delta * w2[j]) / gamma
                x[j] += phi * w[j]
                xx += x[j] * x[j]
            if phibar <= rtol * (np.sqrt(tnorm2) * np.sqrt(xx) + beta1) or beta == 0.0:
                break
        return x, itn

    @njit
    def _nearest_one(levels, w):
        L = levels.shape[0]
        if L == 1:
            return 0
        i = np.searchsorted(levels, w)
        if i < 1:
            i = 1
        if i > L - 1:
            i = L - 1
        if w - levels[i - 1] <= levels[i] - w:
            return i - 1
        return i

    @njit
    def _sequential_inclusion_nb(p, k, uniforms):
        trials = uniforms.shape[0]
        N = p.shape[0]
        counts = np.zeros(N, dtype=np.int64)
        avail = np.empty(N, dtype=np.bool_)
        for t in range(trials):
            avail[:] = True
            for step in range(k):
                total = 0.0
                for j in range(N):
                    if avail[j]:
                        total += p[j]
                target = uniforms[t, step] * total
                acc = 0.0
                pick = -1
                last = -1
                for j in range(N):
                    if avail[j]:
                        last = j
                        acc += p[j]
                        if acc > target:
                            pick = j
                            break
                if pick < 0:
                    pick = last
                avail[pick] = False
                counts[pick] += 1
        return counts

    @njit
    def _shift_inclusion_nb(levels, mult, omega_max, k, uniforms):
        trials, B = uniforms.shape
        L = levels.shape[0]
        counts = np.zeros(L, dtype=np.int64)
        chosen = np.empty(L, dtype=np.bool_)
        short = 0
        for t in range(trials):
            chosen[:] = False
            cnt = 0
            for b in range(B):
                if cnt >= k:
                    break
                i = _nearest_one(levels, uniforms[t, b] * omega_max)
                if not chosen[i]:
                    chosen[i] = True
                    cnt += mult[i]
            if cnt < k:
                short += 1
            for i in range(L):
                if chosen[i]:
                    counts[i] += 1
        return counts, short

    numba_impl = SimpleNamespace(
        soft_threshold_cols=_soft_threshold_cols_nb,
        tridiag_matvec=_tridiag_matvec_nb,
        tridiag_minres=_tridiag_minres_nb,
        sequential_inclusion=_sequential_inclusion_nb,
        shift_inclusion=_shift_inclusion_nb,
        name="numba",
    )
else:  # pragma: no cover
    numba_impl = None


def active():
    """Return the kernel namespace selected by the environment."""
    return numba_impl if USE_NUMBA else numpy_impl


def soft_threshold_cols(a, lam, inv_sigma):
    a = np.ascontiguousarray(a, dtype=float)
    return active().soft_threshold_cols(a, np.ascontiguousarray(lam, dtype=float),
                                        np.ascontiguousarray(inv_sigma, dtype=float))


def tridiag_matvec(d, e, x):
    return active().tridiag_matvec(d, e, np.ascontiguousarray(x, dtype=float))


def tridiag_minres(d, e, shift, b, rtol, maxiter):
    return active().tridiag_minres(d, e, float(shift), np.ascontiguousarray(b, dtype=float),
                                   float(rtol), int(maxiter))


def sequential_inclusion(p, k, uniforms):
    return active().sequential_inclusion(np.ascontiguousarray(p, dtype=float), int(k),
                                         np.ascontiguousarray(uniforms, dtype=float))


def shift_inclusion(levels, mult, omega_max, k, uniforms):
    return active().shift_inclusion(np.ascontiguousarray(levels, dtype=float),
                                    np.ascontiguousarray(mult, dtype=np.int64),
                                    float(omega_max), int(k),
                                    np.ascontiguousarray(uniforms, dtype=float))
