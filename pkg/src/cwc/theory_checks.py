"""Empirical checks of the PDE estimates behind compressive wave computation.

Each check returns a :class:`CheckReport` with one record per case.  A case
whose medium violates the hypothesis of the estimate (e.g. ``Var(log sigma)``
too large) is reported with status ``"hypothesis-failed"`` and never counts
as a violation.  Discretization slack factors are fixed module constants:

* ``GAP_SLACK = 2``: discrete eigenvalue gaps versus the continuous bounds;
* ``NORM_SLACK = 2``: discrete versus continuous sup/L2 norm ratio;
* ``C_SIGMA_SLACK = 8``: combined slack for the incoherence/probability ratio.

Spectral checks default to the lowest quarter of the spectrum
(``RESOLVED_FRACTION``): mode ``m`` of an ``n``-point grid has about
``2n/m`` points per wavelength, so this keeps at least 8 points per
wavelength, the range where the 3-point discretization is faithful.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .eigensolver import dense_spectrum, estimate_omega_max, selection_probabilities
from .errors import ParameterError
from .grid_medium import Grid, Medium, make_random_bv_medium
from .operators import WaveOperator
from .propagation import InitialData, gaussian_bump, reference_solution
from .seeding import derive_seed

GAP_SLACK = 2.0
NORM_SLACK = 2.0
C_SIGMA_SLACK = 8.0
RESOLVED_FRACTION = 0.25


@dataclass
class CaseResult:
    """One checked case; ``margin`` > 0 means the inequality holds with room to spare.

    ``margin`` is ``1 - measured / bound`` for upper bounds (``measured / bound - 1``
    for lower bounds), minimized over the quantities checked in the case.
    """

    case: str
    status: str  # "pass", "violation", "hypothesis-failed"
    margin: float
    seed: int | None = None
    details: dict = field(default_factory=dict)


@dataclass
class CheckReport:
    name: str
    cases: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    @property
    def n_violations(self) -> int:
        return sum(c.status == "violation" for c in self.cases)

    @property
    def n_skipped(self) -> int:
        return sum(c.status == "hypothesis-failed" for c in self.cases)

    @property
    def worst_margin(self) -> float:
        m = [c.margin for c in self.cases if c.status != "hypothesis-failed"]
        return float(min(m)) if m else float("nan")

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def add(self, case: CaseResult) -> None:
        self.cases.append(case)

    def summary(self) -> str:
        return (f"{self.name}: {self.n_cases} cases, {self.n_violations} violations, "
                f"{self.n_skipped} hypothesis-failed, worst margin {self.worst_margin:.4g}")

    def to_jsonl(self) -> str:
        lines = [json.dumps({"check": self.name, "header": self.header}, sort_keys=True)]
        lines += [json.dumps(_jsonable(asdict(c)), sort_keys=True) for c in self.cases]
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

@dataclass
class MediumCase:
    medium: Medium
    label: str
    seed: int | None = None


def random_media_suite(count: int, n: int, bc: str, var_range, jumps_range=(1, 6),
                       seed: int = 0, smoothing: float = 0.0) -> list:
    """``count`` random piecewise-constant media with ``Var(log sigma)`` drawn from ``var_range``."""
    cases = []
    for i in range(count):
        sd = derive_seed(seed, "medium", i)
        rng = np.random.default_rng(sd)
        var = float(rng.uniform(*var_range))
        jumps = int(rng.integers(jumps_range[0], jumps_range[1] + 1))
        med = make_random_bv_medium(var, jumps, Grid(n, bc), seed=sd, smoothing=smoothing)
        cases.append(MediumCase(med, f"bv{i}(var={var:.3f},jumps={jumps})", sd))
    return cases


def bump_data_suite(grid: Grid, count: int, seed: int = 0) -> list:
    """Gaussian bumps of random center, width and amplitude, optionally with velocity."""
    out = []
    rng = np.random.default_rng(derive_seed(seed, "bumps"))
    for i in range(count):
        c = rng.uniform(0.2, 0.8)
        std = rng.uniform(3.0, 15.0) / grid.n
        u0 = gaussian_bump(grid, c, std, rng.uniform(0.5, 2.0))
        if i % 2:
            u1 = gaussian_bump(grid, rng.uniform(0.2, 0.8), std, rng.uniform(-50, 50))
        else:
            u1 = np.zeros(grid.n)
        out.append(InitialData(u0, u1))
    return out


# ---------------------------------------------------------------------------
# eigenvalue gaps
# ---------------------------------------------------------------------------

def gap_bounds(medium: Medium) -> tuple:
    """Continuous lower and upper gap bounds ``(pi -+ Var)/int sigma``."""
    v = medium.var_log_sigma
    I = medium.integral()
    return (np.pi - v) / I, (np.pi + v) / I


def check_gap_bounds(media_suite, modes_fraction: float = RESOLVED_FRACTION) -> CheckReport:
    """Gaps between consecutive discrete ``omega`` against the continuous bounds.

    Passes when ``lo / GAP_SLACK <= gap <= GAP_SLACK * hi`` on the lowest
    ``modes_fraction`` of the spectrum.  Periodic media are informational
    (the estimate is stated for Dirichlet/Neumann), checked on distinct levels.
    """
    if not 0 < modes_fraction <= 1:
        raise ParameterError("modes_fraction must lie in (0, 1]")
    rep = CheckReport("gap_bounds", header={"slack": GAP_SLACK, "modes_fraction": modes_fraction})
    for case in media_suite:
        med = case.medium
        v = med.var_log_sigma
        if v >= np.pi:
            rep.add(CaseResult(case.label, "hypothesis-failed", float("nan"), case.seed, {"var": v}))
            continue
        spec = dense_spectrum(WaveOperator(med))
        om = spec.levels if med.grid.periodic else spec.omegas
        m = max(2, int(np.ceil(modes_fraction * len(om))))
        gaps = np.diff(om[:m])
        lo, hi = gap_bounds(med)
        lo_s, hi_s = lo / GAP_SLACK, hi * GAP_SLACK
        margin = float(min(gaps.min() / lo_s - 1.0, 1.0 - gaps.max() / hi_s))
        bad = np.nonzero((gaps < lo_s) | (gaps > hi_s))[0]
        status = "pass" if bad.size == 0 else "violation"
        if med.grid.periodic and status == "violation":
            status = "hypothesis-failed"
        rep.add(CaseResult(case.label, status, margin, case.seed, {
            "var": v, "bc": med.bc, "modes": int(m), "min_gap": float(gaps.min()),
            "max_gap": float(gaps.max()), "lower": lo, "upper": hi,
            "bad_modes": bad[:20].tolist()}))
    return rep


# ---------------------------------------------------------------------------
# incoherence
# ---------------------------------------------------------------------------

def incoherence(medium: Medium) -> np.ndarray:
    """``sqrt(n) max_j |sigma_j v[j]|`` for every eigenvector (``sum (sigma v)^2 = 1``)."""
    spec = dense_spectrum(WaveOperator(medium))
    return np.sqrt(medium.n) * np.max(np.abs(medium.sigma[:, None] * spec.vectors), axis=0)


def incoherence_bound(medium: Medium) -> float:
    """``NORM_SLACK * sqrt(2) * exp(Var(log sigma))``."""
    return NORM_SLACK * np.sqrt(2.0) * np.exp(medium.var_log_sigma)


def check_incoherence(media_suite, modes_fraction: float = 1.0) -> CheckReport:
    """``sqrt(n) max|sigma v| <= 2 sqrt(2) exp(Var(log sigma))`` for every eigenvector.

    All eigenvectors are checked by default; the count of violations within
    the resolved range (lowest ``RESOLVED_FRACTION``) is recorded as
    ``resolved_violations``.
    """
    rep = CheckReport("incoherence", header={"slack": NORM_SLACK, "modes_fraction": modes_fraction})
    for case in media_suite:
        med = case.medium
        mu = incoherence(med)
        m = max(1, int(np.ceil(modes_fraction * mu.size)))
        mu_c = mu[:m]
        b = incoherence_bound(med)
        bad = np.nonzero(mu_c > b)[0]
        low = int(np.sum(bad < int(np.ceil(RESOLVED_FRACTION * mu.size))))
        rep.add(CaseResult(case.label, "pass" if bad.size == 0 else "violation",
                           float(1.0 - mu_c.max() / b), case.seed, {
                               "var": med.var_log_sigma, "bound": b, "max_mu": float(mu_c.max()),
                               "argmax_mode": int(np.argmax(mu_c)), "n_bad_modes": int(bad.size),
                               "resolved_violations": low, "bad_modes": bad[:20].tolist()}))
    return rep


# ---------------------------------------------------------------------------
# L1 growth
# ---------------------------------------------------------------------------

def weighted_l1(medium: Medium, u) -> np.ndarray:
    """``h sum_j sigma_j |u_j|`` (per column)."""
    s = medium.sigma if np.ndim(u) == 1 else medium.sigma[:, None]
    return medium.grid.spacing * np.sum(s * np.abs(u), axis=0)


def cumulative_integral(medium: Medium, u1) -> np.ndarray:
    """``U1(x_j) = int_0^{x_j} u1`` by the trapezoid rule on the grid points."""
    x = medium.grid.points
    u1 = np.asarray(u1, dtype=float)
    inc = 0.5 * (u1[1:] + u1[:-1]) * np.diff(x)
    first = u1[0] * x[0]
    return first + np.concatenate([[0.0], np.cumsum(inc)])


def l1_growth_constant(medium: Medium) -> float:
    """``D = 1/(1 - Var)`` (Dirichlet/Neumann) or ``1/(1 - Var/2)`` (periodic)."""
    v = medium.var_log_sigma
    return 1.0 / (1.0 - 0.5 * v) if medium.grid.periodic else 1.0 / (1.0 - v)


def l1_hypothesis(medium: Medium) -> bool:
    v = medium.var_log_sigma
    return v < 2.0 if medium.grid.periodic else v < 1.0


def l1_bound(medium: Medium, data: InitialData, t) -> np.ndarray:
    """``2 (smax/smin)^(1/2) D^n (h sum sigma|u0| + h sum sigma^2 |U1|)``, ``n = ceil(t / t_sharp)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    h = medium.grid.spacing
    U1 = cumulative_integral(medium, data.u1)
    base = h * np.sum(medium.sigma * np.abs(data.u0)) + h * np.sum(medium.sigma**2 * np.abs(U1))
    ncross = np.maximum(1, np.ceil(t / medium.t_sharp() - 1e-12))
    return 2.0 * np.sqrt(medium.contrast) * l1_growth_constant(medium) ** ncross * base


def check_l1_growth(media_suite, data_suite, n_crossings: int = 2, n_times: int = 40) -> CheckReport:
    """Weighted l1 norm of the reference solution against the growth bound.

    ``data_suite`` is a list of :class:`InitialData` or a callable
    ``grid -> list``.  Times are ``n_times`` equispaced points in
    ``(0, n_crossings * t_sharp]``.
    """
    rep = CheckReport("l1_growth", header={"n_crossings": n_crossings, "n_times": n_times})
    for case in media_suite:
        med = case.medium
        data_list = data_suite(med.grid) if callable(data_suite) else data_suite
        if not l1_hypothesis(med):
            rep.add(CaseResult(case.label, "hypothesis-failed", float("nan"), case.seed,
                               {"var": med.var_log_sigma}))
            continue
        times = np.linspace(0.0, n_crossings * med.t_sharp(), n_times + 1)[1:]
        worst = np.inf
        worst_ratio = 0.0
        n_bad = 0
        for d in data_list:
            u, _ = reference_solution(med, d, times)
            ratio = weighted_l1(med, u) / l1_bound(med, d, times)
            worst_ratio = max(worst_ratio, float(ratio.max()))
            worst = min(worst, float(1.0 - ratio.max()))
            n_bad += int(np.sum(ratio > 1.0))
        rep.add(CaseResult(case.label, "pass" if n_bad == 0 else "violation", worst, case.seed, {
            "var": med.var_log_sigma, "D": l1_growth_constant(med), "worst_ratio": worst_ratio,
            "n_bad_times": n_bad, "n_data": len(data_list)}))
    return rep


# ---------------------------------------------------------------------------
# sampling proposition
# ---------------------------------------------------------------------------

def check_sampling_proposition(p, k: int, trials: int, seed: int = 0,
                               n_sigma: float = 3.0) -> CheckReport:
    """Monte Carlo inclusion probabilities of sequential draws without replacement.

    At each step one index is drawn with probability ``p_n`` renormalized over
    the indices not yet drawn.  Uniform ``p``: every inclusion frequency must
    be within ``n_sigma`` binomial standard deviations of ``k/N``; otherwise
    it must not fall more than ``n_sigma`` deviations below ``k min(p)``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.isclose(p.sum(), 1.0, atol=1e-12):
        raise ParameterError("p must be a nonnegative vector summing to 1")
    N = p.size
    if int(k) != k or not 1 <= k <= N:
        raise ParameterError(f"k must be an integer in [1, {N}]")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    uniforms = rng.random((trials, int(k)))
    counts = _kernels.sequential_inclusion(p, int(k), uniforms)
    freq = counts / trials
    uniform = np.allclose(p, 1.0 / N, rtol=0, atol=1e-15)
    target = k / N if uniform else k * p.min()
    sd = np.sqrt(max(target * (1 - target), 0.0) / trials)
    tol = n_sigma * sd
    if uniform:
        dev = np.abs(freq - target)
        bad = np.nonzero(dev > tol + 1e-15)[0]
        margin = float(1.0 - dev.max() / tol) if tol > 0 else (0.0 if dev.max() == 0 else -np.inf)
    else:
        short = target - freq
        bad = np.nonzero(short > tol + 1e-15)[0]
        margin = float(1.0 - short.max() / tol) if tol > 0 else (0.0 if short.max() <= 0 else -np.inf)
    rep = CheckReport("sampling_proposition", header={"n_sigma": n_sigma, "trials": trials,
                                                      "k": int(k), "N": N, "uniform": bool(uniform)})
    rep.add(CaseResult("uniform" if uniform else "nonuniform",
                       "pass" if bad.size == 0 else "violation", margin, seed, {
                           "target": target, "frequencies": freq, "binomial_sd": sd,
                           "bad_indices": bad.tolist()}))
    return rep


# ---------------------------------------------------------------------------
# C(sigma)
# ---------------------------------------------------------------------------

@dataclass
class CSigmaEstimate:
    measured: float
    bound: float
    ratio_p: float
    mu: float
    var: float
    passed: bool
    status: str


def estimate_c_sigma(medium: Medium, modes_fraction: float = RESOLVED_FRACTION) -> CSigmaEstimate:
    """Measured ``(p_unif / min p_n) mu^2`` versus ``8 (pi+Var)/(pi-Var) exp(2 Var)``.

    ``p_n`` are the shift-selection probabilities of the distinct levels
    (see :func:`~cwc.eigensolver.selection_probabilities`); ``p_unif`` is one
    over the number of levels.  Both quantities are taken over the lowest
    ``modes_fraction`` of the spectrum, the range where the discretization is
    faithful; the two end levels are excluded (their Voronoi cells are
    one-sided).
    """
    v = medium.var_log_sigma
    if v >= np.pi:
        return CSigmaEstimate(float("nan"), float("nan"), float("nan"), float("nan"), v,
                              True, "hypothesis-failed")
    op = WaveOperator(medium)
    levels, p, mult = selection_probabilities(op, estimate_omega_max(op))
    L = levels.size
    m = max(3, int(np.ceil(modes_fraction * L)))
    p_in = p[1:m]
    ratio = (1.0 / L) / p_in.min()
    spec = dense_spectrum(op)
    n_vec = int(np.sum(mult[:m]))
    mu = float(np.max(np.sqrt(medium.n) * np.abs(medium.sigma[:, None] * spec.vectors[:, :n_vec])))
    measured = ratio * mu**2
    bound = C_SIGMA_SLACK * (np.pi + v) / (np.pi - v) * np.exp(2 * v)
    ok = bool(measured <= bound)
    return CSigmaEstimate(float(measured), float(bound), float(ratio), mu, v, ok,
                          "pass" if ok else "violation")


def check_c_sigma(media_suite, modes_fraction: float = RESOLVED_FRACTION) -> CheckReport:
    rep = CheckReport("c_sigma", header={"slack": C_SIGMA_SLACK, "modes_fraction": modes_fraction})
    for case in media_suite:
        est = estimate_c_sigma(case.medium, modes_fraction)
        margin = float("nan") if est.status == "hypothesis-failed" else 1.0 - est.measured / est.bound
        rep.add(CaseResult(case.label, est.status, margin, case.seed, asdict(est)))
    return rep
