"""Command-line harness: ``cwc {medium,eig,propagate,sweep,rtm,check}``.

Parameters come from built-in defaults, then an optional flat ``key=value``
config file (``--config``), then explicit flags.  All randomness derives
from ``--seed`` through named streams.  Every data file starts with a
``## `` manifest comment block (config hash, seed, versions); a
``manifest.json`` with the same information plus wall-clock timings is
written next to the outputs, so the data files themselves are byte-identical
across reruns.

Exit status: 0 success, 1 invalid parameters, 2 numerical non-convergence,
3 (``check`` only) at least one gated theory check reported a violation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .errors import ConvergenceError, ParameterError

log = logging.getLogger("cwc")

EXIT_OK, EXIT_PARAM, EXIT_CONVERGENCE, EXIT_CHECK_FAILED = 0, 1, 2, 3

# defaults per subcommand; keys double as config-file keys and flag names
DEFAULTS = {
    "medium": dict(n=1024, bc="periodic", kind="smooth", gamma=2.0, var=0.5, jumps=4,
                   contrast=1.4, seed=0, out="medium.csv"),
    "eig": dict(n=1024, bc="periodic", kind="smooth", gamma=2.0, var=0.5, jumps=4,
                contrast=1.4, medium=None, k=64, seed=0, method="shift_invert",
                include_endpoints=False, format="csv", out="eigenset.csv"),
    "propagate": dict(n=1024, bc="periodic", kind="smooth", gamma=2.0, var=0.5, jumps=4,
                      contrast=1.4, medium=None, k_over_n=0.2, seed=0, t=None, epsilon=1e-8,
                      tol=1e-6, method="dense", out="propagate.csv"),
    "sweep": dict(n=2048, bc="periodic", kind="smooth", gammas="2,4,8",
                  k_over_n="0.05,0.1,0.2,0.3,0.4,0.5", trials=10, n_t=100, seed=0,
                  epsilon=1e-8, tol=1e-6, jobs=1, out="sweep.csv"),
    "rtm": dict(n=1024, n_t=None, k_over_n="0.1,0.2,0.3", trials=5, seed=0, mute=0.05,
                image_k_over_n=0.2, out_image="rtm_image.csv", out_sweep="rtm_error.csv"),
    "check": dict(n=256, media=20, seed=0, trials=100000, out_dir="checks"),
}

INT_KEYS = {"n", "jumps", "k", "trials", "n_t", "media", "jobs"}
FLOAT_KEYS = {"gamma", "var", "contrast", "t", "epsilon", "tol", "mute", "image_k_over_n"}
BOOL_KEYS = {"include_endpoints"}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_config(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, blank lines ignored)."""
    out = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ParameterError(f"{path}:{i}: expected key=value")
        k, v = (t.strip() for t in s.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _coerce(key, value):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "")):
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
        if key in BOOL_KEYS:
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    except ValueError as exc:
        raise ParameterError(f"invalid value for {key}: {value!r}") from exc
    if key == "seed":
        return int(value)
    return value


def resolve_config(cmd: str, file_cfg: dict, flags: dict) -> dict:
    cfg = dict(DEFAULTS[cmd])
    unknown = set(file_cfg) - set(cfg)
    if unknown:
        raise ParameterError(f"unknown config keys for {cmd}: {sorted(unknown)}")
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in flags.items() if v is not None and k in cfg})
    return {k: _coerce(k, v) for k, v in cfg.items()}


def config_hash(cmd: str, cfg: dict) -> str:
    blob = json.dumps({"command": cmd, **cfg}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _float_list(s) -> list:
    try:
        vals = [float(t) for t in str(s).split(",") if t.strip()]
    except ValueError as exc:
        raise ParameterError(f"expected a comma-separated list of numbers, got {s!r}") from exc
    if not vals:
        raise ParameterError("empty list")
    return vals


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

class Run:
    """Collects manifest data and writes data files with a manifest header."""

    def __init__(self, cmd: str, cfg: dict):
        self.cmd = cmd
        self.cfg = cfg
        self.hash = config_hash(cmd, cfg)
        self.outputs = []
        self.timings = {}
        self.status = "ok"
        self.notes = []
        self._t0 = time.perf_counter()

    def header_lines(self) -> list:
        return [
            f"## cwc {self.cmd}",
            f"## config_hash={self.hash} seed={self.cfg.get('seed')}",
            f"## versions cwc={__version__} numpy={np.__version__} "
            f"python={platform.python_version()} kernels={_kernels.active().name}",
            "## config " + json.dumps(self.cfg, sort_keys=True, default=str),
        ]

    def write_text(self, path, body: str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.header_lines()) + "\n" + body)
        self.outputs.append(str(path))

    def write_csv(self, path, columns, rows, fmt="%.12g") -> None:
        lines = [",".join(columns)]
        for r in rows:
            lines.append(",".join(v if isinstance(v, str) else
                                  (str(v) if isinstance(v, (int, np.integer)) else fmt % v)
                                  for v in r))
        self.write_text(path, "\n".join(lines) + "\n")

    def time(self, label, t0) -> None:
        self.timings[label] = round(time.perf_counter() - t0, 6)

    def write_manifest(self, directory) -> Path:
        self.timings["total"] = round(time.perf_counter() - self._t0, 6)
        man = {
            "command": self.cmd, "config": self.cfg, "config_hash": self.hash,
            "seed": self.cfg.get("seed"), "status": self.status, "notes": self.notes,
            "outputs": self.outputs, "timings_s": self.timings,
            "versions": {"cwc": __version__, "numpy": np.__version__,
                         "python": platform.python_version(), "kernels": _kernels.active().name},
        }
        path = Path(directory) / f"manifest_{self.cmd}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")
        return path


# ---------------------------------------------------------------------------
# media
# ---------------------------------------------------------------------------

def build_medium(cfg: dict):
    from .grid_medium import (Grid, constant_medium, make_piecewise_medium,
                              make_random_bv_medium, make_sinusoidal_medium, make_smooth_medium,
                              read_medium_csv)
    from .seeding import derive_seed

    if cfg.get("medium"):
        return read_medium_csv(cfg["medium"])
    grid = Grid(cfg["n"], cfg["bc"])
    kind = cfg["kind"]
    if kind == "smooth":
        return make_smooth_medium(cfg["gamma"], grid)
    if kind == "piecewise":
        return make_piecewise_medium(int(cfg["gamma"]), grid, derive_seed(cfg["seed"], "medium"))
    if kind == "random_bv":
        return make_random_bv_medium(cfg["var"], cfg["jumps"], grid, derive_seed(cfg["seed"], "medium"))
    if kind == "sinusoidal":
        return make_sinusoidal_medium(grid, max(1, int(cfg["gamma"])), cfg["contrast"])
    if kind == "constant":
        return constant_medium(grid)
    raise ParameterError(f"unknown medium kind {kind!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_medium(cfg: dict, run: Run) -> int:
    med = build_medium(cfg)
    lines = [f"# {med.n},{med.bc}"] + [f"{s:.17g}" for s in med.sigma]
    run.write_text(cfg["out"], "\n".join(lines) + "\n")
    run.notes.append(f"var_log_sigma={med.var_log_sigma:.6g} contrast={med.contrast:.6g}")
    return EXIT_OK


def cmd_eig(cfg: dict, run: Run) -> int:
    import io
    import tempfile

    from .eigensolver import draw_eigenset, save_eigenset
    from .operators import WaveOperator

    med = build_medium(cfg)
    t0 = time.perf_counter()
    es = draw_eigenset(WaveOperator(med), cfg["k"], cfg["seed"], method=cfg["method"],
                       include_endpoints=cfg["include_endpoints"])
    run.time("eigenset", t0)
    fmt = cfg["format"]
    with tempfile.TemporaryDirectory() as d:
        tmp = Path(d) / "es"
        save_eigenset(es, tmp, fmt=fmt)
        payload = tmp.read_bytes()
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    buf.write(("\n".join(run.header_lines()) + "\n").encode())
    buf.write(payload)
    out.write_bytes(buf.getvalue())
    run.outputs.append(str(out))
    run.notes.append(f"max_residual={float(np.max(es.residuals)):.3e}")
    return EXIT_OK


def cmd_propagate(cfg: dict, run: Run) -> int:
    from .propagation import (DEFAULT_CFG, InitialData, compressive_solve, gaussian_bump,
                              reference_solution)
    from .seeding import derive_seed

    med = build_medium(cfg)
    n = med.n
    kn = _float_list(cfg["k_over_n"])
    if len(kn) != 1:
        raise ParameterError("propagate takes a single k_over_n")
    k = max(1, min(n, int(round(kn[0] * n))))
    t = med.crossing_time() if cfg["t"] is None else cfg["t"]
    data = InitialData.at_rest(gaussian_bump(med.grid))
    rcfg = DEFAULT_CFG.with_(epsilon=cfg["epsilon"], tol=cfg["tol"])
    t0 = time.perf_counter()
    u = compressive_solve(med, data, t, k, derive_seed(cfg["seed"], "eigenset", 0), cfg=rcfg,
                          method=cfg["method"])
    run.time("compressive_solve", t0)
    t0 = time.perf_counter()
    u_ref, _ = reference_solution(med, data, t)
    run.time("reference", t0)
    rel = float(np.linalg.norm(u - u_ref) / max(np.linalg.norm(u_ref), 1e-300))
    run.notes.append(f"k={k} t={t:.12g} relative_l2_error={rel:.6e}")
    rows = [(j, float(x), float(a), float(b)) for j, (x, a, b) in
            enumerate(zip(med.grid.points, u_ref, u))]
    run.write_csv(cfg["out"], ["j", "x", "u_reference", "u_compressive"], rows)
    return EXIT_OK


def _sweep_cell(args):
    gamma, kn, cfg = args
    from .propagation import DEFAULT_CFG, error_measure
    from .seeding import derive_seed

    c = dict(cfg, gamma=gamma, medium=None)
    med = build_medium(c)
    rcfg = DEFAULT_CFG.with_(epsilon=cfg["epsilon"], tol=cfg["tol"])
    t0 = time.perf_counter()
    st = error_measure(med, kn, cfg["trials"], n_t=cfg["n_t"],
                       seed=derive_seed(cfg["seed"], "sweep", repr(gamma)), cfg=rcfg)
    return gamma, kn, st.k, st.err, st.rel_l2, time.perf_counter() - t0


def cmd_sweep(cfg: dict, run: Run) -> int:
    gammas = _float_list(cfg["gammas"])
    kns = _float_list(cfg["k_over_n"])
    cells = [(g, kn, cfg) for g in gammas for kn in kns]
    columns = ["gamma", "k_over_n", "k", "err", "rel_l2"]
    rows = []

    def add(res):
        g, kn, k, err, rel, dt = res
        rows.append((g, kn, k, err, rel))
        run.timings[f"gamma={g:g},k/n={kn:g}"] = round(dt, 6)

    try:
        if cfg["jobs"] > 1:
            with ProcessPoolExecutor(max_workers=cfg["jobs"]) as ex:
                for res in ex.map(_sweep_cell, cells):  # input order: deterministic merge
                    add(res)
        else:
            for c in cells:
                add(_sweep_cell(c))
    except ConvergenceError:
        run.write_csv(cfg["out"], columns, rows)  # partial output
        raise
    run.write_csv(cfg["out"], columns, rows)
    return EXIT_OK


def cmd_rtm(cfg: dict, run: Run) -> int:
    from .rtm import migrate, two_reflector_configuration, reference_image, rtm_error
    from .seeding import derive_seed

    t0 = time.perf_counter()
    prob = two_reflector_configuration(cfg["n"], n_t=cfg["n_t"], mute=cfg["mute"])
    r0 = reference_image(prob)
    run.time("setup_and_reference", t0)
    n = prob.n
    k_img = max(1, min(n, int(round(cfg["image_k_over_n"] * n))))
    t0 = time.perf_counter()
    img = migrate(prob, k_img, derive_seed(cfg["seed"], "rtm-image"))
    run.time("image", t0)
    rows = [(j, float(x), float(a), float(b), float(c)) for j, (x, a, b, c) in
            enumerate(zip(prob.grid.points, prob.r, r0, img))]
    run.write_csv(cfg["out_image"], ["j", "x", "r_true", "r_reference", "r_compressive"], rows)
    rows = []
    for kn in _float_list(cfg["k_over_n"]):
        k = max(1, min(n, int(round(kn * n))))
        t0 = time.perf_counter()
        st = rtm_error(prob, k, cfg["trials"], seed=cfg["seed"], reference=r0)
        run.time(f"k/n={kn:g}", t0)
        rows.append((kn, k, st.err, st.rel_l2))
    run.write_csv(cfg["out_sweep"], ["k_over_n", "k", "err", "rel_l2"], rows)
    return EXIT_OK


def cmd_check(cfg: dict, run: Run) -> int:
    from .grid_medium import Grid, constant_medium, make_smooth_medium
    from .theory_checks import (MediumCase, bump_data_suite, check_c_sigma, check_gap_bounds,
                                check_incoherence, check_l1_growth, check_sampling_proposition,
                                random_media_suite)

    n, m, seed = cfg["n"], cfg["media"], cfg["seed"]
    out = Path(cfg["out_dir"])
    gap_suite = random_media_suite(m, n, "dirichlet", (0.2, 2.0), seed=seed)
    l1_suite = random_media_suite(m, n, "dirichlet", (0.1, 0.95), seed=seed + 1)
    extra = [MediumCase(constant_medium(Grid(n, "dirichlet")), "constant"),
             MediumCase(make_smooth_medium(8, Grid(n, "periodic")), "smooth_gamma8")]
    reports = []
    t0 = time.perf_counter()
    reports.append(check_gap_bounds(gap_suite))
    reports.append(check_incoherence(gap_suite + extra))
    reports.append(check_l1_growth(l1_suite, lambda g: bump_data_suite(g, 10, seed=seed)))
    reports.append(check_c_sigma(gap_suite + extra))
    N = 10
    reports.append(check_sampling_proposition(np.full(N, 1.0 / N), 3, cfg["trials"], seed=seed))
    p = np.array([0.4, 0.3, 0.2, 0.1])
    rep = check_sampling_proposition(p, 2, cfg["trials"], seed=seed + 1)
    rep.name = "sampling_proposition_nonuniform"
    reports.append(rep)
    run.time("checks", t0)
    summary = []
    for rep in reports:
        run.write_text(out / f"{rep.name}.jsonl", rep.to_jsonl())
        summary.append(rep.summary())
    run.write_text(out / "summary.txt", "\n".join(summary) + "\n")
    for s in summary:
        print(s)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        run.status = "violations"
        run.notes.append("violations in: " + ", ".join(failed))
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {"medium": cmd_medium, "eig": cmd_eig, "propagate": cmd_propagate,
            "sweep": cmd_sweep, "rtm": cmd_rtm, "check": cmd_check}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cwc", description="Compressive wave computation experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"medium": "write a medium", "eig": "draw a random eigenset",
             "propagate": "compressive vs reference solution at one time",
             "sweep": "error-decay sweep over gamma and k/n", "rtm": "compressive snapshot migration",
             "check": "run the theory check suites"}
    for cmd, defaults in DEFAULTS.items():
        p = sub.add_parser(cmd, help=helps[cmd])
        p.add_argument("--config", help="flat key=value file; flags override it")
        p.add_argument("--manifest-dir", help="where manifest JSON goes (default: beside the first output)")
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(val, bool):
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, dest=key, default=None,
                               help=f"default: {val}")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command
    run = None
    try:
        file_cfg = read_config(args.config) if args.config else {}
        cfg = resolve_config(cmd, file_cfg, vars(args))
        run = Run(cmd, cfg)
        code = COMMANDS[cmd](cfg, run)
    except ParameterError as exc:
        print(f"cwc {cmd}: parameter error: {exc}", file=sys.stderr)
        code = EXIT_PARAM
        if run is not None:
            run.status = "parameter-error"
            run.notes.append(str(exc))
    except ConvergenceError as exc:
        print(f"cwc {cmd}: no convergence: {exc}", file=sys.stderr)
        code = EXIT_CONVERGENCE
        run.status = "non-convergence"
        run.notes.append(str(exc))
    if run is not None:
        if args.manifest_dir:
            mdir = Path(args.manifest_dir)
        elif run.outputs:
            mdir = Path(run.outputs[0]).parent
        else:
            mdir = Path(cfg.get("out_dir", ".")) if cmd == "check" else Path(".")
        run.write_manifest(mdir)
    return code


if __name__ == "__main__":
    sys.exit(main())
