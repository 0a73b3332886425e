"""Batch experiment runner binding the library's verification suites.

A run is configured by a single JSON file (schema below), executes one named
suite — ``solve``, ``spectrum``, ``hodograph``, ``grushin``, ``barrier`` or
``verify-all`` — and writes plot-ready CSV tables plus one JSON summary with a
pass/fail line per check into the output directory.  Reruns with the same
config and seed are byte-identical; nothing here draws figures.

Exit codes: 0 when every enabled check passes, 1 on a check failure or a
numerical error inside a suite, 2 on a usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .closed_forms import ClosedFormField, FracOrder, eval_w1s, w1s_jet
from .errors import ConfigInvalid, FracsigError, IoFailure
from .frontier import build_barrier, extract_free_boundary, subsolution_check
from .grushin import (
    GrushinPolynomial,
    apply_delta_Gs,
    dilate,
    eigen_template,
    open_domain_check,
    quasi_triangle_constant,
)
from .hodograph import eval_F, linearization_check, polynomial_bump
from .solver import ProblemSpec, WeightedGrid, solve_vi
from .spectral import eigenvalue, sl_eigen_oracle

SCHEMA_VERSION = 1
SUITES = ("solve", "spectrum", "hodograph", "grushin", "barrier", "verify-all")
OUT_ENV = "FRACSIG_OUT"


# -----------------------------------------------------------------------------
# configuration
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One run = one suite + its parameters.  Parsed from JSON, fully validated.

    ``suite`` and ``s`` are required; everything else has defaults sized so
    that ``verify-all`` finishes in well under a minute and passes.
    """

    suite: str
    s: float
    n: int = 1
    h_list: Tuple[float, ...] = (1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0)
    grid_size: int = 2000
    count: int = 5
    npoints: int = 1000
    ntriples: int = 100_000
    tau: float = 0.25
    seed: int = 20260813
    tag: str = "run"
    out_dir: str = "fracsig-out"
    threads: Optional[int] = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_json(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigInvalid(f"unknown config key {key!r}")
        for req in ("suite", "s"):
            if req not in data:
                raise ConfigInvalid(f"missing required field {req!r}")
        cfg = cls(**data)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        def bad(field, why):
            raise ConfigInvalid(f"field {field!r}: {why}")

        if self.schema_version != SCHEMA_VERSION:
            bad("schema_version", f"expected {SCHEMA_VERSION}, got {self.schema_version!r}")
        if self.suite not in SUITES:
            bad("suite", f"must be one of {', '.join(SUITES)}; got {self.suite!r}")
        if not isinstance(self.s, (int, float)) or not 0.0 < float(self.s) < 1.0:
            bad("s", f"must be a number in (0, 1); got {self.s!r}")
        if self.n not in (1, 2):
            bad("n", f"must be 1 or 2; got {self.n!r}")
        hs = self.h_list
        if (not isinstance(hs, (list, tuple)) or not hs
                or any(not isinstance(h, (int, float)) for h in hs)):
            bad("h_list", "must be a non-empty list of numbers")
        if any(not 0.0 < float(h) <= 0.25 for h in hs):
            bad("h_list", "entries must lie in (0, 0.25]")
        if len(hs) > 1 and any(hs[i + 1] >= hs[i] for i in range(len(hs) - 1)):
            bad("h_list", "entries must be strictly decreasing (coarse to fine)")
        if not isinstance(self.grid_size, int) or not 100 <= self.grid_size <= 200_000:
            bad("grid_size", f"must be an integer in [100, 200000]; got {self.grid_size!r}")
        if not isinstance(self.count, int) or not 1 <= self.count <= 10:
            bad("count", f"must be an integer in [1, 10]; got {self.count!r}")
        if not isinstance(self.npoints, int) or not 10 <= self.npoints <= 1_000_000:
            bad("npoints", f"must be an integer in [10, 1000000]; got {self.npoints!r}")
        if not isinstance(self.ntriples, int) or not 10 <= self.ntriples <= 10_000_000:
            bad("ntriples", f"must be an integer in [10, 10000000]; got {self.ntriples!r}")
        if not isinstance(self.tau, (int, float)) or not 0.0 < float(self.tau) < 2.0:
            bad("tau", f"must be a number in (0, 2); got {self.tau!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            bad("seed", f"must be an integer in [0, 2^64); got {self.seed!r}")
        if (not isinstance(self.tag, str) or not self.tag
                or not all(c.isalnum() or c in "-_" for c in self.tag)):
            bad("tag", f"must be a non-empty [A-Za-z0-9_-] string; got {self.tag!r}")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            bad("out_dir", "must be a non-empty string")
        if self.threads is not None and (
                not isinstance(self.threads, int) or self.threads < 1):
            bad("threads", f"must be a positive integer or null; got {self.threads!r}")

    def normalized(self) -> "ExperimentConfig":
        return replace(self, s=float(self.s), tau=float(self.tau),
                       h_list=tuple(float(h) for h in self.h_list))


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_json(data).normalized()


# -----------------------------------------------------------------------------
# result bundle
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value,
                "threshold": self.threshold, "pass": self.passed}


@dataclass(frozen=True)
class PlotTable:
    """One CSV data table: ``<stem>.csv`` with a documenting header comment."""

    stem: str
    comment: str
    columns: Tuple[str, ...]
    rows: Tuple[tuple, ...]


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    params: dict
    checks: Tuple[Check, ...]
    tables: Tuple[PlotTable, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def emit_plot_data(result: SuiteResult, out_dir) -> List[Path]:
    """Write the bundle's tables as ``<suite>_<tag>.csv`` files.

    Deterministic names and float formatting; the first lines are ``#``
    comments documenting the columns, so the files feed gnuplot directly
    (``set datafile separator comma``).
    """
    out = Path(out_dir)
    paths = []
    for table in result.tables:
        path = out / f"{table.stem}.csv"
        lines = [f"# {table.stem}: {table.comment}",
                 f"# columns: {', '.join(table.columns)}"]
        lines += [",".join(_fmt(v) for v in row) for row in table.rows]
        try:
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths


def _summary_json(result: SuiteResult) -> str:
    doc = {
        "suite": result.suite,
        "params": result.params,
        "checks": [c.to_json() for c in result.checks],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -----------------------------------------------------------------------------
# suites
# -----------------------------------------------------------------------------

def _suite_spectrum(cfg: ExperimentConfig) -> SuiteResult:
    """Angular eigenvalues: discretized oracle vs the closed-form law."""
    oracle = sl_eigen_oracle(cfg.s, cfg.grid_size, cfg.count)
    law = np.array([eigenvalue(k, cfg.s) for k in range(cfg.count)], dtype=float)
    rel = np.abs(oracle - law) / law
    checks = [Check(f"lambda_sq_k{k}", float(oracle[k]), 1e-3, bool(rel[k] <= 1e-3))
              for k in range(cfg.count)]
    checks.append(Check("eigen_rel_err_max", float(np.max(rel)), 1e-3,
                        bool(np.max(rel) <= 1e-3)))
    rows = tuple((k, float(law[k]), float(oracle[k]), float(rel[k]))
                 for k in range(cfg.count))
    table = PlotTable(
        stem=f"spectrum_{cfg.tag}",
        comment=f"angular eigenvalues at s={cfg.s:g}, oracle grid {cfg.grid_size}",
        columns=("k", "lambda_sq_law", "lambda_sq_oracle", "rel_err"),
        rows=rows,
    )
    return SuiteResult("spectrum", {}, tuple(checks), (table,))


def _exact_w1s_on_grid(sv: FracOrder, grid: WeightedGrid) -> np.ndarray:
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    return eval_w1s(sv, mesh[-2], mesh[-1])


def _suite_solve(cfg: ExperimentConfig) -> SuiteResult:
    """Convergence study: recover the explicit solution, track the boundary."""
    sv = FracOrder(cfg.s)
    if cfg.n == 1:
        extents = ((-1.0, 1.0), (0.0, 1.0))

        def data(xn, z):
            return eval_w1s(sv, xn, z)
    else:
        extents = ((-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0))

        def data(x1, xn, z):
            return eval_w1s(sv, xn, z)

    errs: List[float] = []
    fb_off: List[float] = []
    comp: List[float] = []
    last_sol = None
    for h in cfg.h_list:
        grid = WeightedGrid(n=cfg.n, extents=extents, h=h, s=sv)
        spec = ProblemSpec(grid=grid, f=None,
                           obstacle=lambda *a: np.zeros_like(a[0]),
                           dirichlet=data)
        sol = solve_vi(spec, tol=1e-11, omega="auto")
        exact = _exact_w1s_on_grid(sv, grid)
        errs.append(float(np.max(np.abs(sol.values - exact))))
        comp.append(float(sol.comp_residual))
        crossings = extract_free_boundary(sol)
        if cfg.n == 1:
            fb_off.append(float(np.min(np.abs(np.asarray(crossings, dtype=float)))))
        else:
            poly = np.asarray(crossings, dtype=float)
            fb_off.append(float(np.max(np.abs(poly[:, 1]))))
        last_sol = (grid, crossings)

    hs = np.asarray(cfg.h_list, dtype=float)
    orders = [math.nan]
    for i in range(1, len(hs)):
        orders.append(math.log(errs[i - 1] / errs[i]) / math.log(hs[i - 1] / hs[i]))
    if len(hs) > 1:
        slope, _ = np.polyfit(np.log(hs), np.log(np.asarray(errs)), 1)
        order_est = float(slope)
    else:
        order_est = math.nan

    h_min = float(hs[-1])
    checks = [
        Check("sup_error_order", order_est, 0.8,
              bool(len(hs) > 1 and order_est >= 0.8)),
        Check("free_boundary_offset", max(fb_off), 2.0 * h_min,
              bool(max(fb_off) <= 2.0 * h_min)),
        Check("complementarity_residual", max(comp), 1e-8,
              bool(max(comp) <= 1e-8)),
    ]
    rows = tuple((float(hs[i]), errs[i], orders[i]) for i in range(len(hs)))
    tables = [PlotTable(
        stem=f"solve_{cfg.tag}",
        comment=f"sup-norm recovery of the explicit solution, n={cfg.n}, s={cfg.s:g}",
        columns=("h", "sup_error", "order_estimate"),
        rows=rows,
    )]
    if cfg.n == 2 and last_sol is not None:
        poly = np.asarray(last_sol[1], dtype=float)
        tables.append(PlotTable(
            stem=f"solve_fb_{cfg.tag}",
            comment=f"free-boundary polyline at h={h_min:g}, s={cfg.s:g}",
            columns=("x1", "xn_star"),
            rows=tuple((float(a), float(b)) for a, b in poly),
        ))
    return SuiteResult("solve", {}, tuple(checks), tuple(tables))


def _suite_hodograph(cfg: ExperimentConfig) -> SuiteResult:
    """Nonlinear functional at the model plus its linearization."""
    sv = FracOrder(cfg.s)
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(0.1, 1.0, size=(cfg.npoints, 2))
    vm = ClosedFormField(kind="v_model", s=sv)
    res = np.abs(eval_F(vm, points=pts, s=cfg.s))
    res_max = float(np.max(res))

    t_list = (1e-3, 1e-2, 1e-1)
    fit_pts = rng.uniform(0.15, 0.95, size=(400, 2))
    probe_a = polynomial_bump((0.5, 0.5), 0.35, amplitude=0.03)
    probe_b = polynomial_bump((0.6, 0.4), 0.30, amplitude=0.02)
    rep_a = linearization_check(vm, probe_a, t_list, fit_pts, s=cfg.s)
    rep_b = linearization_check(vm, probe_b, t_list, fit_pts, s=cfg.s)
    c_gap = abs(rep_a.c - rep_b.c) / max(abs(rep_a.c), abs(rep_b.c))
    defect_small = float(rep_a.defects[0])
    monotone = all(rep_a.defects[i] <= rep_a.defects[i + 1] + 1e-12
                   for i in range(len(t_list) - 1))

    checks = [
        Check("F_model_residual", res_max, 1e-12, bool(res_max <= 1e-12)),
        Check("linearization_c_agreement", float(c_gap), 1e-2,
              bool(c_gap <= 1e-2)),
        Check("linearization_defect_t1e-3", defect_small, 1e-2,
              bool(defect_small <= 1e-2 and monotone)),
    ]
    res_rows = tuple((float(p[0]), float(p[1]), float(r))
                     for p, r in zip(pts, res))
    defect_rows = tuple((float(t), float(da), float(db))
                        for t, da, db in zip(t_list, rep_a.defects, rep_b.defects))
    tables = (
        PlotTable(
            stem=f"hodograph_{cfg.tag}",
            comment=f"residual map of the nonlinear functional at the model, s={cfg.s:g}",
            columns=("y_n", "y_np1", "abs_F"),
            rows=res_rows,
        ),
        PlotTable(
            stem=f"hodograph_defect_{cfg.tag}",
            comment="linearization defect vs probe amplitude, two bumps",
            columns=("t", "defect_bump_a", "defect_bump_b"),
            rows=defect_rows,
        ),
    )
    return SuiteResult("hodograph", {}, tuple(checks), tables)


def _suite_grushin(cfg: ExperimentConfig) -> SuiteResult:
    """Opening identity, quasi-metric constants, exact kernel identities."""
    s = cfg.s
    rng = np.random.default_rng(cfg.seed)
    samples = rng.uniform(0.15, 1.2, size=(cfg.npoints, 2))

    profiles = {
        "open_defect_xn": lambda a, b: a,
        "open_defect_xnp1_sq": lambda a, b: b * b,
        "open_defect_w1s": lambda a, b: w1s_jet(s, a, b),
    }
    checks = []
    named_values: List[Tuple[str, float]] = []
    for name, prof in profiles.items():
        defect = float(open_domain_check(prof, samples, s))
        checks.append(Check(name, defect, 1e-10, bool(defect <= 1e-10)))
        named_values.append((name, defect))

    ker0 = apply_delta_Gs(eigen_template(s, 1.0, 0.0, 0.0), s)
    ker1 = apply_delta_Gs(eigen_template(s, 0.0, 0.0, 0.0, a_tan=(1.0,)), s)
    pts3 = np.column_stack([rng.uniform(-1.0, 1.0, cfg.npoints),
                            rng.uniform(0.15, 1.2, (cfg.npoints, 2))])
    kernel_val = max(float(np.max(np.abs(ker0(samples)))),
                     float(np.max(np.abs(ker1(pts3)))))
    checks.append(Check("eigen_kernel_identity", kernel_val, 1e-14,
                        bool(kernel_val <= 1e-14)))
    named_values.append(("eigen_kernel_identity", kernel_val))

    a_n, a_p = 0.37, -0.81
    quad = apply_delta_Gs(eigen_template(s, 0.0, a_n, a_p), s)
    got = quad(samples)
    want = (4.0 * ((1.0 + s) * a_n + (1.0 - s) * a_p)
            * samples[:, 0] * samples[:, 1] ** (1.0 - 2.0 * s))
    quad_defect = float(np.max(np.abs(got - want)))
    checks.append(Check("mixed_quadratic_image", quad_defect, 1e-10,
                        bool(quad_defect <= 1e-10)))
    named_values.append(("mixed_quadratic_image", quad_defect))

    kconst = quasi_triangle_constant(ndim=3, ntriples=cfg.ntriples, seed=cfg.seed)
    checks.append(Check("quasi_triangle_K", kconst, 4.0, bool(kconst <= 4.0)))
    named_values.append(("quasi_triangle_K", kconst))

    poly = GrushinPolynomial.random_member(3, 3, rng, homogeneous=True)
    ys = np.column_stack([rng.uniform(-1.0, 1.0, 500),
                          rng.uniform(0.05, 1.5, (500, 2))])
    lam = 1.7
    want_scaled = lam ** 3 * poly(ys)
    hom_defect = float(np.max(np.abs(poly(dilate(ys, lam)) - want_scaled))
                       / np.max(np.abs(want_scaled)))
    checks.append(Check("dilation_homogeneity", hom_defect, 1e-12,
                        bool(hom_defect <= 1e-12)))
    named_values.append(("dilation_homogeneity", hom_defect))

    table = PlotTable(
        stem=f"grushin_{cfg.tag}",
        comment=f"operator/metric check values at s={cfg.s:g} "
                f"({cfg.npoints} samples, {cfg.ntriples} triples)",
        columns=("check", "value"),
        rows=tuple(named_values),
    )
    return SuiteResult("grushin", {}, tuple(checks), (table,))


def _suite_barrier(cfg: ExperimentConfig) -> SuiteResult:
    """Sub/supersolution margins: flat graph at (s, tau), curved showcase."""
    rng = np.random.default_rng(cfg.seed)
    npts = min(cfg.npoints, 2000)

    x_flat = np.column_stack([rng.uniform(-1.0, 1.0, npts)])
    b_flat = rng.uniform(0.05, 1.0, npts)
    lower = build_barrier(None, cfg.s, cfg.tau, "Lower")
    upper = build_barrier(None, cfg.s, cfg.tau, "Upper")
    m_lower = float(subsolution_check(lower, (x_flat, b_flat)))
    m_upper = float(subsolution_check(upper, (x_flat, b_flat)))

    s_c, tau_c = 0.7, 0.25

    def g_curved(t):
        return 0.05 * np.sin(t)

    curved = build_barrier(g_curved, s_c, tau_c, "Lower")
    cand = np.column_stack([rng.uniform(-0.9, 0.9, 20 * npts),
                            rng.uniform(-0.9, 0.9, 20 * npts)])
    b_cand = rng.uniform(0.02, 0.6, 20 * npts)
    keep = curved.cover.covered(cand, b_cand)
    x_curved = cand[keep][:npts]
    b_curved = b_cand[keep][:npts]
    m_curved = float(subsolution_check(curved, (x_curved, b_curved)))

    checks = [
        Check("flat_lower_margin", m_lower, 0.0, bool(m_lower > 0.0)),
        Check("flat_upper_margin", m_upper, 0.0, bool(m_upper < 0.0)),
        Check("curved_lower_margin", m_curved, 0.0, bool(m_curved > 0.0)),
    ]
    table = PlotTable(
        stem=f"barrier_{cfg.tag}",
        comment="normalized extremal barrier residuals (positive lower margin "
                "certifies the subsolution, negative upper the supersolution)",
        columns=("s", "tau", "kind", "margin"),
        rows=(
            (cfg.s, cfg.tau, "flat_lower", m_lower),
            (cfg.s, cfg.tau, "flat_upper", m_upper),
            (s_c, tau_c, "curved_lower", m_curved),
        ),
    )
    return SuiteResult("barrier", {}, tuple(checks), (table,))


_SUITE_FNS: Dict[str, Callable[[ExperimentConfig], SuiteResult]] = {
    "spectrum": _suite_spectrum,
    "solve": _suite_solve,
    "hodograph": _suite_hodograph,
    "grushin": _suite_grushin,
    "barrier": _suite_barrier,
}


# -----------------------------------------------------------------------------
# runner
# -----------------------------------------------------------------------------

def _apply_thread_cap(threads: Optional[int]) -> None:
    if threads is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(threads)
    except ImportError:
        pass  # env vars above still cap pools created later


def run(config: ExperimentConfig) -> Path:
    """Execute the configured suite and write its artifacts.

    Returns the output directory (``FRACSIG_OUT`` overrides the configured
    one).  Files written: one ``<suite>_<tag>.csv`` per data table and
    ``<suite>_summary.json`` with the pass/fail checks.  Suite-specific
    numerical errors propagate to the caller.
    """
    config = config.normalized()
    config._validate()
    _apply_thread_cap(config.threads)
    out = Path(os.environ.get(OUT_ENV) or config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise IoFailure(f"output directory {out} is not writable: {exc}") from exc

    params = asdict(config)
    if config.suite == "verify-all":
        checks: List[Check] = []
        tables: List[PlotTable] = []
        for name in SUITES[:-1]:
            sub = _SUITE_FNS[name](replace(config, suite=name))
            checks += [replace(c, name=f"{name}:{c.name}") for c in sub.checks]
            tables += list(sub.tables)
        result = SuiteResult("verify-all", params, tuple(checks), tuple(tables))
    else:
        sub = _SUITE_FNS[config.suite](config)
        result = SuiteResult(config.suite, params, sub.checks, sub.tables)

    emit_plot_data(result, out)
    summary = out / f"{result.suite}_summary.json"
    try:
        summary.write_text(_summary_json(result), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {summary}: {exc}") from exc
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracsig",
        description="Run a verification/experiment suite from a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--threads", type=int,
                        help="cap numeric thread pools (overrides config)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        if args.out is not None:
            data["out_dir"] = args.out
        if args.seed is not None:
            data["seed"] = args.seed
        if args.threads is not None:
            data["threads"] = args.threads
        cfg = ExperimentConfig.from_json(data).normalized()
    except (OSError, json.JSONDecodeError, ConfigInvalid) as exc:
        print(f"fracsig: config error: {exc}", file=sys.stderr)
        return 2

    try:
        out = run(cfg)
    except ConfigInvalid as exc:
        print(f"fracsig: config error: {exc}", file=sys.stderr)
        return 2
    except FracsigError as exc:
        print(f"fracsig: {cfg.suite}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    summary = json.loads((out / f"{cfg.suite}_summary.json").read_text())
    failed = [c for c in summary["checks"] if not c["pass"]]
    for c in summary["checks"]:
        mark = "PASS" if c["pass"] else "FAIL"
        print(f"[{mark}] {c['name']}: value={c['value']:.6g} "
              f"threshold={c['threshold']:.6g}")
    print(f"fracsig {cfg.suite}: {len(summary['checks']) - len(failed)}"
          f"/{len(summary['checks'])} checks passed -> {out}")
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())
