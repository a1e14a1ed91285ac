"""Batch runner: ``qha {verify,equivalence,restriction,growth,diagnostics}``.

Exit status is 0 when every check is within tolerance, 1 when a check fails
(the failing names go to stderr) and 2 for an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import AccuracyError, ConfigurationError, LeakageError
from .grid import PhaseGrid
from .hermite import HermiteBasis, basis_from_config

EXPERIMENTS = ("verify", "equivalence", "restriction", "growth", "diagnostics")
FORMATS = ("json", "csv")
THREADS_ENV = "QHA_NUM_THREADS"
SLOPE_CEILING = 7.5


class ConfigError(Exception):
    """Invalid configuration; carries the offending field and its line in the file."""

    def __init__(self, field_name: str, message: str, line: int | None = None, source: str | None = None):
        self.field_name = field_name
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line}: " if line else f"{source or '<config>'}: "
        super().__init__(f"{where}field '{field_name}': {message}")


@dataclass
class RunConfig:
    d: int = 1
    L: float = 8.0
    N: int = 256
    L_x: float = 8.0
    N_x: int = 256
    M: int = 64
    seed: int = 0
    experiment: str = "verify"
    p_grid: list = field(default_factory=lambda: [1.0, 1.5, 2.0, 4.0, math.inf])
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})
    basis: str = "isotropic"
    R_list: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    family_size: int = 32
    family: str = "bumps"

    @classmethod
    def from_dict(cls, payload: dict, text: str | None = None, source: str | None = None) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ConfigError("<root>", "the configuration must be a JSON object", 1, source)
        known = {f.name for f in fields(cls)}
        for key in payload:
            if key not in known:
                raise ConfigError(key, "unknown field", _line_of(text, key), source)
        cfg = cls(**payload)
        cfg.validate(text, source)
        return cfg

    def validate(self, text: str | None = None, source: str | None = None):
        def fail(name, message):
            raise ConfigError(name, message, _line_of(text, name), source)

        for name in ("d", "N", "N_x", "M", "seed", "family_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                fail(name, f"must be an integer, got {v!r}")
        for name in ("L", "L_x"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                fail(name, f"must be a positive number, got {v!r}")
        if self.d != 1:
            fail("d", f"only d = 1 is supported by the grid experiments, got {self.d}")
        for name in ("N", "N_x"):
            v = getattr(self, name)
            if v < 2 or v & (v - 1):
                fail(name, f"must be a power of two, got {v}")
        if self.M < 1:
            fail("M", f"must be positive, got {self.M}")
        if not 0 <= self.seed < 2**64:
            fail("seed", f"must be an unsigned 64-bit integer, got {self.seed}")
        if self.family_size < 1:
            fail("family_size", f"must be positive, got {self.family_size}")
        if self.experiment not in EXPERIMENTS:
            fail("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {self.experiment!r}")
        if self.basis not in ("isotropic", "standard"):
            fail("basis", f"must be 'isotropic' or 'standard', got {self.basis!r}")
        if self.family not in ("bumps", "atoms"):
            fail("family", f"must be 'bumps' or 'atoms', got {self.family!r}")
        try:
            self.p_grid = [_parse_p(p) for p in self.p_grid]
        except (TypeError, ValueError) as exc:
            fail("p_grid", str(exc))
        if not self.p_grid:
            fail("p_grid", "must not be empty")
        try:
            self.R_list = [float(R) for R in self.R_list]
        except (TypeError, ValueError):
            fail("R_list", f"must be a list of numbers, got {self.R_list!r}")
        if not self.R_list or min(self.R_list) < 1.0 or max(self.R_list) > self.L / 2.0:
            fail("R_list", f"entries must lie in [1, L/2] = [1, {self.L / 2}], got {self.R_list}")
        if not isinstance(self.output, dict) or set(self.output) - {"path", "format"}:
            fail("output", "must be an object with keys 'path' and 'format'")
        self.output = {"path": self.output.get("path"), "format": self.output.get("format", "json")}
        if self.output["format"] not in FORMATS:
            fail("output", f"format must be json or csv, got {self.output['format']!r}")

    def phase_grid(self) -> PhaseGrid:
        return PhaseGrid(self.d, float(self.L), self.N)

    def hermite_basis(self) -> HermiteBasis:
        try:
            return basis_from_config(float(self.L_x), self.N_x, self.M, self.d, self.basis)
        except LeakageError as exc:
            raise ConfigError("M", f"basis does not fit the configuration lattice ({exc})") from exc


def _parse_p(p) -> float:
    if isinstance(p, str) and p.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(p, bool):
        raise TypeError(f"p must be a number or 'inf', got {p!r}")
    v = float(p)
    if not v >= 1.0:
        raise ValueError(f"entries must be >= 1, got {p!r}")
    return v


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    needle = f'"{key}"'
    for n, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return n
    return None


def load_config(path: str | None) -> tuple[RunConfig, str | None]:
    """Parse and validate a JSON config; returns the config and its source text."""
    if path is None:
        return RunConfig(), None
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--config", str(exc), None, path) from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, exc.lineno, path) from exc
    return RunConfig.from_dict(payload, text, path), text


# ---------------------------------------------------------------------------
# results


@dataclass
class Outcome:
    """Rows for the report plus the names of failed checks."""

    experiment: str
    columns: list
    rows: list
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self, cfg: RunConfig) -> str:
        payload = {
            "experiment": self.experiment,
            "config": _config_dict(cfg),
            "passed": not self.failures,
            "failures": self.failures,
            "rows": [dict(zip(self.columns, r)) for r in self.rows],
        }
        payload.update(self.extra)
        return json.dumps(_jsonable(payload), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_csv_cell(v) for v in r])
        return buf.getvalue()


def _config_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    return obj


def _csv_cell(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) and v > 0 else repr(v)
    return v


# ---------------------------------------------------------------------------
# experiments


def run_verify(cfg: RunConfig) -> Outcome:
    from .identities import run_suite

    results = run_suite(cfg.phase_grid(), cfg.hermite_basis(), cfg.seed)
    rows = [[r.name, r.anchor, r.tolerance, r.measured, r.passed] for r in results]
    return Outcome("verify", ["identity", "anchor", "tolerance", "measured", "passed"], rows, [r.name for r in results if not r.passed])


def run_equivalence(cfg: RunConfig) -> Outcome:
    from .restriction import P2_TOLERANCE, bump_symbol, equivalence_experiment

    grid, basis = cfg.phase_grid(), cfg.hermite_basis()
    rng = np.random.default_rng(cfg.seed)
    rows, failures = [], []
    for R in cfg.R_list:
        for member in range(cfg.family_size):
            u = bump_symbol(grid, R, rng)
            rep = equivalence_experiment(u, cfg.p_grid, basis, check=False)
            for k, p in enumerate(rep.p_grid):
                ok = all(math.isfinite(v) and v > 0 for v in (rep.ratios[k], rep.inverse_ratios[k]))
                tol = P2_TOLERANCE if p == 2.0 else math.inf
                if p == 2.0:
                    ok = ok and abs(rep.ratios[k] - 1.0) <= P2_TOLERANCE
                if not ok:
                    failures.append(f"R={R} member={member} p={p}")
                rows.append([R, member, p, rep.schatten[k], rep.lebesgue[k], rep.ratios[k], rep.inverse_ratios[k], tol, rep.tail, rep.band_tail, ok])
    cols = ["R", "member", "p", "schatten", "lebesgue", "ratio", "inverse_ratio", "tolerance", "tail", "band_tail", "passed"]
    return Outcome("equivalence", cols, rows, failures)


def run_restriction(cfg: RunConfig, trials: int = 10, tolerance: float = 1e-5) -> Outcome:
    from . import restriction as Rs
    from .identities import random_operator, random_symbol

    grid, basis = cfg.phase_grid(), cfg.hermite_basis()
    mu = Rs.make_measure("circle", radius=1.0, n_atoms=256)
    rng = np.random.default_rng(cfg.seed)
    rows, failures = [], []
    for t in range(trials):
        f = rng.normal(size=256) + 1j * rng.normal(size=256)
        g = random_symbol(grid, rng)
        T = random_operator(basis, rng)
        for kind, (lhs, rhs) in (("classical", Rs.classical_duality(g, f, mu)), ("quantum", Rs.quantum_duality(T, f, mu))):
            err = abs(lhs - rhs) / max(1.0, abs(rhs))
            ok = err <= tolerance
            if not ok:
                failures.append(f"{kind}_duality trial={t}")
            rows.append([t, f"{kind}_duality", "", lhs.real, lhs.imag, rhs.real, rhs.imag, err, tolerance, ok])
        for q in cfg.p_grid:
            rc = Rs.restriction_classical(g, mu, q).norm
            rq = Rs.restriction_quantum(T, mu, q).norm
            rows.append([t, "restriction_norms", q, rc, 0.0, rq, 0.0, math.nan, math.nan, True])
    cols = ["trial", "check", "q", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "error", "tolerance", "passed"]
    return Outcome("restriction", cols, rows, failures)


def run_growth(cfg: RunConfig) -> Outcome:
    from .restriction import radius_growth_study

    table = radius_growth_study(
        cfg.phase_grid(),
        cfg.hermite_basis(),
        cfg.R_list,
        cfg.p_grid,
        family_size=cfg.family_size,
        seed=cfg.seed,
        family=cfg.family,
        workers=thread_count(),
    )
    failures = []
    for f in table.fits:
        if f.p in (1.0, math.inf) and f.slope > SLOPE_CEILING:
            failures.append(f"slope p={f.p} {f.direction} = {f.slope:.3f} > {SLOPE_CEILING}")
        if f.gaussian_fits_better:
            failures.append(f"gaussian rate fits better at p={f.p} {f.direction}")
    for r in table.rows:
        if not (math.isfinite(r.ratio_min) and math.isfinite(r.ratio_max)):
            failures.append(f"non-finite ratio R={r.R} p={r.p}")
    cols = ["R", "p", "direction", "ratio_min", "ratio_max", "slope", "ci_lo", "ci_hi", "sse_polynomial", "sse_gaussian", "gaussian_fits_better"]
    rows = []
    for r in table.rows:
        f = table.fit(r.p, r.direction)
        rows.append([r.R, r.p, r.direction, r.ratio_min, r.ratio_max, r.slope, r.ci_lo, r.ci_hi, f.sse_polynomial, f.sse_gaussian, f.gaussian_fits_better])
    extra = {"slope_ceiling": SLOPE_CEILING, "fits": table.to_dict()["fits"]}
    return Outcome("growth", cols, rows, failures, extra)


def run_diagnostics(cfg: RunConfig) -> Outcome:
    from .restriction import bump_symbol, compactness_diagnostic

    grid, basis = cfg.phase_grid(), cfg.hermite_basis()
    rng = np.random.default_rng(cfg.seed)
    rows, reports = [], []
    for R in cfg.R_list:
        rep = compactness_diagnostic(bump_symbol(grid, R, rng), basis)
        reports.append(dict(rep.to_dict(), R=R))
        for cut, frac in zip(rep.tail_cutoffs, rep.tail_fractions):
            rows.append([R, "singular_tail", cut, frac, rep.singular_flag])
        for rad, sup in zip(rep.annulus_radii, rep.annulus_sups):
            rows.append([R, "annulus_sup", rad, sup, rep.symbol_flag])
    return Outcome("diagnostics", ["R", "profile", "at", "value", "flag"], rows, [], {"reports": reports})


RUNNERS = {
    "verify": run_verify,
    "equivalence": run_equivalence,
    "restriction": run_restriction,
    "growth": run_growth,
    "diagnostics": run_diagnostics,
}


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}", None, "environment") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}", None, "environment")
    return n


def run(cfg: RunConfig) -> tuple[int, Outcome | None]:
    """Run ``cfg.experiment``, write the report, and return ``(status, outcome)``."""
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
    except (AccuracyError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1, None
    fmt = cfg.output["format"]
    text = outcome.to_json(cfg) if fmt == "json" else outcome.to_csv()
    path = cfg.output["path"]
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for name in outcome.failures:
        print(f"FAILED: {name}", file=sys.stderr)
    return (1 if outcome.failures else 0), outcome


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qha", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output path (default: config output.path, else stdout)")
    parser.add_argument("--format", choices=FORMATS, help="output format (default: config output.format)")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit seed overriding the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, text = load_config(args.config)
        line = _line_of(text, "experiment")
        if line and cfg.experiment != args.experiment:
            raise ConfigError(
                "experiment", f"config says {cfg.experiment!r} but the command is {args.experiment!r}", line, args.config
            )
        cfg.experiment = args.experiment
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output["path"] = args.out
        if args.format is not None:
            cfg.output["format"] = args.format
        cfg.validate(text, args.config)
        thread_count()  # validate the environment before any work starts
        cfg.hermite_basis()  # a basis that does not fit the lattice is a configuration error
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    from threadpoolctl import threadpool_limits

    start = time.perf_counter()
    # BLAS stays single-threaded so reductions, and hence output bytes, do not
    # depend on the thread count; QHA_NUM_THREADS sizes the family worker pool
    with threadpool_limits(limits=1):
        status, _ = run(cfg)
    print(f"{cfg.experiment}: {'ok' if status == 0 else 'FAILED'} in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
