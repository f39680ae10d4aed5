"""Experiment execution behind the CLI: certified runs, sweeps, oracle tables."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import ConfigError, InitRecipe, RunConfig, gen_initial_data
from .integrator import IntegrationResult, integrate
from .models import ModelParams, rhs_rational, rhs_taylor
from .theory import (
    CertificateResult,
    Diagnostics,
    TheoremReport,
    certify_run,
    check_condition,
    critical_amplitude,
    snapshot,
)
from .wiener import SpectralField, save_checkpoint, wiener_norm

__all__ = [
    "EXIT_PASS",
    "EXIT_CONDITION_NOT_MET",
    "EXIT_CLAUSE_FAILED",
    "EXIT_BLOWUP",
    "RunOutcome",
    "run_experiment",
    "write_csv",
    "load_grid",
    "sweep",
    "oracle_compare",
]

log = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CONDITION_NOT_MET = 2
EXIT_CLAUSE_FAILED = 3
EXIT_BLOWUP = 4

MAX_ROWS = 2000


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@dataclass
class RunOutcome:
    report: TheoremReport
    samples: list[Diagnostics]
    certificate: CertificateResult
    result: IntegrationResult

    @property
    def exit_code(self) -> int:
        if not self.result.completed:
            return EXIT_BLOWUP
        if not self.report.admissible:
            return EXIT_CONDITION_NOT_MET
        return EXIT_PASS if self.certificate.passed else EXIT_CLAUSE_FAILED

    def summary(self) -> str:
        lines = [self.report.to_text(), f"integration = {self.result.status}"]
        if self.result.reason:
            lines.append(f"reason = {self.result.reason}")
        lines.append(f"t_final = {self.result.t!r}")
        lines.append(f"samples = {len(self.samples)}")
        lines.append(self.certificate.to_text())
        lines.append(f"exit_code = {self.exit_code}")
        return "\n".join(lines)


def _sample_every(cfg: RunConfig) -> float:
    nsteps = max(1, math.ceil(cfg.run.T / cfg.stepper.dt - 1e-9))
    h = cfg.run.T / nsteps
    if cfg.run.sample_interval is not None:
        return cfg.run.sample_interval
    # t = 0 and t = T are always sampled on top of the interior rows
    return h * max(1, math.ceil(nsteps / (MAX_ROWS - 2)))


def _checkpoint_target(template: str, index: int) -> str:
    return template.format(index=index) if "{index}" in template else template


def run_experiment(cfg: RunConfig, u0: SpectralField | None = None, write: bool = True) -> RunOutcome:
    """Build the report, integrate, sample diagnostics and certify."""
    if u0 is None:
        u0 = gen_initial_data(cfg.init, cfg.lattice, cfg.run.seed)
    report = check_condition(cfg.model, wiener_norm(u0, 0), cfg.run.sigma_fraction)
    samples: list[Diagnostics] = []
    out = cfg.output
    ckpt = {"next": 0.0, "index": 0, "last": None}

    def save(u: SpectralField, t: float):
        save_checkpoint(_checkpoint_target(out.checkpoint_path, ckpt["index"]), u, t)
        ckpt["index"] += 1
        ckpt["last"] = t

    def observe(t: float, u: SpectralField):
        samples.append(snapshot(u, t, report))
        if write and out.checkpoint_path and out.checkpoint_interval and t >= ckpt["next"] - 1e-12:
            save(u, t)
            # first multiple of the interval strictly after t
            ckpt["next"] = out.checkpoint_interval * (math.floor(t / out.checkpoint_interval + 1e-9) + 1)

    result = integrate(u0, cfg.model, cfg.mode, cfg.stepper, cfg.run.T, observe, _sample_every(cfg))
    if write and out.checkpoint_path and ckpt["last"] != result.t:
        save(result.state, result.t)
    certificate = certify_run(samples, report)
    if not result.completed:
        certificate.note = (certificate.note + "; " if certificate.note else "") + f"integration stopped at t={result.t:.6g}"
    if write and out.csv_path:
        write_csv(out.csv_path, samples)
    return RunOutcome(report, samples, certificate, result)


def write_csv(path, samples: list[Diagnostics]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(Diagnostics.CSV_COLUMNS)
    for s in samples:
        w.writerow([_fmt(float(x)) for x in s.csv_row()])
    Path(path).write_text(buf.getvalue())


# --- sweeps -------------------------------------------------------------------

_GRID_KEYS = ("d", "mu", "Gamma", "epsilon", "u0_norm")
_GRID_OPTIONS = ("certify", "T")
_SEP = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class GridSpec:
    axes: dict[str, tuple[float, ...]]
    certify: bool = False
    T: float | None = None

    def points(self) -> list[dict[str, float]]:
        names = [k for k in _GRID_KEYS if k in self.axes]
        return [dict(zip(names, vals)) for vals in itertools.product(*(self.axes[n] for n in names))]


def load_grid(text: str) -> GridSpec:
    """Parse a ``[grid]`` block of comma-separated value lists.

    Example::

        [grid]
        d = 1, 2, 3
        u0_norm = 0.01, 0.05, 0.1
        certify = false
        T = 2.0
    """
    import configparser

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    if cp.sections() != ["grid"]:
        raise ConfigError("grid file must contain exactly one [grid] section")
    axes: dict[str, tuple[float, ...]] = {}
    certify, T = False, None
    for key, raw in cp.items("grid"):
        if key in _GRID_KEYS:
            vals = tuple(float(v) for v in _SEP.split(raw.strip()) if v)
            if not vals:
                raise ConfigError(f"grid axis {key} is empty")
            axes[key] = vals
        elif key == "certify":
            certify = cp.getboolean("grid", key)
        elif key == "T":
            T = float(raw)
        else:
            raise ConfigError(f"unknown grid key {key!r}; allowed: {', '.join(_GRID_KEYS + _GRID_OPTIONS)}")
    if "u0_norm" not in axes:
        raise ConfigError("grid needs a u0_norm axis")
    return GridSpec(axes, certify, T)


def _point_params(base: ModelParams, point: dict[str, float]) -> ModelParams:
    if base.kind == "multid":
        if any(k in point for k in ("mu", "Gamma", "epsilon")):
            raise ConfigError("mu/Gamma/epsilon axes need an extended base model")
        return ModelParams.multid(int(point.get("d", base.d)))
    if "d" in point:
        raise ConfigError("the d axis needs a multid base model")
    return ModelParams.extended(
        point.get("mu", base.mu), point.get("Gamma", base.Gamma), point.get("epsilon", base.epsilon)
    )


SWEEP_COLUMNS = (
    "index", "kind", "d", "mu", "Gamma", "epsilon", "u0_norm",
    "condition_value", "condition_bound", "admissible", "decay_exponent", "critical_amplitude", "certificate",
)


def _sweep_point(args) -> list:
    index, base, point, certify, T = args
    try:
        params = _point_params(base.model, point)
    except ConfigError:
        raise
    except ValueError as exc:
        return [index, base.model.kind, "", "", "", "", point["u0_norm"], "", "", "", "", "", f"invalid: {exc}"]
    z = point["u0_norm"]
    try:
        report = check_condition(params, z, base.run.sigma_fraction)
        row_report = [report.condition_value, report.condition_bound, report.admissible, report.decay_exponent]
    except ValueError:
        report = None
        row_report = ["", "", False, ""]
    zc = critical_amplitude(params)
    status = "skipped"
    if certify:
        if report is None or not report.admissible:
            status = "condition_not_met"
        else:
            init = base.init
            if init.kind == "random":
                init = replace(init, target_norm=z)
            else:
                init = InitRecipe("random", K0=1, target_norm=z)
            cfg = replace(
                base,
                model=params,
                lattice=replace(base.lattice, d=params.d),
                init=init,
                run=replace(base.run, T=T if T is not None else base.run.T),
            )
            try:
                outcome = run_experiment(cfg, write=False)
                status = "blew_up" if not outcome.result.completed else outcome.certificate.status
            except ValueError as exc:
                status = f"error: {exc}"
    extended = params.kind == "extended"
    return [
        index, params.kind, params.d,
        params.mu if extended else "", params.Gamma if extended else "", params.epsilon if extended else "",
        z, *row_report, zc, status,
    ]


def sweep(base: RunConfig, grid: GridSpec, jobs: int = 1) -> str:
    """Evaluate the condition (and optionally a certified run) on every grid point.

    Returns CSV text with rows in grid order regardless of ``jobs``.
    """
    tasks = [(i, base, p, grid.certify, grid.T) for i, p in enumerate(grid.points())]
    if jobs > 1 and grid.certify:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: r[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# --- oracle comparison ----------------------------------------------------------

DEFAULT_LADDER = (4, 8, 16, 30)
ORACLE_COLUMNS = ("M", "diff_s0", "rel_diff", "tail_bound")


@dataclass(frozen=True)
class OracleRow:
    M: int
    diff: float
    rel_diff: float
    tail_bound: float


def oracle_compare(u: SpectralField, params: ModelParams, ladder=DEFAULT_LADDER) -> list[OracleRow]:
    """``|rhs_taylor(M) - rhs_rational|_0`` for each ``M`` in the ladder.

    ``tail_bound`` is ``|u|_0^{M+1} / (1 - |u|_0) |u|_4``, the size of the
    dropped geometric-series tail up to a model constant.
    """
    ref = rhs_rational(u, params)
    scale = wiener_norm(ref, 0)
    z = wiener_norm(u, 0)
    s4 = wiener_norm(u, 4)
    rows = []
    for M in ladder:
        diff = wiener_norm(rhs_taylor(u, params, M) - ref, 0)
        rows.append(OracleRow(int(M), diff, diff / scale if scale else 0.0, z ** (M + 1) / (1 - z) * s4))
    return rows


def oracle_csv(rows: list[OracleRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ORACLE_COLUMNS)
    for r in rows:
        w.writerow([r.M, _fmt(r.diff), _fmt(r.rel_diff), _fmt(r.tail_bound)])
    return buf.getvalue()
