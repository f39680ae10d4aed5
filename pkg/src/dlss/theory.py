"""Smallness conditions, decay exponents and trajectory certificates.

For the multi-dimensional equation the data are admissible when
``d^2 P1(|u0|_0) < 1``; the predicted decay rate is ``1 - d^2 P1``.  For the
extended equation the condition reads ``|gamma| P2 + nu P1 < nu`` with rate
``nu - |gamma| P2 - nu P1``.  An admissible run must then satisfy, at every
sample, the mass, Lyapunov, decay, analyticity and positivity clauses checked
by :func:`certify_run`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .models import ModelParams
from .tolerances import BOUND_REL_SLACK, LYAPUNOV_SLACK, MASS_TOL
from .wiener import SpectralField, WienerNorms, analytic_norm, grid_min, linf_norm, wiener_norms

__all__ = [
    "DomainError",
    "eval_P1",
    "eval_P2",
    "TheoremReport",
    "check_condition",
    "critical_amplitude",
    "Diagnostics",
    "snapshot",
    "ClauseResult",
    "CertificateResult",
    "certify_run",
    "effective_rate",
]

DEFAULT_SIGMA_FRACTION = 0.5


class DomainError(ValueError):
    """Argument outside ``[0, 1)``."""


def _check_z(z: float) -> float:
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"argument must lie in [0, 1), got {z}")
    return z


def eval_P1(z: float) -> float:
    """``4z/(1-z) + 5z^2/(1-z)^2 + 4z^3/(1-z)^3``."""
    r = _check_z(z) / (1.0 - z)
    return 4.0 * r + 5.0 * r**2 + 4.0 * r**3


def eval_P2(z: float) -> float:
    """``z/(1-z) + z^2/(1-z)^2``."""
    r = _check_z(z) / (1.0 - z)
    return r + r**2


@dataclass(frozen=True)
class TheoremReport:
    model: str
    u0_norm: float
    condition_value: float
    condition_bound: float
    admissible: bool
    decay_exponent: float
    sigma_max: float
    sigma_used: float
    extrapolated: bool = False  # extended model with mu < 0

    def to_text(self) -> str:
        rows = [
            ("model", self.model),
            ("u0_norm", repr(self.u0_norm)),
            ("condition_value", repr(self.condition_value)),
            ("condition_bound", repr(self.condition_bound)),
            ("admissible", str(self.admissible).lower()),
            ("decay_exponent", repr(self.decay_exponent)),
            ("sigma_max", repr(self.sigma_max)),
            ("sigma_used", repr(self.sigma_used)),
            ("extrapolated", str(self.extrapolated).lower()),
        ]
        return "\n".join(f"{k} = {v}" for k, v in rows)


def _condition(params: ModelParams, z: float) -> tuple[float, float]:
    if params.kind == "multid":
        return params.d**2 * eval_P1(z), 1.0
    return abs(params.gamma) * eval_P2(z) + params.nu * eval_P1(z), params.nu


def check_condition(params: ModelParams, u0_norm: float, sigma_fraction: float = DEFAULT_SIGMA_FRACTION) -> TheoremReport:
    """Evaluate the smallness condition at ``|u0|_0 = u0_norm``.

    Equality is treated as inadmissible.  The analyticity rate is
    ``sigma_fraction`` of the largest admissible one.
    """
    if not 0.0 < sigma_fraction < 1.0:
        raise ValueError(f"sigma_fraction must lie in (0, 1), got {sigma_fraction}")
    value, bound = _condition(params, u0_norm)
    admissible = value < bound
    margin = bound - value
    return TheoremReport(
        model=params.describe(),
        u0_norm=float(u0_norm),
        condition_value=value,
        condition_bound=bound,
        admissible=admissible,
        decay_exponent=margin if admissible else 0.0,
        sigma_max=margin if admissible else 0.0,
        sigma_used=sigma_fraction * margin if admissible else 0.0,
        extrapolated=params.kind == "extended" and params.mu < 0,
    )


def critical_amplitude(params: ModelParams) -> float:
    """The unique ``z*`` in (0, 1) where the condition saturates."""

    def gap(z):
        value, bound = _condition(params, z)
        return value - bound

    # gap(0) = -bound < 0 and gap -> +inf as z -> 1; both P's increase strictly
    hi = 0.5
    while gap(hi) <= 0:
        hi = 0.5 * (1.0 + hi)
    return brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class Diagnostics:
    t: float
    norms: WienerNorms
    linf: float
    mean: float
    analytic0: float
    positivity_margin: float
    decay_bound: float

    CSV_COLUMNS = (
        "t", "s0", "s1", "s2", "s3", "s4", "linf", "mean", "analytic0", "decay_bound", "positivity_margin",
    )

    def csv_row(self) -> tuple[float, ...]:
        return (self.t, *self.norms.as_tuple(), self.linf, self.mean, self.analytic0, self.decay_bound, self.positivity_margin)


def snapshot(u: SpectralField, t: float, report: TheoremReport) -> Diagnostics:
    return Diagnostics(
        t=float(t),
        norms=wiener_norms(u),
        linf=linf_norm(u),
        mean=abs(u.mean),
        analytic0=analytic_norm(u, report.sigma_used, t),
        positivity_margin=1.0 + grid_min(u),
        decay_bound=report.u0_norm * math.exp(-report.decay_exponent * t),
    )


@dataclass
class ClauseResult:
    name: str
    passed: bool
    first_violation: int | None = None
    t_violation: float | None = None
    worst: float = 0.0  # largest normalised excess; <= 0 when the clause holds


@dataclass
class CertificateResult:
    applicable: bool
    clauses: dict[str, ClauseResult] = field(default_factory=dict)
    effective_rate: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.applicable and all(c.passed for c in self.clauses.values())

    @property
    def status(self) -> str:
        if not self.applicable:
            return "condition_not_met"
        return "pass" if self.passed else "fail"

    def to_text(self) -> str:
        lines = [f"status = {self.status}", f"applicable = {str(self.applicable).lower()}"]
        for name, c in self.clauses.items():
            lines.append(f"{name}.passed = {str(c.passed).lower()}")
            lines.append(f"{name}.worst = {c.worst!r}")
            if c.first_violation is not None:
                lines.append(f"{name}.first_violation = {c.first_violation}")
                lines.append(f"{name}.t_violation = {c.t_violation!r}")
        if self.effective_rate is not None:
            lines.append(f"effective_rate = {self.effective_rate!r}")
        if self.note:
            lines.append(f"note = {self.note}")
        return "\n".join(lines)


def _clause(name: str, samples: list[Diagnostics], excess) -> ClauseResult:
    worst = -math.inf
    first = None
    for i, s in enumerate(samples):
        e = excess(i, s)
        if e is None:
            continue
        worst = max(worst, e)
        if e > 0 and first is None:
            first = i
    if worst == -math.inf:
        worst = 0.0
    return ClauseResult(
        name, first is None, first, None if first is None else samples[first].t, worst
    )


def certify_run(samples: list[Diagnostics], report: TheoremReport) -> CertificateResult:
    """Check every sample against the theorem's claims.

    Clauses: ``mass`` (|mean| <= 1e-12), ``lyapunov`` (|u|_0 non-increasing
    up to 1e-9 per interval), ``decay`` (grid max below ``|u0|_0 e^{-lambda t}``),
    ``analyticity`` (weighted norm below ``|u0|_0``), ``positivity``
    (``1 + u > 0``).  Violations are reported, never raised.
    """
    if not report.admissible:
        return CertificateResult(False, note="condition not met; certificate not applicable")
    if any(b.t < a.t for a, b in zip(samples, samples[1:])):
        raise ValueError("samples must be ordered in time")
    slack = 1.0 + BOUND_REL_SLACK
    u0 = report.u0_norm
    clauses = {
        "mass": _clause("mass", samples, lambda i, s: s.mean - MASS_TOL),
        "lyapunov": _clause(
            "lyapunov",
            samples,
            lambda i, s: None if i == 0 else s.norms.s0 - samples[i - 1].norms.s0 - LYAPUNOV_SLACK,
        ),
        "decay": _clause("decay", samples, lambda i, s: s.linf - s.decay_bound * slack),
        "analyticity": _clause("analyticity", samples, lambda i, s: s.analytic0 - u0 * slack),
        "positivity": _clause("positivity", samples, lambda i, s: -s.positivity_margin),
    }
    return CertificateResult(True, clauses, effective_rate=effective_rate(samples))


def effective_rate(samples: list[Diagnostics]) -> float | None:
    """Least-squares slope of ``-log linf`` against ``t`` (informational only)."""
    pts = [(s.t, math.log(s.linf)) for s in samples if s.linf > 0]
    if len(pts) < 2:
        return None
    t, y = np.array(pts).T
    if np.ptp(t) == 0:
        return None
    slope = np.polyfit(t, y, 1)[0]
    return float(-slope)
