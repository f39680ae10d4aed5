"""Exponential time stepping for ``du_hat/dt = L(k) u_hat + N(u)(k)``.

The linear symbol is diagonal, so ``exp(L dt)`` is applied exactly per mode
and only the nonlinear part is approximated.  ``exprk4`` is the five-stage
Hochbruck-Ostermann scheme, which keeps order four on stiff parabolic
problems (the four-stage Cox-Matthews scheme drops towards order three
here).  ``expeuler`` is first-order exponential Euler.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .models import EvalMode, ModelParams, NearVacuumError, SeriesDomainError, linear_symbols, nonlinear_coeffs
from .tolerances import LYAPUNOV_SLACK
from .wiener import Lattice, SpectralField, hermitize

__all__ = [
    "StepperConfig",
    "BlowUpError",
    "IntegrationResult",
    "phi_functions",
    "step",
    "integrate",
]

log = logging.getLogger(__name__)

SCHEMES = ("exprk4", "expeuler")
_SERIES_TERMS = 20


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-2
    scheme: str = "exprk4"
    safety: float = 0.999
    phi_switch: float = 1.0
    halve_on_slack: bool = False
    max_halvings: int = 6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.safety < 1:
            raise ValueError(f"safety must lie in (0, 1), got {self.safety}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.phi_switch > 0:
            raise ValueError("phi_switch must be positive")


class BlowUpError(RuntimeError):
    """The guard tripped; ``state`` is the last accepted state at time ``t``."""

    def __init__(self, message: str, t: float, state: SpectralField):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass
class IntegrationResult:
    status: str  # "completed" or "blew_up"
    t: float
    state: SpectralField
    steps: int
    reason: str = ""
    halvings: int = 0

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def _phi_series(z: np.ndarray, order: int) -> np.ndarray:
    # phi_k(z) = sum_n z^n / (n + k)!
    acc = np.full_like(z, 1.0 / math.factorial(order + _SERIES_TERMS - 1))
    for n in range(_SERIES_TERMS - 2, -1, -1):
        acc = acc * z + 1.0 / math.factorial(order + n)
    return acc


def _phi_direct(z: np.ndarray, order: int) -> np.ndarray:
    em1 = np.expm1(z)
    if order == 1:
        return em1 / z
    if order == 2:
        return (em1 - z) / z**2
    return (em1 - z - 0.5 * z**2) / z**3


def phi_functions(z, order: int, switch: float = 1.0):
    """``phi_1(z) = (e^z - 1)/z``, ``phi_2``, ``phi_3``, stable at small ``|z|``.

    Arguments with ``|z| < switch`` use a 20-term Taylor series.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"phi order must be 1, 2 or 3, got {order}")
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < switch
    out[small] = _phi_series(z[small], order)
    big = ~small
    out[big] = _phi_direct(z[big], order)
    return complex(out) if scalar else out


@dataclass(frozen=True)
class _Tableau:
    E: np.ndarray
    E2: np.ndarray
    a21: np.ndarray
    a31: np.ndarray
    a32: np.ndarray
    a41: np.ndarray
    a42: np.ndarray
    a51: np.ndarray
    a52: np.ndarray
    a54: np.ndarray
    b1: np.ndarray
    b4: np.ndarray
    b5: np.ndarray
    P1: np.ndarray


@lru_cache(maxsize=64)
def _tableau(lattice: Lattice, params: ModelParams, h: float, switch: float) -> _Tableau:
    z = linear_symbols(params, lattice) * h
    p1, p2, p3 = (phi_functions(z, n, switch) for n in (1, 2, 3))
    q1, q2, q3 = (phi_functions(z / 2, n, switch) for n in (1, 2, 3))
    a52 = 0.5 * q2 - p3 + 0.25 * p2 - 0.5 * q3
    a54 = 0.25 * q2 - a52
    return _Tableau(
        E=np.exp(z),
        E2=np.exp(z / 2),
        a21=h * 0.5 * q1,
        a31=h * (0.5 * q1 - q2),
        a32=h * q2,
        a41=h * (p1 - 2 * p2),
        a42=h * p2,
        a51=h * (0.5 * q1 - 2 * a52 - a54),
        a52=h * a52,
        a54=h * a54,
        b1=h * (p1 - 3 * p2 + 4 * p3),
        b4=h * (4 * p3 - p2),
        b5=h * (4 * p2 - 8 * p3),
        P1=h * p1,
    )


def _advance(c: np.ndarray, lattice: Lattice, params: ModelParams, mode: EvalMode, h: float, cfg: StepperConfig) -> np.ndarray:
    tab = _tableau(lattice, params, h, cfg.phi_switch)

    def nl(x):
        return nonlinear_coeffs(x, lattice, params, mode)

    n1 = nl(c)
    if cfg.scheme == "expeuler":
        new = tab.E * c + tab.P1 * n1
    else:
        half = tab.E2 * c
        n2 = nl(half + tab.a21 * n1)
        n3 = nl(half + tab.a31 * n1 + tab.a32 * n2)
        n4 = nl(tab.E * c + tab.a41 * n1 + tab.a42 * (n2 + n3))
        n5 = nl(half + tab.a51 * n1 + tab.a52 * (n2 + n3) + tab.a54 * n4)
        new = tab.E * c + tab.b1 * n1 + tab.b4 * n4 + tab.b5 * n5
    new = hermitize(new)
    new[(lattice.N,) * lattice.d] = 0.0
    return new


def _guarded(c, lattice, params, mode, h, cfg, t, last: SpectralField) -> np.ndarray:
    try:
        new = _advance(c, lattice, params, mode, h, cfg)
    except (SeriesDomainError, NearVacuumError) as exc:
        raise BlowUpError(f"stage evaluation failed at t={t:.6g}: {exc}", t, last) from exc
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite coefficient after step from t={t:.6g}", t, last)
    s0 = float(np.abs(new).sum())
    if s0 >= cfg.safety:
        raise BlowUpError(f"|u|_0 = {s0:.6g} exceeds guard {cfg.safety} after step from t={t:.6g}", t, last)
    return new


def step(u: SpectralField, params: ModelParams, mode: EvalMode, cfg: StepperConfig, t: float = 0.0) -> SpectralField:
    """Advance ``u`` by one step of size ``cfg.dt``."""
    s0 = float(np.abs(u.coeffs).sum())
    if s0 >= cfg.safety:
        raise BlowUpError(f"|u|_0 = {s0:.6g} exceeds guard {cfg.safety}", t, u)
    new = _guarded(u.coeffs, u.lattice, params, mode, cfg.dt, cfg, t, u)
    return SpectralField(u.lattice, new, copy=False)


Observer = Callable[[float, SpectralField], None]


def integrate(
    u0: SpectralField,
    params: ModelParams,
    mode: EvalMode,
    cfg: StepperConfig,
    T: float,
    observer: Observer | None = None,
    sample_interval: float | None = None,
) -> IntegrationResult:
    """Step from 0 to ``T``, calling ``observer(t, u)`` at sample times.

    The step is shrunk slightly, if needed, so that an integer number of
    steps lands exactly on ``T``.  Samples are taken at ``t = 0``, every
    ``sample_interval`` and at ``T``.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    nsteps = max(1, math.ceil(T / cfg.dt - 1e-9))
    h = T / nsteps
    every = 1 if sample_interval is None else max(1, round(sample_interval / h))
    lattice = u0.lattice
    u = u0
    if observer is not None:
        observer(0.0, u)
    halvings = 0
    s0_limit = float(np.abs(u.coeffs).sum())
    if s0_limit >= cfg.safety:
        return IntegrationResult("blew_up", 0.0, u, 0, reason=f"|u0|_0 = {s0_limit:.6g} exceeds guard")

    def sub(c, hh, t, depth):
        nonlocal halvings
        new = _guarded(c, lattice, params, mode, hh, cfg, t, u)
        if cfg.halve_on_slack and depth < cfg.max_halvings:
            before = float(np.abs(c).sum())
            if float(np.abs(new).sum()) > before + LYAPUNOV_SLACK:
                halvings += 1
                mid = sub(c, hh / 2, t, depth + 1)
                new = sub(mid, hh / 2, t + hh / 2, depth + 1)
        return new

    for n in range(nsteps):
        t = n * h
        try:
            c = sub(u.coeffs, h, t, 0)
        except BlowUpError as exc:
            log.warning("%s", exc)
            return IntegrationResult("blew_up", exc.t, exc.state, n, reason=str(exc), halvings=halvings)
        u = SpectralField(lattice, c, copy=False)
        done = n + 1
        if observer is not None and (done % every == 0 or done == nsteps):
            observer(done * h if done < nsteps else T, u)
    return IntegrationResult("completed", T, u, nsteps, halvings=halvings)
