"""Right-hand sides of the DLSS equations written for ``u = w - 1``.

Multi-dimensional DLSS::

    u_t + Lap^2 u = sum_{i,j} d_i d_j ( u_i u_j / (1 + u) )
                  = I1 + I2 + I3

Extended 1D DLSS (``gamma = mu Gamma``, ``nu = eps (2 Gamma - 2 Gamma^2)``)::

    u_t - (4 gamma / 3) u_xxx + nu u_xxxx = nu (I1 + I2 + I3) + gamma (I4 + I5)

The nonlinear part is evaluated in two independent ways:

* ``taylor``: the rational factors ``1/(1+u)^p`` are replaced by the
  geometric series truncated at power ``M`` and the expanded terms I1..I5
  are formed with exact (alias-free) products, projected once onto the
  lattice.  This is the Galerkin system whose Wiener-norm estimates the
  smallness conditions rely on.
* ``rational``: the flux ``u_i u_j / (1 + u)`` is formed pointwise on an
  oversampled grid, projected, and differentiated spectrally.  It never uses
  the expansion, so it checks the expansion algebra as well as the series.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import fft as sfft

from .tolerances import DEFAULT_OVERSAMPLE, MAX_GRID_POINTS, POSITIVITY_FLOOR
from .wiener import Lattice, SpectralField, coeffs_to_grid, grid_to_coeffs

__all__ = [
    "ModelParams",
    "EvalMode",
    "DegenerateModelError",
    "SeriesDomainError",
    "NearVacuumError",
    "GridTooLargeError",
    "derived_params",
    "linear_symbol",
    "linear_symbols",
    "taylor_terms",
    "rhs_taylor",
    "rhs_rational",
    "nonlinear_rhs",
    "full_rhs",
    "DEFAULT_TAYLOR_ORDER",
]

DEFAULT_TAYLOR_ORDER = 16


class DegenerateModelError(ValueError):
    """The fourth-order coefficient ``nu`` is not positive."""


class SeriesDomainError(ValueError):
    """``|u|_0 >= 1``: the geometric series for ``1/(1+u)`` need not converge."""


class NearVacuumError(ValueError):
    """``1 + u`` came within the positivity floor of zero somewhere on the grid."""


class GridTooLargeError(ValueError):
    """The evaluation grid for this lattice and series order is too large."""


def derived_params(mu: float, Gamma: float, epsilon: float) -> tuple[float, float]:
    """Return ``(gamma, nu) = (mu Gamma, eps (2 Gamma - 2 Gamma^2))``."""
    if not -1.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [-1, 1], got {mu}")
    if not 0.0 <= Gamma <= 0.25:
        raise ValueError(f"Gamma must lie in [0, 1/4], got {Gamma}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    gamma = mu * Gamma
    nu = epsilon * (2.0 * Gamma - 2.0 * Gamma**2)
    if nu <= 0:
        raise DegenerateModelError(f"nu = {nu} <= 0: no fourth-order dissipation")
    return gamma, nu


@dataclass(frozen=True)
class ModelParams:
    """Which equation is solved.

    Use :meth:`multid` or :meth:`extended` rather than the raw constructor.
    """

    kind: str
    d: int = 1
    mu: float = 0.0
    Gamma: float = 0.25
    epsilon: float = 8.0 / 3.0

    def __post_init__(self):
        if self.kind == "multid":
            if self.d not in (1, 2, 3):
                raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        elif self.kind == "extended":
            if self.d != 1:
                raise ValueError("the extended model is one-dimensional")
            derived_params(self.mu, self.Gamma, self.epsilon)
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @classmethod
    def multid(cls, d: int) -> "ModelParams":
        return cls("multid", d=d)

    @classmethod
    def extended(cls, mu: float, Gamma: float, epsilon: float) -> "ModelParams":
        return cls("extended", d=1, mu=float(mu), Gamma=float(Gamma), epsilon=float(epsilon))

    @property
    def gamma(self) -> float:
        return derived_params(self.mu, self.Gamma, self.epsilon)[0] if self.kind == "extended" else 0.0

    @property
    def nu(self) -> float:
        return derived_params(self.mu, self.Gamma, self.epsilon)[1] if self.kind == "extended" else 1.0

    def describe(self) -> str:
        if self.kind == "multid":
            return f"multid(d={self.d})"
        return f"extended(mu={self.mu:g}, Gamma={self.Gamma:g}, epsilon={self.epsilon:g}; gamma={self.gamma:g}, nu={self.nu:g})"


@dataclass(frozen=True)
class EvalMode:
    kind: str = "taylor"
    M: int = DEFAULT_TAYLOR_ORDER

    def __post_init__(self):
        if self.kind not in ("taylor", "rational"):
            raise ValueError(f"unknown evaluation mode {self.kind!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"Taylor order M must be an integer >= 1, got {self.M}")

    @classmethod
    def taylor(cls, M: int = DEFAULT_TAYLOR_ORDER) -> "EvalMode":
        return cls("taylor", M)

    @classmethod
    def rational(cls) -> "EvalMode":
        return cls("rational")


def linear_symbol(params: ModelParams, k) -> complex:
    """Fourier symbol of the linear operator acting on ``exp(i k.x)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if params.kind == "multid":
        return complex(-np.dot(k, k) ** 2)
    (kx,) = k
    return complex(-params.nu * kx**4, -(4.0 * params.gamma / 3.0) * kx**3)


def linear_symbols(params: ModelParams, lattice: Lattice) -> np.ndarray:
    """``linear_symbol`` evaluated on every lattice mode."""
    _check_dims(params, lattice)
    if params.kind == "multid":
        return (-(lattice.kabs**4)).astype(complex)
    (kx,) = lattice.wavevectors
    kx = kx.astype(float)
    return -params.nu * kx**4 - 1j * (4.0 * params.gamma / 3.0) * kx**3


def _check_dims(params: ModelParams, lattice: Lattice):
    if params.d != lattice.d:
        raise ValueError(f"model dimension {params.d} does not match lattice dimension {lattice.d}")


# --- Taylor (Galerkin) form --------------------------------------------------


@lru_cache(maxsize=None)
def _series(M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients of ``S1 = sum_{n<=M} (-u)^n`` and its first two derivatives."""
    s1 = (-1.0) ** np.arange(M + 1)
    return s1, npoly.polyder(s1, 1), npoly.polyder(s1, 2)


def alias_free_size(N: int, M: int) -> int:
    """Grid points per axis on which every product in the Taylor form is exact.

    The expanded terms are polynomials of degree ``(M + 2) N``; projecting
    onto ``|k| <= N`` needs ``G >= (M + 2) N + N + 1``.
    """
    return sfft.next_fast_len((M + 3) * N + 1, real=True)


def _check_grid(G: int, d: int):
    if G**d > MAX_GRID_POINTS:
        raise GridTooLargeError(
            f"evaluation grid {G}^{d} exceeds {MAX_GRID_POINTS} points; lower N or M"
        )


class _GridDerivs:
    """Spectral derivatives of ``u`` sampled on one grid, computed on demand."""

    def __init__(self, coeffs: np.ndarray, lattice: Lattice, G: int):
        self.c = coeffs
        self.lat = lattice
        self.G = G
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def __call__(self, *axes: int) -> np.ndarray:
        key = tuple(sorted(axes))
        if key not in self._cache:
            sym = np.ones(self.lat.shape, dtype=complex)
            for a in key:
                sym = sym * (1j * self.lat.wavevectors[a])
            self._cache[key] = coeffs_to_grid(sym * self.c, self.lat.N, self.G)
        return self._cache[key]


def _series_domain(coeffs: np.ndarray):
    s0 = float(np.abs(coeffs).sum())
    if s0 >= 1.0:
        raise SeriesDomainError(f"|u|_0 = {s0:.6g} >= 1: Taylor form undefined")


def _taylor_grid_terms(coeffs: np.ndarray, lattice: Lattice, params: ModelParams, M: int) -> dict[str, np.ndarray]:
    G = alias_free_size(lattice.N, M)
    _check_grid(G, lattice.d)
    D = _GridDerivs(coeffs, lattice, G)
    u = D()
    c1, c2, c3 = _series(M)
    S1 = npoly.polyval(u, c1)
    S2 = npoly.polyval(u, c2) if M >= 1 else np.zeros_like(u)
    S3 = npoly.polyval(u, c3) if M >= 2 else np.zeros_like(u)
    if params.kind == "multid":
        A = np.zeros_like(u)
        B = np.zeros_like(u)
        C = np.zeros_like(u)
        # fixed (i, j) order keeps the sum bitwise reproducible
        for i, j in product(range(lattice.d), repeat=2):
            ui, uj = D(i), D(j)
            uii, ujj, uij = D(i, i), D(j, j), D(i, j)
            A += uii * ujj + uj * D(i, i, j) + D(i, j, j) * ui + uij * uij
            B += uii * uj * uj + 3.0 * uij * ui * uj + ujj * ui * ui
            C += ui * ui * uj * uj
        # S2 = d/du S1 and S3 = d2/du2 S1, so A S1 + B S2 + C S3 = d_i d_j (u_i u_j S1)
        return {"I1": A * S1, "I2": B * S2, "I3": C * S3}
    ux, uxx, uxxx = D(0), D(0, 0), D(0, 0, 0)
    return {
        "I1": (2.0 * ux * uxxx + 2.0 * uxx**2) * S1,
        "I2": 5.0 * ux**2 * uxx * S2,
        "I3": ux**4 * S3,
        "I4": -2.0 * ux * uxx * S1,
        "I5": -(ux**3) * S2,
    }


def taylor_terms(u: SpectralField, params: ModelParams, M: int = DEFAULT_TAYLOR_ORDER) -> dict[str, SpectralField]:
    """The expanded nonlinear terms, each projected onto the lattice.

    Multi-D terms are already summed over ``i, j``.  The extended model also
    returns I4 and I5; its right-hand side weights them as
    ``nu (I1 + I2 + I3) + gamma (I4 + I5)``.
    """
    _check_dims(params, u.lattice)
    _series_domain(u.coeffs)
    grid = _taylor_grid_terms(u.coeffs, u.lattice, params, M)
    return {name: SpectralField(u.lattice, grid_to_coeffs(v, u.lattice.N), copy=False) for name, v in grid.items()}


def _taylor_coeffs(coeffs: np.ndarray, lattice: Lattice, params: ModelParams, M: int) -> np.ndarray:
    _series_domain(coeffs)
    t = _taylor_grid_terms(coeffs, lattice, params, M)
    if params.kind == "multid":
        total = t["I1"] + t["I2"] + t["I3"]
    else:
        total = params.nu * (t["I1"] + t["I2"] + t["I3"]) + params.gamma * (t["I4"] + t["I5"])
    out = grid_to_coeffs(total, lattice.N)
    # every term is a total derivative; clear the roundoff left in the mean
    out[(lattice.N,) * lattice.d] = 0.0
    return out


def rhs_taylor(u: SpectralField, params: ModelParams, M: int = DEFAULT_TAYLOR_ORDER) -> SpectralField:
    """Nonlinear right-hand side with the series truncated at power ``M``."""
    _check_dims(params, u.lattice)
    return SpectralField(u.lattice, _taylor_coeffs(u.coeffs, u.lattice, params, M), copy=False)


# --- rational (pseudo-spectral) form ----------------------------------------


def _rational_coeffs(coeffs: np.ndarray, lattice: Lattice, params: ModelParams) -> np.ndarray:
    G = max(lattice.oversample, DEFAULT_OVERSAMPLE) * lattice.width
    _check_grid(G, lattice.d)
    D = _GridDerivs(coeffs, lattice, G)
    w = 1.0 + D()
    wmin = float(w.min())
    if wmin < POSITIVITY_FLOOR:
        raise NearVacuumError(f"min(1 + u) = {wmin:.3e} below {POSITIVITY_FLOOR:g}")
    ks = lattice.wavevectors
    if params.kind == "multid":
        out = np.zeros(lattice.shape, dtype=complex)
        for i, j in product(range(lattice.d), repeat=2):
            flux = grid_to_coeffs(D(i) * D(j) / w, lattice.N)
            out += -(ks[i] * ks[j]) * flux
        return out
    (kx,) = ks
    flux = grid_to_coeffs(D(0) ** 2 / w, lattice.N)
    return (-params.nu * kx**2 - 1j * params.gamma * kx) * flux


def rhs_rational(u: SpectralField, params: ModelParams) -> SpectralField:
    """Nonlinear right-hand side with ``1/(1+u)`` evaluated pointwise.

    Multi-D: ``sum_{i,j} d_i d_j (u_i u_j / (1+u))``.  Extended:
    ``nu d_xx g - gamma d_x g`` with ``g = u_x^2 / (1+u)``.
    """
    _check_dims(params, u.lattice)
    return SpectralField(u.lattice, _rational_coeffs(u.coeffs, u.lattice, params), copy=False)


def nonlinear_coeffs(coeffs: np.ndarray, lattice: Lattice, params: ModelParams, mode: EvalMode) -> np.ndarray:
    if mode.kind == "taylor":
        return _taylor_coeffs(coeffs, lattice, params, mode.M)
    return _rational_coeffs(coeffs, lattice, params)


def nonlinear_rhs(u: SpectralField, params: ModelParams, mode: EvalMode) -> SpectralField:
    if mode.kind == "taylor":
        return rhs_taylor(u, params, mode.M)
    return rhs_rational(u, params)


def full_rhs(u: SpectralField, params: ModelParams, mode: EvalMode) -> SpectralField:
    """Linear plus nonlinear right-hand side, ``du/dt``."""
    lin = linear_symbols(params, u.lattice) * u.coeffs
    return SpectralField(u.lattice, lin, copy=False) + nonlinear_rhs(u, params, mode)
