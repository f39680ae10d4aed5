"""Truncated Fourier fields on the d-torus and their Wiener-algebra norms.

A field is stored as a dense complex array over the cube of modes
``{k in Z^d : max_i |k_i| <= N}``; the coefficient of mode ``k`` lives at
array index ``k + N``.  Coefficients use the normalisation

    u_hat(k) = (2 pi)^-d  int u(x) exp(-i k.x) dx,    u(x) = sum_k u_hat(k) exp(i k.x),

so ``cos(x)`` has ``u_hat(+-1) = 1/2`` and ``|cos|_0 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .tolerances import (
    DEFAULT_OVERSAMPLE,
    EXP_ARG_MAX,
    HERMITIAN_TOL,
    LINF_SLACK,
    REALNESS_TOL,
)

__all__ = [
    "Lattice",
    "SpectralField",
    "WienerNorms",
    "ModeOutOfRangeError",
    "LatticeMismatchError",
    "GridSizeError",
    "AnalyticHorizonError",
    "NonHermitianError",
    "make_field",
    "wiener_norm",
    "wiener_norms",
    "derivative",
    "convolve",
    "convolve_full",
    "project",
    "to_grid",
    "from_grid",
    "linf_norm",
    "grid_min",
    "analytic_norm",
    "save_checkpoint",
    "load_checkpoint",
]


class ModeOutOfRangeError(ValueError):
    """A wavevector lies outside the lattice cube."""


class LatticeMismatchError(ValueError):
    """Two fields that must share a lattice do not."""


class GridSizeError(ValueError):
    """Physical-space samples do not fit the lattice."""


class AnalyticHorizonError(ValueError):
    """The analytic weight exp(sigma t |k|) would overflow; reduce sigma*t."""


class NonHermitianError(ValueError):
    """Coefficients do not describe a real-valued field."""


@dataclass(frozen=True)
class Lattice:
    """Mode set ``max_i |k_i| <= N`` on the ``d``-torus.

    ``oversample`` sets the physical grid used for point evaluations: the grid
    has ``oversample * (2N + 1)`` points per axis.
    """

    d: int
    N: int
    oversample: int = DEFAULT_OVERSAMPLE

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"truncation radius N must be an integer >= 1, got {self.N}")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise ValueError(f"oversample must be an integer >= 1, got {self.oversample}")

    @property
    def width(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.width,) * self.d

    @property
    def size(self) -> int:
        return self.width**self.d

    @property
    def grid_size(self) -> int:
        return self.oversample * self.width

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        """Integer components ``k_i`` broadcast over the coefficient array."""
        axis = np.arange(-self.N, self.N + 1)
        return tuple(np.meshgrid(*([axis] * self.d), indexing="ij"))

    @cached_property
    def kabs(self) -> np.ndarray:
        """Euclidean |k| for every mode."""
        return np.sqrt(sum(k.astype(float) ** 2 for k in self.wavevectors))

    @cached_property
    def kmax(self) -> np.ndarray:
        return np.max(np.abs(np.stack(self.wavevectors)), axis=0)

    def index(self, k) -> tuple[int, ...]:
        k = _as_wavevector(k, self.d)
        if any(abs(ki) > self.N for ki in k):
            raise ModeOutOfRangeError(f"mode {k} outside lattice with N={self.N}")
        return tuple(ki + self.N for ki in k)

    def __contains__(self, k) -> bool:
        try:
            self.index(k)
        except (ModeOutOfRangeError, ValueError):
            return False
        return True

    def with_N(self, N: int) -> "Lattice":
        return Lattice(self.d, N, self.oversample)


def _as_wavevector(k, d: int) -> tuple[int, ...]:
    if np.isscalar(k):
        k = (k,)
    k = tuple(int(ki) for ki in k)
    if len(k) != d:
        raise ValueError(f"wavevector {k} has {len(k)} components, lattice has d={d}")
    return k


def hermitize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto Hermitian-symmetric coefficients (real fields)."""
    return 0.5 * (coeffs + np.conj(np.flip(coeffs)))


class SpectralField:
    """Immutable truncated Fourier coefficients of a real field."""

    __slots__ = ("lattice", "coeffs")

    def __init__(self, lattice: Lattice, coeffs, *, copy: bool = True):
        # copy=False still converts (and so copies) non-complex input
        arr = np.array(coeffs, dtype=complex) if copy else np.asarray(coeffs, dtype=complex)
        if arr.shape != lattice.shape:
            raise GridSizeError(f"coefficient array {arr.shape} does not match lattice {lattice.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite Fourier coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @classmethod
    def zeros(cls, lattice: Lattice) -> "SpectralField":
        return cls(lattice, np.zeros(lattice.shape, dtype=complex), copy=False)

    def __getitem__(self, k) -> complex:
        return complex(self.coeffs[self.lattice.index(k)])

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[(self.lattice.N,) * self.lattice.d])

    def zero_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[(self.lattice.N,) * self.lattice.d] = 0.0
        return SpectralField(self.lattice, c, copy=False)

    def _check(self, other: "SpectralField"):
        if other.lattice != self.lattice:
            raise LatticeMismatchError(f"{self.lattice} vs {other.lattice}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.lattice, self.coeffs + other.coeffs, copy=False)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.lattice, self.coeffs - other.coeffs, copy=False)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs * float(scalar), copy=False)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.lattice, -self.coeffs, copy=False)

    def __repr__(self):
        return f"SpectralField(d={self.lattice.d}, N={self.lattice.N}, |u|_0={wiener_norm(self, 0):.6g})"


def make_field(lattice: Lattice, modes: Iterable[tuple] = ()) -> SpectralField:
    """Build a real field from ``(k, amplitude)`` pairs.

    Each pair also sets ``u_hat(-k) = conj(amplitude)``; the zero mode is
    always cleared.
    """
    c = np.zeros(lattice.shape, dtype=complex)
    for k, a in modes:
        a = complex(a)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValueError(f"non-finite amplitude for mode {k}")
        idx = lattice.index(k)
        mirror = tuple(2 * lattice.N - i for i in idx)
        c[idx] = a
        c[mirror] = np.conj(a)
    c[(lattice.N,) * lattice.d] = 0.0
    return SpectralField(lattice, c, copy=False)


@dataclass(frozen=True)
class WienerNorms:
    s0: float
    s1: float
    s2: float
    s3: float
    s4: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.s0, self.s1, self.s2, self.s3, self.s4)


def wiener_norm(f: SpectralField, s: float = 0.0) -> float:
    """``|u|_s = sum_k |k|^s |u_hat(k)|``."""
    if s < 0:
        raise ValueError("Wiener index s must be >= 0")
    amp = np.abs(f.coeffs)
    if s == 0:
        return float(amp.sum())
    return float(np.sum(f.lattice.kabs**s * amp))


def wiener_norms(f: SpectralField) -> WienerNorms:
    amp = np.abs(f.coeffs)
    kabs = f.lattice.kabs
    return WienerNorms(*(float(np.sum(kabs**s * amp)) if s else float(amp.sum()) for s in range(5)))


def derivative(f: SpectralField, i: int) -> SpectralField:
    """Partial derivative along axis ``i`` (1-based, as in ``u,_i``)."""
    if not 1 <= i <= f.lattice.d:
        raise ValueError(f"derivative index must lie in 1..{f.lattice.d}, got {i}")
    k = f.lattice.wavevectors[i - 1]
    return SpectralField(f.lattice, 1j * k * f.coeffs, copy=False)


def convolve_full(f: SpectralField, g: SpectralField) -> SpectralField:
    """Exact product of two trigonometric polynomials, without truncation.

    The result lives on the lattice with radius ``N_f + N_g``.  Direct
    summation, so there is no aliasing at all.
    """
    if f.lattice.d != g.lattice.d:
        raise LatticeMismatchError("fields live in different dimensions")
    full = signal.convolve(f.coeffs, g.coeffs, mode="full", method="direct")
    lat = f.lattice.with_N(f.lattice.N + g.lattice.N)
    return SpectralField(lat, hermitize(full), copy=False)


def project(f: SpectralField, N: int) -> SpectralField:
    """Restrict (or zero-pad) ``f`` to the cube of radius ``N``."""
    src = f.lattice.N
    lat = f.lattice.with_N(N)
    if N == src:
        return f
    if N < src:
        sl = (slice(src - N, src + N + 1),) * f.lattice.d
        return SpectralField(lat, f.coeffs[sl])
    c = np.zeros(lat.shape, dtype=complex)
    c[(slice(N - src, N + src + 1),) * f.lattice.d] = f.coeffs
    return SpectralField(lat, c, copy=False)


def convolve(f: SpectralField, g: SpectralField) -> SpectralField:
    """Truncated product ``P_N(f g)`` by direct summation over the mode set."""
    if f.lattice != g.lattice:
        raise LatticeMismatchError(f"{f.lattice} vs {g.lattice}")
    return project(convolve_full(f, g), f.lattice.N)


# --- physical space -------------------------------------------------------


def _wrap_indices(N: int, G: int) -> np.ndarray:
    return np.arange(-N, N + 1) % G


def coeffs_to_grid(coeffs: np.ndarray, N: int, G: int) -> np.ndarray:
    """Real samples of a Hermitian coefficient cube on a ``G^d`` grid (fast path)."""
    d = coeffs.ndim
    if G < 2 * N + 1:
        raise GridSizeError(f"grid of {G} points cannot hold modes up to {N}")
    half = np.zeros((G,) * (d - 1) + (G // 2 + 1,), dtype=complex)
    idx = _wrap_indices(N, G)
    half[np.ix_(*([idx] * (d - 1)), np.arange(N + 1))] = coeffs[..., N:]
    # irfftn ignores the imaginary part of self-conjugate bins; fine for Hermitian input
    return sfft.irfftn(half, s=(G,) * d, norm="forward")


def grid_to_coeffs(samples: np.ndarray, N: int) -> np.ndarray:
    """Project real grid samples onto the cube of radius ``N``."""
    d = samples.ndim
    G = samples.shape[0]
    spec = sfft.rfftn(samples, norm="forward")
    idx = _wrap_indices(N, G)
    pos = spec[np.ix_(*([idx] * (d - 1)), np.arange(N + 1))]
    neg = np.conj(np.flip(pos[..., 1:]))
    return hermitize(np.concatenate([neg, pos], axis=-1))


def to_grid(f: SpectralField, size: int | None = None) -> np.ndarray:
    """Evaluate ``u`` at the uniform grid ``x_j = 2 pi j / G`` on each axis.

    ``G`` defaults to ``oversample * (2N + 1)``.
    """
    lat = f.lattice
    G = lat.grid_size if size is None else int(size)
    if G < lat.width:
        raise GridSizeError(f"grid of {G} points cannot hold modes up to {lat.N}")
    full = np.zeros((G,) * lat.d, dtype=complex)
    idx = _wrap_indices(lat.N, G)
    full[np.ix_(*([idx] * lat.d))] = f.coeffs
    vals = sfft.ifftn(full, norm="forward")
    s0 = float(np.abs(f.coeffs).sum())
    resid = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if resid > REALNESS_TOL * (1.0 + s0):
        raise NonHermitianError(f"imaginary residue {resid:.3e} in grid samples")
    return vals.real


def from_grid(samples, lattice: Lattice) -> SpectralField:
    """Discrete Fourier analysis of real samples followed by ``P_N``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != lattice.d:
        raise GridSizeError(f"expected a {lattice.d}-d sample array, got {samples.ndim}-d")
    G = samples.shape[0]
    if any(n != G for n in samples.shape):
        raise GridSizeError(f"sample grid must be cubic, got {samples.shape}")
    if G < lattice.width:
        raise GridSizeError(f"grid of {G} points cannot resolve modes up to {lattice.N}")
    return SpectralField(lattice, grid_to_coeffs(samples, lattice.N), copy=False)


def _eval_size(lattice: Lattice, oversample: int | None) -> int:
    q = max(lattice.oversample, DEFAULT_OVERSAMPLE) if oversample is None else oversample
    return q * lattice.width


def linf_norm(f: SpectralField, oversample: int | None = None) -> float:
    """Grid maximum of ``|u|``.

    This is a lower bound of the true supremum.  It never exceeds ``|u|_0``;
    a violation beyond roundoff indicates a corrupted field and raises.
    """
    vals = coeffs_to_grid(f.coeffs, f.lattice.N, _eval_size(f.lattice, oversample))
    m = float(np.max(np.abs(vals)))
    s0 = wiener_norm(f, 0)
    if m > s0 + LINF_SLACK * (1.0 + s0):
        raise RuntimeError(f"grid maximum {m!r} exceeds Wiener norm {s0!r}")
    return m


def grid_min(f: SpectralField, oversample: int | None = None) -> float:
    """Grid minimum of ``u``."""
    vals = coeffs_to_grid(f.coeffs, f.lattice.N, _eval_size(f.lattice, oversample))
    return float(np.min(vals))


def analytic_norm(f: SpectralField, sigma: float, t: float) -> float:
    """``sum_k exp(sigma t |k|) |u_hat(k)|``, evaluated term by term in log form."""
    if sigma < 0 or t < 0:
        raise ValueError("sigma and t must be non-negative")
    rate = sigma * t
    lat = f.lattice
    if rate * lat.N * math.sqrt(lat.d) > EXP_ARG_MAX:
        raise AnalyticHorizonError(
            f"sigma*t = {rate:.4g} overflows the weight at |k| = {lat.N * math.sqrt(lat.d):.4g}; reduce sigma*t"
        )
    amp = np.abs(f.coeffs)
    nz = amp > 0
    if rate == 0:
        return float(amp.sum())
    return float(np.sum(np.exp(rate * lat.kabs[nz] + np.log(amp[nz]))))


# --- checkpoints ------------------------------------------------------------


def save_checkpoint(path, f: SpectralField, t: float = 0.0) -> None:
    """Write every mode as ``k1 [k2 [k3]] re im`` under a ``# d N oversample t`` header."""
    lat = f.lattice
    lines = [f"# {lat.d} {lat.N} {lat.oversample} {t!r}"]
    ks = [k.ravel() for k in lat.wavevectors]
    flat = f.coeffs.ravel()
    for n in range(flat.size):
        kk = " ".join(str(int(k[n])) for k in ks)
        lines.append(f"{kk} {flat[n].real:.17g} {flat[n].imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[SpectralField, float]:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Modes absent from the file are zero.  Raises :class:`NonHermitianError`
    when the coefficients do not describe a real field.
    """
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing '# d N oversample t' header")
    head = text[0][1:].split()
    if len(head) != 4:
        raise ValueError(f"{path}: malformed header {text[0]!r}")
    d, N, q = (int(v) for v in head[:3])
    t = float(head[3])
    lat = Lattice(d, N, q)
    c = np.zeros(lat.shape, dtype=complex)
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != d + 2:
            raise ValueError(f"{path}:{lineno}: expected {d + 2} columns, got {len(parts)}")
        k = [int(p) for p in parts[:d]]
        c[lat.index(k)] = complex(float(parts[d]), float(parts[d + 1]))
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    mismatch = float(np.max(np.abs(c - np.conj(np.flip(c)))))
    if mismatch > HERMITIAN_TOL * max(scale, 1e-300):
        raise NonHermitianError(f"{path}: coefficients violate u_hat(-k) = conj(u_hat(k)) by {mismatch:.3e}")
    return SpectralField(lat, c, copy=False), t


def mode_list(lattice: Lattice) -> Sequence[tuple[int, ...]]:
    return list(zip(*(k.ravel().tolist() for k in lattice.wavevectors)))
