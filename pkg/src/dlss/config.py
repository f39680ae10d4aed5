"""Run configuration files and initial-data recipes.

Config files are INI-style with fixed sections and keys; anything unknown is
rejected so a certificate run is exactly what its file says::

    [model]
    kind = multid          # or: extended
    d = 1                  # multid only
    # mu = 0.5             # extended only
    # Gamma = 0.25
    # epsilon = 2.6666666666666665

    [lattice]
    N = 16
    oversample = 4

    [eval]
    mode = taylor          # or: rational
    M = 16

    [stepper]
    dt = 0.01
    scheme = exprk4        # or: expeuler
    safety = 0.999

    [run]
    T = 10
    sample_interval = 0.1
    sigma_fraction = 0.5
    seed = 42

    [init]
    recipe = random(3, 0.1)   # or: cosine(1, 0.1), cosine((1, 0), 0.05)

    [output]
    csv_path = run.csv
    checkpoint_path = state.txt
    checkpoint_interval = 1.0
"""

from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .integrator import StepperConfig
from .models import EvalMode, ModelParams
from .wiener import Lattice, SpectralField, hermitize, make_field

__all__ = [
    "ConfigError",
    "InitRecipe",
    "RunBlock",
    "OutputBlock",
    "RunConfig",
    "parse_config",
    "load_config",
    "parse_recipe",
    "gen_initial_data",
]

MAX_SEED_RETRIES = 10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitRecipe:
    kind: str  # "cosine" or "random"
    k: tuple[int, ...] = (1,)
    amplitude: float = 0.0
    K0: int = 1
    target_norm: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cosine", "random"):
            raise ConfigError(f"unknown initial-data recipe {self.kind!r}")
        if self.kind == "random":
            if self.K0 < 1:
                raise ConfigError("random recipe needs K0 >= 1")
            if not 0.0 <= self.target_norm < 1.0:
                raise ConfigError(f"target_norm must lie in [0, 1), got {self.target_norm}")
        elif not any(self.k):
            raise ConfigError("cosine recipe needs a nonzero wavevector")

    def describe(self) -> str:
        if self.kind == "cosine":
            k = self.k[0] if len(self.k) == 1 else self.k
            return f"cosine({k}, {self.amplitude!r})"
        return f"random({self.K0}, {self.target_norm!r})"


@dataclass(frozen=True)
class RunBlock:
    T: float
    sample_interval: float | None = None
    sigma_fraction: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class OutputBlock:
    csv_path: str | None = None
    checkpoint_path: str | None = None
    checkpoint_interval: float | None = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    lattice: Lattice
    mode: EvalMode
    stepper: StepperConfig
    run: RunBlock
    init: InitRecipe
    output: OutputBlock = field(default_factory=OutputBlock)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, run=replace(self.run, seed=int(seed)))

    def with_csv(self, path: str) -> "RunConfig":
        return replace(self, output=replace(self.output, csv_path=path))


_KEYS = {
    "model": {"kind", "d", "mu", "Gamma", "epsilon"},
    "lattice": {"N", "oversample"},
    "eval": {"mode", "M"},
    "stepper": {"dt", "scheme", "safety"},
    "run": {"T", "sample_interval", "sigma_fraction", "seed"},
    "init": {"recipe"},
    "output": {"csv_path", "checkpoint_path", "checkpoint_interval"},
}
_REQUIRED = {("model", "kind"), ("lattice", "N"), ("run", "T"), ("init", "recipe")}

_RECIPE = re.compile(r"^\s*(cosine|random)\s*\((.*)\)\s*$")


def parse_recipe(text: str, d: int = 1) -> InitRecipe:
    """Parse ``cosine(k, amplitude)`` or ``random(K0, target_norm)``."""
    m = _RECIPE.match(text)
    if not m:
        raise ConfigError(f"cannot parse recipe {text!r}; expected cosine(k, a) or random(K0, norm)")
    kind, body = m.groups()
    try:
        args = ast.literal_eval(f"({body},)")
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"bad recipe arguments in {text!r}") from exc
    if len(args) != 2:
        raise ConfigError(f"recipe {kind} takes two arguments, got {len(args)}")
    if kind == "cosine":
        k, amp = args
        k = (k,) if np.isscalar(k) else tuple(k)
        if len(k) != d:
            raise ConfigError(f"cosine wavevector {k} does not have {d} components")
        return InitRecipe("cosine", k=tuple(int(v) for v in k), amplitude=float(amp))
    K0, norm = args
    if int(K0) != K0:
        raise ConfigError(f"K0 must be an integer, got {K0}")
    return InitRecipe("random", K0=int(K0), target_norm=float(norm))


def _get(cp, section, key, conv, default=None):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return default


def _int(raw: str) -> int:
    v = float(raw)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (Gamma)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp.options(section)) - _KEYS[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    for section, key in sorted(_REQUIRED):
        if not cp.has_option(section, key):
            raise ConfigError(f"missing required key [{section}] {key}")

    try:
        kind = cp.get("model", "kind").strip().lower()
        if kind == "multid":
            model = ModelParams.multid(_get(cp, "model", "d", _int, 1))
        elif kind == "extended":
            if cp.has_option("model", "d") and _get(cp, "model", "d", _int) != 1:
                raise ConfigError("the extended model is one-dimensional")
            model = ModelParams.extended(
                _get(cp, "model", "mu", float, 0.0),
                _get(cp, "model", "Gamma", float, 0.25),
                _get(cp, "model", "epsilon", float, 8.0 / 3.0),
            )
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
        lattice = Lattice(model.d, _get(cp, "lattice", "N", _int), _get(cp, "lattice", "oversample", _int, 4))
        mode = EvalMode(
            _get(cp, "eval", "mode", lambda s: s.strip().lower(), "taylor"),
            _get(cp, "eval", "M", _int, 16),
        )
        stepper = StepperConfig(
            dt=_get(cp, "stepper", "dt", float, 1e-2),
            scheme=_get(cp, "stepper", "scheme", lambda s: s.strip().lower(), "exprk4"),
            safety=_get(cp, "stepper", "safety", float, 0.999),
        )
        run = RunBlock(
            T=_get(cp, "run", "T", float),
            sample_interval=_get(cp, "run", "sample_interval", float),
            sigma_fraction=_get(cp, "run", "sigma_fraction", float, 0.5),
            seed=_get(cp, "run", "seed", _int, 0),
        )
        if not run.T > 0:
            raise ConfigError("[run] T must be positive")
        init = parse_recipe(cp.get("init", "recipe"), model.d)
        if init.kind == "random" and init.K0 > lattice.N:
            raise ConfigError(f"K0 = {init.K0} exceeds the truncation radius N = {lattice.N}")
        output = OutputBlock(
            csv_path=_get(cp, "output", "csv_path", str.strip),
            checkpoint_path=_get(cp, "output", "checkpoint_path", str.strip),
            checkpoint_interval=_get(cp, "output", "checkpoint_interval", float),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(model, lattice, mode, stepper, run, init, output)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _positive_half(lattice: Lattice) -> np.ndarray:
    """Modes whose first nonzero component is positive."""
    ks = lattice.wavevectors
    mask = np.zeros(lattice.shape, dtype=bool)
    lead_zero = np.ones(lattice.shape, dtype=bool)
    for k in ks:
        mask |= lead_zero & (k > 0)
        lead_zero &= k == 0
    return mask


def _random_draw(lattice: Lattice, K0: int, rng: np.random.Generator) -> np.ndarray:
    band = (lattice.kmax >= 1) & (lattice.kmax <= K0) & _positive_half(lattice)
    n = int(band.sum())
    mags = rng.uniform(0.0, 1.0, n)
    phases = rng.uniform(0.0, 2.0 * np.pi, n)
    c = np.zeros(lattice.shape, dtype=complex)
    c[band] = mags * np.exp(1j * phases)
    c = c + np.conj(np.flip(c))  # mirror onto the negative half
    return c


def gen_initial_data(init: InitRecipe, lattice: Lattice, seed: int = 0) -> SpectralField:
    """Zero-mean initial data ``u0``; deterministic given ``seed``."""
    if init.kind == "cosine":
        if len(init.k) != lattice.d:
            raise ConfigError(f"cosine wavevector {init.k} does not match d = {lattice.d}")
        return make_field(lattice, [(init.k, init.amplitude / 2.0)])
    if init.K0 > lattice.N:
        raise ConfigError(f"K0 = {init.K0} exceeds N = {lattice.N}")
    if init.target_norm == 0.0:
        return SpectralField.zeros(lattice)
    for attempt in range(MAX_SEED_RETRIES + 1):
        c = _random_draw(lattice, init.K0, np.random.default_rng(seed + attempt))
        total = float(np.abs(c).sum())
        if total > 0:
            c = hermitize(c * (init.target_norm / total))
            return SpectralField(lattice, c, copy=False)
    raise ConfigError(f"random draw stayed zero for {MAX_SEED_RETRIES} retries from seed {seed}")
