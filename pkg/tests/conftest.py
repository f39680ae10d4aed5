import numpy as np
import pytest

from dlss.wiener import Lattice, SpectralField, hermitize


def random_field(lattice: Lattice, K0: int, norm: float, rng: np.random.Generator) -> SpectralField:
    """Zero-mean real field supported on ``1 <= max|k_i| <= K0`` with ``|u|_0 = norm``."""
    c = np.zeros(lattice.shape, dtype=complex)
    band = (lattice.kmax >= 1) & (lattice.kmax <= K0)
    n = int(band.sum())
    c[band] = rng.uniform(0.1, 1.0, n) * np.exp(2j * np.pi * rng.uniform(size=n))
    c = hermitize(c)
    c[(lattice.N,) * lattice.d] = 0.0
    c *= norm / np.abs(c).sum()
    return SpectralField(lattice, c, copy=False)


@pytest.fixture
def rand_field():
    return random_field


# --- acceptance summary ---------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record():
    """``record(n, title, passed, detail)`` stores one acceptance verdict."""

    def _record(n: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE[n] = (title, bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}" + (f": {detail}" if detail else ""))
    passed = sum(ok for _, ok, _ in ACCEPTANCE.values())
    tr.write_line(f"{passed}/{len(ACCEPTANCE)} acceptance criteria passed")
