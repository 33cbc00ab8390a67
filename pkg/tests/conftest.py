import numpy as np
import pytest

from specvar import measures as M

# criterion number -> (passed, detail); printed after the run
ACCEPTANCE: dict = {}


def record(number: int, passed: bool, detail: str):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_mixture(rng: np.random.Generator) -> M.SpectralMeasure:
    """Conjugation-symmetric disk measure mixing every component kind."""
    parts = []
    for _ in range(rng.integers(1, 3)):
        r, phi = rng.uniform(0.05, 0.95), rng.uniform(0.0, np.pi)
        z = r * np.exp(1j * phi)
        m = rng.uniform(0.1, 1.0)
        parts += [M.Atom(z, m), M.Atom(np.conj(z), m)]
    parts.append(M.Atom(complex(rng.uniform(-0.9, 0.9)), rng.uniform(0.1, 1.0)))
    fam = rng.choice(["uniform", "power", "defniu"])
    if fam == "uniform":
        lo = rng.uniform(-1.0, 0.5)
        f = M.make_family("uniform", lo=lo, hi=rng.uniform(lo + 0.1, 1.0))
    elif fam == "power":
        f = M.make_family("power", gamma=rng.uniform(-1.0, 0.7))
    else:
        f = M.make_family("defniu", a=rng.uniform(0.0, 0.3))
    parts.append(M.IntervalDensity(f, rng.uniform(0.1, 1.0)))
    if rng.random() < 0.5:
        parts.append(M.ArcDensity(rng.uniform(0.1, np.pi), rng.uniform(0.1, 1.0)))
    if rng.random() < 0.5:
        r0 = rng.uniform(0.0, 0.5)
        parts.append(M.PolarDensity(r0, rng.uniform(r0 + 0.1, 0.95), rng.uniform(0.1, 1.0)))
    if rng.random() < 0.5:
        parts.append(M.Atom(1.0 + 0j, rng.uniform(0.1, 1.0)))
    return M.SpectralMeasure(M.DISK, tuple(parts))


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
