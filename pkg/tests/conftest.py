from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pbit_forge.ising import IsingModel, SpinDomain

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
DATA = ROOT / "data"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0][2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


@st.composite
def ising_models(draw, min_n=1, max_n=8, domain=None, integer=False):
    n = draw(st.integers(min_n, max_n))
    dom = domain or draw(st.sampled_from(list(SpinDomain)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if integer:
        J = rng.integers(-3, 4, size=(n, n)).astype(float)
        h = rng.integers(-2, 3, size=n).astype(float)
    else:
        J = rng.normal(size=(n, n))
        h = rng.normal(size=n)
    mask = rng.random((n, n)) < draw(st.floats(0.2, 1.0))
    J = np.triu(J * mask, 1)
    return IsingModel.from_dense(J + J.T, h, dom)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
