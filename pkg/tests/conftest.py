import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tcdyn import SystemParams

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance results: criterion number -> list of (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
    return bool(passed)


def acceptance_lines() -> list[str]:
    lines = []
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        lines.append(f"[criterion {n}] {verdict}: " + "; ".join(d for _, d in parts))
    return lines


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)


@pytest.fixture
def baseline():
    return SystemParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_physical_state(rng, scale=1.0):
    a1, a2, jm = (scale * complex(*rng.normal(size=2)) for _ in range(3))
    jz = scale * rng.normal()
    x = np.array([a1, np.conj(a1), a2, np.conj(a2), np.conj(jm), jm, jz], complex)
    return x
