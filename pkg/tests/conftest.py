import numpy as np
import pytest

from morphsim.environment import EvalConfig

G = 9.80665


@pytest.fixture
def tiny_cfg():
    """A very short evaluation: enough to exercise the pipeline, not the physics."""
    return EvalConfig(steps_per_column=200, settle_steps=400, pressure_ramp_steps=200,
                      sample_interval=50)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ----------------------------------------------------------
# Acceptance tests record one verdict per criterion; the terminal summary prints
# one line for each, including criteria whose test never reached a verdict.

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
N_CRITERIA = 8


@pytest.fixture
def verdict():
    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    ran = [r.nodeid for rs in terminalreporter.stats.values() for r in rs
           if getattr(r, "when", None) is not None
           and getattr(r, "nodeid", "").startswith("tests/test_acceptance.py")]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        if k in ACCEPTANCE:
            ok, detail = ACCEPTANCE[k]
            terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        elif any(f"test_criterion_{k}_" in nodeid for nodeid in ran):
            terminalreporter.write_line(f"criterion {k}: FAIL  (no verdict: test errored)")
        else:
            terminalreporter.write_line(f"criterion {k}: NOT RUN  (deselected)")
