import numpy as np
import pytest

from directinfo.ingest import Dataset

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def planted_blocks(n_vars: int, n_obs: int, n_blocks: int, seed, low=0.4, high=1.2):
    """Variables loading on one latent factor per block, plus unit noise.

    Returns the ``(n_vars, n_obs)`` values and the block label of each variable.
    """
    g = np.random.default_rng(seed)
    blocks = np.repeat(np.arange(n_blocks), -(-n_vars // n_blocks))[:n_vars]
    z = g.normal(size=(n_blocks, n_obs))
    load = g.uniform(low, high, n_vars)
    return load[:, None] * z[blocks] + g.normal(size=(n_vars, n_obs)), blocks


@pytest.fixture
def small_dataset():
    """Ten variables, 250 observations: five noisy copies of a factor, five independent."""
    g = np.random.default_rng(0)
    z = g.normal(size=250)
    rows = [z + s * g.normal(size=250) for s in (0.3, 0.5, 0.8, 1.5, 3.0)]
    rows += [g.normal(size=250) for _ in range(5)]
    return Dataset.from_array(np.array(rows))
