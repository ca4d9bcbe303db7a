import numpy as np
import pytest

from synthrec import GeneratorConfig, PowerLaw

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def two_topic_config(**overrides) -> GeneratorConfig:
    """The two-population, two-topic setup used by the experiments."""
    kw = dict(
        n_users=1000,
        n_items=1000,
        K=4,
        p=2,
        c=2,
        eps=0.01,
        delta=1.0,
        tau=5,
        item_pop_spec=PowerLaw(1.99),
        user_budget_spec=PowerLaw(1.91),
        master_seed=7,
    )
    kw.update(overrides)
    return GeneratorConfig(**kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    return GeneratorConfig(
        n_users=60,
        n_items=40,
        K=4,
        p=2,
        c=2,
        item_pop_spec=PowerLaw(1.99),
        user_budget_spec=PowerLaw(1.91),
        master_seed=11,
    )
