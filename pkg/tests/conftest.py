import functools

import pytest

from degenerate_diffusion.presets import build_problem, preset_config

ACCEPTANCE_LINES = []


def record(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def problem(name: str, **over):
    cfg = preset_config(name)
    if over:
        cfg = cfg.override(**over)
    return build_problem(cfg)


@pytest.fixture(scope="session")
def test1_problem():
    return problem("test1")
