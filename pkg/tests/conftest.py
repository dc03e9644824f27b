"""Shared, session-scoped fixtures for the expensive pipeline runs."""
import numpy as np
import pytest

from hmmdetect import evaluation, oracle, simulator
from hmmdetect.config import PipelineConfig


@pytest.fixture(scope="session")
def pipeline_config():
    return PipelineConfig().validate()


@pytest.fixture(scope="session")
def standard_scenarios():
    return simulator.standard_suite(2024)


@pytest.fixture(scope="session")
def suite_cases(standard_scenarios, pipeline_config):
    """Standard suite with statistic traces recorded under the pipeline config."""
    cases = evaluation.cases_from_scenarios(standard_scenarios)
    evaluation.record_traces(cases, pipeline_config.transition_model(),
                             pipeline_config.structuring_element())
    return cases


@pytest.fixture(scope="session")
def suite_report(suite_cases, pipeline_config):
    return evaluation.evaluate_suite(suite_cases, tm=pipeline_config.transition_model(),
                                     se=pipeline_config.structuring_element())


@pytest.fixture(scope="session")
def oracle_model(pipeline_config):
    o, c = pipeline_config.oracle, pipeline_config.cost
    return oracle.default_model(o.width, o.height, o.alphabet_size, o.correct, c.c2, c.delay,
                                c.w, tm=pipeline_config.oracle_transition_model())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {text}")
