from __future__ import annotations

import pytest

from varx_shm.experiment_harness import building_chain
from varx_shm.simulator import SimConfig, extract_substructure_signals, generate_excitation, simulate
from varx_shm.structure_model import SubstructureSpec

# Filled by tests/test_acceptance.py, printed at the end of the session.
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def chain():
    return building_chain()


@pytest.fixture(scope="session")
def spec():
    return SubstructureSpec(2, 6)


@pytest.fixture(scope="session")
def exact_config():
    return SimConfig(ts=1e-3, substep_ratio=1, duration=20.0, seed=7)


@pytest.fixture(scope="session")
def exact_record(chain, exact_config):
    return simulate(chain, generate_excitation(exact_config, 8), exact_config)


@pytest.fixture(scope="session")
def exact_signals(exact_record, spec):
    return extract_substructure_signals(exact_record, spec)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda n: int(n.split()[0].rstrip("."))):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def exact_suite():
    from varx_shm.experiment_harness import paper_suite, run_suite

    return run_suite(paper_suite(0, "exact"))


@pytest.fixture(scope="session")
def realistic_suite():
    from varx_shm.experiment_harness import paper_suite, run_suite

    return run_suite(paper_suite(0, "realistic"))
