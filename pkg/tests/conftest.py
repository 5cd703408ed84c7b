import functools

import pytest

from parabolic_apost.metrics import DESK_M_LIST, convergence_study, reference_solution
from parabolic_apost.problem import builtin_test_problem

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@functools.lru_cache(maxsize=None)
def benchmark_reference(refinement: int = 8, finest_M: int = max(DESK_M_LIST)):
    p, _ = builtin_test_problem()
    return reference_solution(p, refinement, finest_M)


@functools.lru_cache(maxsize=None)
def benchmark_study(scheme: str, M_list=DESK_M_LIST):
    p, gb = builtin_test_problem()
    return convergence_study(p, gb, scheme, M_list, reference=benchmark_reference(8, max(M_list)))


@pytest.fixture(scope="session")
def benchmark():
    return builtin_test_problem()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
