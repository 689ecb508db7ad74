import pytest

from helpers import hand_model

CRITERIA = {
    1: "gradient correctness",
    2: "AUC exact vs rank",
    3: "gate invariants and score symmetry",
    4: "Cora link prediction",
    5: "HepTh link prediction",
    6: "ablation ordering on Cora",
    7: "Cora vertex classification",
    8: "determinism",
    9: "untrained null AUC on Cora",
}

_results: dict[int, tuple[str, str]] = {}


@pytest.fixture
def hand():
    return hand_model()


@pytest.fixture(scope="session")
def record():
    """``record(number, status, detail)`` stores one acceptance line for the terminal summary."""

    def _record(number: int, status: str, detail: str) -> None:
        _results[number] = (status, detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, name in CRITERIA.items():
        status, detail = _results.get(number, ("NOT RUN", "deselected"))
        terminalreporter.write_line(f"[{status:<7}] {number}. {name}: {detail}")
