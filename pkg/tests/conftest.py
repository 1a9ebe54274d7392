import numpy as np
import pytest

# "PASS/FAIL criterion N: ..." lines collected by the acceptance suite
CRITERIA_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    CRITERIA_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dense_pauli(label: dict, n: int) -> np.ndarray:
    """Dense matrix of a Pauli string given per qubit, e.g. {0: 'X', 2: 'Z'}; little-endian."""
    mats = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1.0, -1.0]).astype(complex),
    }
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(mats[label.get(q, "I")], out)
    return out
