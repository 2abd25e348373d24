import pytest

CRITERIA = {
    1: "experimental data factors",
    2: "CHSH threshold",
    3: "even-spacing trend",
    4: "random-scan guard",
    5: "oracle equivalence",
    6: "certificate soundness",
    7: "invariance suite",
}

_checks: dict[int, list[tuple[str, bool, str]]] = {}


class Recorder:
    """Logs checks for the summary; ``done()`` fails the test if any check failed."""

    def __init__(self):
        self.failed: list[str] = []

    def __call__(self, criterion: int, check: str, passed: bool, detail: str = "") -> None:
        _checks.setdefault(criterion, []).append((check, bool(passed), detail))
        if not passed:
            self.failed.append(f"{check}: {detail}")

    def done(self) -> None:
        if self.failed:
            pytest.fail("; ".join(self.failed), pytrace=False)


@pytest.fixture
def record():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _checks:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in CRITERIA.items():
        checks = _checks.get(k)
        if not checks:
            tr.write_line(f"criterion {k} ({title}): NOT RUN")
            continue
        ok = all(p for _, p, _ in checks)
        failed = [f"{name}: {detail}" for name, p, detail in checks if not p]
        note = "; ".join(failed) if failed else f"{len(checks)} check" + ("s" if len(checks) > 1 else "")
        tr.write_line(f"criterion {k} ({title}): {'PASS' if ok else 'FAIL'} [{note}]")
