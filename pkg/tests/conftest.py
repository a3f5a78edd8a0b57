from collections import defaultdict

import pytest

from kickfid.experiments import ExperimentConfig, run_many

_RESULTS: dict = defaultdict(list)
_RUNS: dict = {}


class AcceptanceRecorder:
    """Collects sub-check outcomes per criterion for the terminal summary."""

    def check(self, criterion: int, name: str, ok: bool, detail: str = "") -> bool:
        _RESULTS[criterion].append((name, bool(ok), detail))
        return bool(ok)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def fidelity_runs(configs):
    """Manifests for the given configs, computed once per session."""
    missing = [c for c in dict.fromkeys(configs) if c not in _RUNS]
    if missing:
        _RUNS.update(zip(missing, run_many(missing)))
    return [_RUNS[c] for c in configs]


@pytest.fixture(scope="session")
def base_config():
    return ExperimentConfig()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        checks = _RESULTS[crit]
        ok = all(c[1] for c in checks)
        tr.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in checks:
            tr.write_line(f"    [{'ok' if passed else 'xx'}] {name}" + (f"  ({detail})" if detail else ""))
