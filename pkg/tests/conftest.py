from pathlib import Path

import numpy as np
import pytest

from asymherd import engine, stats

DATA = Path(__file__).resolve().parent / "data"

_ACCEPTANCE = []


class AcceptanceLog:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, criterion: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return bool(passed)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda x: x[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture(scope="session")
def ensemble_curves():
    """100-run mean L(t) for the (alpha, delta_R) cases used by several tests, computed once."""
    cache = {}

    def get(alpha, delta_R, runs=100, max_lag=40):
        key = (alpha, delta_R, runs, max_lag)
        if key not in cache:
            params = engine.ModelParams(alpha=alpha, delta_r_model=delta_R)
            raws = engine.simulate_ensemble(params, runs)
            normed = [stats.normalize(r) for r in raws]
            lev = stats.mean_curve([stats.return_volatility_corr(r, max_lag) for r in normed])
            cache[key] = (raws, normed, lev)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("ASYMHERD_CACHE_DIR", str(d))
    return d
