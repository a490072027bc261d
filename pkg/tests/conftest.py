import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def ks_stat(samples, cdf, lower=-np.inf):
    """Two-sided one-sample Kolmogorov-Smirnov statistic.

    Tie-aware, so laws with atoms (e.g. an outage mass at zero) are handled:
    the empirical and model cdfs are compared at each distinct value and just
    below it. ``lower`` is the bottom of the support, where the left limit is 0.
    """
    x = np.sort(np.asarray(samples, float))
    n = len(x)
    v, first = np.unique(x, return_index=True)
    upto = np.append(first[1:], n) / n
    below = first / n
    f = np.asarray(cdf(v), float)
    prev = np.nextafter(v, -np.inf)
    inside = prev >= lower
    f_left = np.zeros_like(f)
    if np.any(inside):
        f_left[inside] = np.asarray(cdf(prev[inside]), float)
    return float(max(np.max(np.abs(upto - f)), np.max(np.abs(below - f_left))))


@pytest.fixture
def ks():
    return ks_stat


_CRITERIA = {}


@pytest.fixture
def record_criterion(capsys):
    """Record one acceptance line; echoed immediately and again in the terminal summary."""

    def record(number, part, ok, detail):
        _CRITERIA.setdefault(number, []).append((part, bool(ok), detail))
        with capsys.disabled():
            print(f"\n  criterion {number} [{part}]: {'PASS' if ok else 'FAIL'} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p[1] for p in parts)
        failed = [p[0] for p in parts if not p[1]]
        detail = "; ".join(f"{name}: {d}" for name, _, d in parts)
        status = "PASS" if ok else f"FAIL (failing: {', '.join(failed)})"
        terminalreporter.write_line(f"criterion {number}: {status} | {detail}")
