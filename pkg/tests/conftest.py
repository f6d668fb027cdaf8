import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from impatience import DiscountFactor, from_generalized_beta_delta

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def exponential(delta, horizon):
    return DiscountFactor(np.power(delta, np.arange(horizon + 1, dtype=float)))


def quasi_hyperbolic(beta=0.6, delta=0.9, horizon=3):
    return from_generalized_beta_delta(beta, delta, 1, horizon)


def squared_exponent(horizon=3, base=0.9):
    t = np.arange(horizon + 1, dtype=float)
    return DiscountFactor(base ** (t * t))


ratio = st.floats(min_value=0.05, max_value=0.95, allow_nan=False)


@st.composite
def di_factors(draw, min_horizon=2, max_horizon=20):
    """Log-convex factors built from sorted impatience ratios."""
    n = draw(st.integers(min_horizon, max_horizon))
    ratios = np.sort(np.array(draw(st.lists(ratio, min_size=n, max_size=n))))
    scale = draw(st.floats(min_value=0.1, max_value=10.0))
    return DiscountFactor(scale * np.concatenate(([1.0], np.cumprod(ratios))))


@st.composite
def non_di_factors(draw, max_horizon=20):
    """Factors with at least one impatience ratio dropping by 1% or more."""
    n = draw(st.integers(2, max_horizon))
    ratios = np.array(draw(st.lists(ratio, min_size=n, max_size=n)))
    i = draw(st.integers(0, n - 2))
    if ratios[i + 1] > 0.99 * ratios[i]:
        ratios[i + 1] = 0.98 * ratios[i]
    return DiscountFactor(np.concatenate(([1.0], np.cumprod(ratios))))


@pytest.fixture
def qh():
    return quasi_hyperbolic()


# Acceptance reporting: one line per criterion in the terminal summary.

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or report.failed):
        return
    number, title = marker.args
    _CRITERIA[number] = (title, "PASS" if report.passed else "SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
