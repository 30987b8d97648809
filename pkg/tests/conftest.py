import os

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def binary_entropy(x):
    x = np.asarray(x, dtype=float)
    return -x * np.log(x) - (1 - x) * np.log1p(-x)


@pytest.fixture
def fair_coin_entropy():
    """``H(x) - log 2``, the rate curve of a fair coin."""
    return lambda x: binary_entropy(x) - np.log(2.0)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``acceptance(n, ok, detail)`` records a criterion outcome for the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n, ok, detail):
        store[n] = (bool(ok), detail)
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
