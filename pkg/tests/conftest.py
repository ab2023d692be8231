import numpy as np
import pytest

from whitham_coalescence.models_builtin import CnlsParams

# admissible standing-wave families: (alpha1, alpha2, beta11, beta12, beta22), branch
CNLS_FAMILIES = [
    ((1.0, -1.0, 1.0, 2.0, 1.0), -1),
    ((2.0, -1.0, 1.0, 3.0, 2.0), -1),
    ((1.0, -2.0, 1.0, 2.0, 1.0), -1),
    ((-1.0, 1.0, 1.0, 2.0, 1.0), 1),
    ((1.0, -1.0, -1.0, 2.0, 1.0), 1),
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=CNLS_FAMILIES, ids=lambda f: f"{f[0]}-br{f[1]:+d}")
def cnls_family(request):
    vals, branch = request.param
    return CnlsParams(*vals), branch


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
