import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from otrlab.harness import run_experiment  # noqa: E402
from otrlab.instance import derive_seed, get_preset, sample_sequence  # noqa: E402
from otrlab.offline import opt_fractional  # noqa: E402


@pytest.fixture(scope="session")
def highway():
    return get_preset("highway")


@pytest.fixture(scope="session")
def highway_training(highway):
    """100 highway sequences with their fractional optima."""
    seqs = [sample_sequence(highway.profile, highway.n_users, derive_seed(0, k)) for k in range(100)]
    opts = [opt_fractional(highway.network, s).value for s in seqs]
    return seqs, opts


@pytest.fixture(scope="session")
def small_training(highway):
    """A 12-instance training set of 40 users each, quick enough for repeated learning."""
    seqs = [sample_sequence(highway.profile, 40, derive_seed(99, k)) for k in range(12)]
    opts = [opt_fractional(highway.network, s).value for s in seqs]
    return seqs, opts


@pytest.fixture(scope="session")
def highway_report():
    return run_experiment("highway", 100, 100, 0)


def pytest_terminal_summary(terminalreporter):
    import criteria

    if criteria.RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(criteria.RESULTS):
            terminalreporter.write_line(line)
