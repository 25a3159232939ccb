import pytest

import pulsemix as pm

SIZES_NM = (10.0, 30.0, 50.0, 70.0, 90.0, 110.0)

# verdict lines collected by the acceptance tests, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return pm.ChannelParams(d=10e-6, a=1e-6, D0=8e-12, R0=25e-9, T=120.0)


@pytest.fixture(scope="session")
def particles(params):
    return pm.ParticleSet.from_radii(
        [s * 1e-9 for s in SIZES_NM], params.R0, params.D0, 3
    )


@pytest.fixture(scope="session")
def sc600(params, particles):
    # the reference sampling shared by most tests; building it once matters
    return pm.sample_matrices(params, particles, 600, 1e-9)
