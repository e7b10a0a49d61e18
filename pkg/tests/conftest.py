import pytest

# one line per acceptance criterion, printed in the terminal summary
CRITERIA: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--full-certificate", action="store_true", default=False,
                     help="run the full threshold-0.1 certificate over Z (tens of minutes)")


def pytest_configure(config):
    config.addinivalue_line("markers", "full_certificate: needs --full-certificate")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full-certificate"):
        return
    skip = pytest.mark.skip(reason="pass --full-certificate to run")
    for item in items:
        if "full_certificate" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


# a small box around the optimum that certifies in ~3e4 iterations
SMALL_BOX = ((0.004, 0.006, 0.004, -0.005, 0.85), (0.007, 0.009, 0.007, -0.002, 0.87))


@pytest.fixture
def small_box():
    from wormcover.boxsearch import Box5
    return Box5(*SMALL_BOX)
