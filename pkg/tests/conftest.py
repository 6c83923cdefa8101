import numpy as np
import pytest

from dro.types import LocalMap, RadarScan


def make_scan(n=16, m=24, res=0.5, seed=0, density=0.3, triangular=True, period=0.25, t0=0.0):
    """Small random scan with sparse returns in [0, 1]."""
    gen = np.random.default_rng(seed)
    img = gen.uniform(0.0, 1.0, (n, m)) * (gen.uniform(size=(n, m)) < density)
    az = np.arange(n) * 2.0 * np.pi / n
    ts = t0 + np.arange(n) * period / n
    chirp = (np.arange(n) % 2 == 0).astype(np.int8) if triangular else np.ones(n, dtype=np.int8)
    return RadarScan(az, ts, res, img, chirp)


def make_map(size=41, res=0.5, seed=0, smooth=2.0):
    """Smooth random map centred on the origin."""
    from scipy.ndimage import gaussian_filter

    gen = np.random.default_rng(seed)
    img = gaussian_filter(gen.uniform(0.0, 1.0, (size, size)), smooth)
    img = img / img.max()
    half = (size - 1) * res / 2.0
    return LocalMap(img, np.array([-half, -half]), res, 0.0)


@pytest.fixture
def scan():
    return make_scan()


@pytest.fixture
def local_map():
    return make_map()


_CRITERIA = pytest.StashKey[dict]()
ACCEPTANCE_COUNT = 11


def record_criterion(config, number, ok, detail):
    """Remember one acceptance outcome for the terminal summary."""
    config.stash.setdefault(_CRITERIA, {})[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_CRITERIA, None)
    if results is None:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, ACCEPTANCE_COUNT + 1):
        if number in results:
            ok, detail = results[number]
            terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        else:
            terminalreporter.write_line(f"criterion {number}: NOT RUN or errored before reporting")
