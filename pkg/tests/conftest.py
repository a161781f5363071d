import numpy as np
import pytest
from hypothesis import settings

from imred.config import RunConfig
from imred.synthetic import generate_dataset
from imred.transform import GridSpec, StftSpec, WaveletSpec, log_scales

settings.register_profile("imred", deadline=None, max_examples=40)
settings.load_profile("imred")


@pytest.fixture(scope="session")
def default_config():
    return RunConfig()


@pytest.fixture(scope="session")
def default_dataset(default_config):
    return generate_dataset(default_config.synthetic())


@pytest.fixture(scope="session")
def null_dataset(default_config):
    cfg = default_config.replace(synth__delta_alpha=0.0, synth__delta_f_hz=0.0)
    return generate_dataset(cfg.synthetic())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_stft_grid():
    return GridSpec.stft(StftSpec("hann", 64, 16), 512)


@pytest.fixture(scope="session")
def small_wavelet_grid():
    return GridSpec.wavelet(WaveletSpec(6.0), 512, log_scales(2.0, 24.0, 10), step=4)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record one pass/fail line per acceptance criterion."""
    log = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        log[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE_KEY, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for number in sorted(log):
            terminalreporter.write_line(log[number])
