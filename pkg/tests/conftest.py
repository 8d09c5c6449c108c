import time

import numpy as np
import pytest

from ftuap.attack import AttackConfig, train_universal
from ftuap.bands import parse_band_spec
from ftuap.harness.experiments import attack_subset
from ftuap.tinynet import bundled_splits, train
from ftuap.tinynet.train import DEFAULT_CONFIGS

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _CRITERIA.append((marker.args[0], marker.args[1], status, rep.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, dur, detail in sorted(_CRITERIA):
        line = f"[{status}] criterion {num}: {title} ({dur:.1f} s)"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))


@pytest.fixture(scope="session")
def bundled():
    return bundled_splits(42)


@pytest.fixture(scope="session")
def classifiers(bundled):
    train_ds, _ = bundled
    return {arch: train(train_ds, DEFAULT_CONFIGS[arch]) for arch in ("a", "b")}


class AttackCache:
    """Memoized universal-perturbation runs shared between criteria."""

    def __init__(self, classifiers, train_ds):
        self.classifiers = classifiers
        self.train = attack_subset(train_ds)
        self.runs = {}
        self.seconds = {}

    def get(self, arch, method="ftuap", bands="ff", seed=0):
        key = (arch, method, bands, seed)
        if key not in self.runs:
            t0 = time.perf_counter()
            cfg = AttackConfig(method=method, bands=parse_band_spec(bands), epochs=5, seed=seed)
            self.runs[key] = train_universal(self.classifiers[arch], self.train, cfg)
            self.seconds[key] = time.perf_counter() - t0
        return self.runs[key].perturbation


@pytest.fixture(scope="session")
def attacks(classifiers, bundled):
    return AttackCache(classifiers, bundled[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
