import numpy as np
import pytest

from blockdemix.links import get_link
from blockdemix.model import SignalConfig, synthesize_instance
from blockdemix.operators import BasisPair, gen_subgaussian
from blockdemix.seeding import derive_seed

_REPORT: dict = {}


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true",
                     help="skip the desk-scale phase-transition criteria")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    skip = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def report():
    """Record one acceptance line: ``report(criterion, passed, detail)``."""

    def _record(criterion: int, passed: bool, detail: str):
        _REPORT[criterion] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_REPORT):
        ok, detail = _REPORT[crit]
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def small_instance(n=64, m=48, s=8, b=4, link="sigmoid", seed=0, noise=0.0,
                   phi="identity", psi="dct-like"):
    bases = BasisPair.from_kinds(n, phi, psi, derive_seed(seed, "bases"))
    design = gen_subgaussian(m, n, seed=derive_seed(seed, "design"))
    cfg = SignalConfig(n, s, b, m, noise_sigma=noise)
    return synthesize_instance(cfg, bases, design, get_link(link), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
