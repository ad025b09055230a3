import numpy as np
import pytest

from crmorse.manifold import make_circle_bundle, make_weighted_sphere

# invariant suites run once per seed
SEEDS = (20240611, 97)

_ACCEPTANCE = []


def record_acceptance(k: int, ok: bool, detail: str):
    _ACCEPTANCE.append((k, ok, detail))


@pytest.fixture(params=SEEDS, ids=lambda s: f"seed{s}")
def seed(request):
    return request.param


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


@pytest.fixture(scope="session")
def sphere():
    return make_weighted_sphere((1, 1), "round")


@pytest.fixture(scope="session")
def wsphere():
    return make_weighted_sphere((1, 2), "round")


@pytest.fixture(scope="session")
def ellipsoid():
    return make_weighted_sphere((1, 2), "paper_ellipsoid")


@pytest.fixture(scope="session")
def fs_bundle():
    return make_circle_bundle(1, 0.0)


@pytest.fixture(scope="session")
def bundle3():
    return make_circle_bundle(1, 3.0)


def all_models():
    return [make_weighted_sphere((1, 1), "round"), make_weighted_sphere((1, 2), "round"),
            make_weighted_sphere((1, 2), "paper_ellipsoid"), make_circle_bundle(1, 0.0),
            make_circle_bundle(1, 3.0)]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
