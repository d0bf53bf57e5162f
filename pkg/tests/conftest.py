import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from iontransport import crystal, network

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def crystal_cache():
    """Memoized structure search keyed by (N, alpha, seed)."""
    store = {}

    def get(n, alpha, seed=0):
        key = (int(n), float(alpha), int(seed))
        if key not in store:
            store[key] = crystal.find_equilibrium(crystal.CrystalParams(n, alpha), seed=seed)
        return store[key]

    return get


@pytest.fixture(scope="session")
def small_crystals(crystal_cache):
    """Ordered N <= 6 crystals: two linear, two zig-zag, one helical."""
    specs = [(3, 5.0), (4, 3.0), (4, 1.8), (5, 1.6), (6, 2.4)]
    return [crystal_cache(n, a) for n, a in specs]


def random_positions(rng, n, spread=2.0):
    pos = rng.normal(scale=spread, size=(n, 3))
    pos[:, 2] = np.sort(rng.uniform(-spread * n, spread * n, n))
    return pos


def system(eq, gamma0=1e-3, t_left=2.0, t_right=1.0, k=1):
    cm = network.build_hessian(eq.params, eq)
    n = eq.n_ions
    bath = network.make_bath(gamma0, t_left, t_right, n,
                             left_ions=range(k), right_ions=range(n - k, n))
    return cm, bath
