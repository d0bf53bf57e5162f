import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from iontransport import crystal
from iontransport.crystal import CrystalParams, potential_energy, potential_gradient
from iontransport.errors import DegenerateConfigurationError

from conftest import random_positions


def test_energy_single_ion():
    assert potential_energy(CrystalParams(1, 3.0), [[0, 0, 0]]) == 0.0
    assert potential_energy(CrystalParams(1, 2.0), [[1, 0, 0]]) == pytest.approx(2.0)


def test_energy_two_ion_minimum():
    u = 4 ** (-1 / 3)
    e = potential_energy(CrystalParams(2, 7.0), [[0, 0, -u], [0, 0, u]])
    assert e == pytest.approx(3 * 4 ** (-2 / 3), rel=1e-12)


def test_coincident_ions_raise():
    with pytest.raises(DegenerateConfigurationError):
        potential_energy(CrystalParams(2, 1.0), [[0, 0, 1], [0, 0, 1]])
    with pytest.raises(DegenerateConfigurationError):
        potential_gradient(CrystalParams(2, 1.0), [[0, 0, 1], [0, 0, 1]])


def test_gradient_zero_cases():
    u = 4 ** (-1 / 3)
    g = potential_gradient(CrystalParams(2, 5.0), [[0, 0, -u], [0, 0, u]])
    assert np.max(np.abs(g)) < 1e-12
    assert np.all(potential_gradient(CrystalParams(1, 5.0), [[0, 0, 0]]) == 0)


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 10.0))
def test_gradient_matches_finite_differences(seed, alpha):
    rng = np.random.default_rng(seed)
    params = CrystalParams(5, alpha)
    pos = random_positions(rng, 5)
    g = potential_gradient(params, pos).ravel()
    h = 1e-5
    fd = np.empty(15)
    for k in range(15):
        e = np.zeros(15)
        e[k] = h
        fd[k] = (potential_energy(params, (pos.ravel() + e).reshape(5, 3))
                 - potential_energy(params, (pos.ravel() - e).reshape(5, 3))) / (2 * h)
    assert np.max(np.abs(g - fd)) <= 1e-6 * max(np.max(np.abs(g)), 1.0)


def test_find_equilibrium_two_and_three_ions():
    eq2 = crystal.find_equilibrium(CrystalParams(2, 5.0), seed=1)
    assert np.allclose(eq2.positions[:, 2], [-2 ** (1 / 3) / 2, 2 ** (1 / 3) / 2], atol=1e-8)
    assert np.all(eq2.positions[:, :2] == 0)
    eq3 = crystal.find_equilibrium(CrystalParams(3, 5.0), seed=1)
    b = (5 / 4) ** (1 / 3)
    assert np.allclose(eq3.positions[:, 2], [-b, 0, b], atol=1e-8)


def test_linear_path_point_is_linear(crystal_cache):
    eq = crystal_cache(30, crystal.path_alpha("1D", 30))
    assert crystal.order_parameters(eq).phase == crystal.LINEAR1D


def test_determinism():
    p = CrystalParams(6, 1.0)
    a = crystal.find_equilibrium(p, seed=7)
    b = crystal.find_equilibrium(p, seed=7)
    assert np.array_equal(a.positions, b.positions) and a.energy == b.energy


def test_stationarity_and_ordering(small_crystals):
    for eq in small_crystals:
        g = potential_gradient(eq.params, eq.positions)
        assert np.max(np.abs(g)) <= 1e-10
        assert eq.residual_gradient_norm <= 1e-10
        assert np.all(np.diff(eq.positions[:, 2]) > 0)


def test_gauge_idempotent(small_crystals):
    for eq in small_crystals:
        pos, _ = crystal.gauge_fix(eq.positions)
        assert np.allclose(pos, eq.positions, atol=1e-14)


def test_gauge_conventions(small_crystals):
    for eq in small_crystals:
        pos = eq.positions
        r = np.hypot(pos[:, 0], pos[:, 1])
        if r.max() < crystal.LINEAR_RADIUS_TOL:
            continue
        # near-ties go to the lowest z-index
        top = int(np.flatnonzero(r >= r.max() * (1 - 1e-9))[0])
        assert abs(pos[top, 1]) < 1e-12 and pos[top, 0] > 0


@given(st.floats(0.5, 2.0))
def test_scale_covariance(lam):
    # q^2 -> lam^3 q^2 together with r -> lam r keeps the configuration stationary
    eq = crystal.find_equilibrium(CrystalParams(4, 1.5), seed=3)
    scaled = CrystalParams(4, 1.5, q_sq=lam ** 3)
    g = potential_gradient(scaled, lam * eq.positions)
    assert np.max(np.abs(g)) <= 1e-9 * max(1.0, lam)


def _multistart_oracle(params, starts, rng):
    n = params.n_ions
    best = np.inf
    for _ in range(starts):
        x0 = random_positions(rng, n, spread=1.0).ravel()
        res = optimize.minimize(lambda x: potential_energy(params, x.reshape(n, 3)), x0,
                                jac=lambda x: potential_gradient(params, x.reshape(n, 3)).ravel(),
                                method="BFGS", options={"gtol": 1e-11, "maxiter": 5000})
        best = min(best, res.fun)
    return best


@pytest.mark.parametrize("n,alpha", [(2, 3.0), (3, 1.0), (4, 0.8), (4, 2.0)])
def test_energy_matches_multistart_oracle(n, alpha):
    params = CrystalParams(n, alpha)
    eq = crystal.find_equilibrium(params, seed=0)
    ref = _multistart_oracle(params, 40, np.random.default_rng(123))
    assert eq.energy == pytest.approx(ref, abs=1e-9)


def test_order_parameter_fixtures():
    z = np.arange(6) * 0.7
    pos = np.column_stack([np.zeros(6), np.zeros(6), z])
    rep = crystal.order_parameters(pos)
    assert rep.radius == 0 and rep.phase == crystal.LINEAR1D
    assert rep.min_z_gap == pytest.approx(0.7)
    zig = np.column_stack([0.3 * (-1.0) ** np.arange(6), np.zeros(6), z])
    rep = crystal.order_parameters(zig)
    assert rep.mean_azimuthal_step == pytest.approx(np.pi)
    assert rep.phase == crystal.ZIGZAG2D
    flat = zig.copy()
    flat[:, 2] = 0.0
    flat[:, 0] = np.arange(1, 7)
    assert crystal.order_parameters(flat).phase == crystal.UNORDERED


def test_path_alpha_values():
    assert crystal.path_alpha("1D", 30) == pytest.approx(13.05, abs=0.01)
    assert crystal.path_alpha("2D", 100) == pytest.approx(23.2, abs=0.05)
    assert crystal.path_alpha("3D", 60) == pytest.approx(7.75, abs=0.01)


def test_scan_single_point_and_subcritical():
    res = crystal.scan_transition(8, [crystal.path_alpha("1D", 8)])
    assert len(res.points) == 1 and res.critical_alpha is None
    a1 = crystal.path_alpha("1D", 12)
    res = crystal.scan_transition(12, np.linspace(1.2 * a1, a1, 4))
    assert all(p.value < crystal.LINEAR_RADIUS_TOL for p in res.points)
    assert res.critical_alpha is None


def test_scan_finds_onset():
    n = 12
    alphas = np.linspace(crystal.path_alpha("1D", n), crystal.path_alpha("3D", n), 12)
    res = crystal.scan_transition(n, alphas)
    assert res.critical_alpha is not None
    ref = crystal.linear_chain_critical_alpha(n)
    step = alphas[0] - alphas[1]
    assert abs(res.critical_alpha - ref) <= step


def test_invalid_params():
    with pytest.raises(ValueError):
        CrystalParams(0, 1.0)
    with pytest.raises(ValueError):
        CrystalParams(3, -1.0)
