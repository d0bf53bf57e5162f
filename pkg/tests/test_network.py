import numpy as np
import pytest
from hypothesis import given, strategies as st

from iontransport import crystal, network
from iontransport.crystal import CrystalParams
from iontransport.errors import InvalidRegionError, UnstableEquilibriumError


def fd_hessian(params, pos, h=1e-5):
    n = pos.shape[0]
    x = pos.ravel()
    out = np.empty((3 * n, 3 * n))
    for k in range(3 * n):
        e = np.zeros(3 * n)
        e[k] = h
        gp = crystal.potential_gradient(params, (x + e).reshape(n, 3)).ravel()
        gm = crystal.potential_gradient(params, (x - e).reshape(n, 3)).ravel()
        out[:, k] = (gp - gm) / (2 * h)
    return out


def test_hessian_matches_finite_differences(small_crystals):
    for eq in small_crystals:
        v = crystal.potential_hessian(eq.params, eq.positions)
        fd = fd_hessian(eq.params, eq.positions)
        assert np.max(np.abs(v - fd)) <= 1e-6 * np.max(np.abs(v))


@pytest.mark.parametrize("alpha", [2.0, 5.0])
def test_two_ion_spectrum(alpha):
    eq = crystal.find_equilibrium(CrystalParams(2, alpha), seed=0)
    cm = network.build_hessian(eq.params, eq)
    z = [cm.index(i, "z") for i in range(2)]
    x = [cm.index(i, "x") for i in range(2)]
    assert np.allclose(np.linalg.eigvalsh(cm.v[np.ix_(z, z)]), [1, 3], atol=1e-8)
    assert np.allclose(np.linalg.eigvalsh(cm.v[np.ix_(x, x)]), [alpha**2 - 1, alpha**2], atol=1e-8)


def test_com_sum_rules(small_crystals):
    for eq in small_crystals:
        v = crystal.potential_hessian(eq.params, eq.positions)
        n = eq.n_ions
        for axis, k2 in ((0, eq.params.alpha**2), (1, eq.params.alpha**2), (2, 1.0)):
            u = np.zeros(3 * n)
            u[axis::3] = 1.0
            assert np.allclose(v @ u, k2 * u, atol=1e-9 * np.abs(v).max())


def test_hessian_symmetric_and_indexed(small_crystals):
    for eq in small_crystals:
        cm = network.build_hessian(eq.params, eq)
        assert np.array_equal(cm.v, cm.v.T)
        assert cm.coordinate_index[(1, "y")] == 4 == cm.index(1, 1)


def test_rotation_pin_only_touches_zero_mode(small_crystals):
    for eq in small_crystals:
        cm = network.build_hessian(eq.params, eq)
        if cm.rotation_generator is None:
            continue
        t = cm.rotation_generator
        raw = crystal.potential_hessian(eq.params, eq.positions)
        assert np.linalg.norm(raw @ t) < 1e-8
        assert t @ cm.v @ t == pytest.approx(network.ROTATION_PIN, rel=1e-6)


def test_unstable_configuration_flagged():
    # on-axis chain below its critical aspect ratio is a saddle
    pos = np.zeros((3, 3))
    pos[:, 2] = [-(5 / 4) ** (1 / 3), 0, (5 / 4) ** (1 / 3)]
    params = CrystalParams(3, 1.0)
    eq = crystal.EquilibriumConfiguration(params, pos, 0.0, 0.0)
    with pytest.raises(UnstableEquilibriumError) as err:
        network.build_hessian(params, eq)
    assert err.value.min_eigenvalue < 0


def test_disorder_identity_and_rule(small_crystals):
    eq = small_crystals[0]  # linear: no rotation projection
    cm = network.build_hessian(eq.params, eq)
    assert np.array_equal(network.apply_disorder(cm, network.DisorderSpec(0.0, 1, 3)).v, cm.v)
    spec = network.DisorderSpec(0.05, 11, 3)
    out = network.apply_disorder(cm, spec)
    ratio = np.diag(out.v) / np.diag(cm.v)
    allowed = np.array([1.0, 0.95, 1.05])
    assert np.all(np.min(np.abs(ratio[:, None] - allowed[None, :]), axis=1) < 1e-15)
    off = ~np.eye(cm.dim, dtype=bool)
    assert np.array_equal(out.v[off], cm.v[off])
    changed = np.flatnonzero(ratio != 1.0)
    assert set(changed // 3) == set(spec.affected_ions)
    assert set(changed % 3) == {0, 1}
    assert len(spec.affected_ions) == 1


@given(st.integers(2, 40), st.integers(0, 10**6))
def test_disorder_spec_counts(n, seed):
    spec = network.DisorderSpec(0.02, seed, n)
    ions, signs = spec.draw()
    assert len(ions) == n // 2 == len(set(ions.tolist()))
    assert set(np.abs(signs)) <= {1.0}
    again = network.DisorderSpec(0.02, seed, n).draw()
    assert np.array_equal(ions, again[0]) and np.array_equal(signs, again[1])


def test_disorder_many_seeds(crystal_cache):
    eq = crystal_cache(12, crystal.path_alpha("1D", 12))
    cm = network.build_hessian(eq.params, eq)
    seen = set()
    for seed in range(100):
        out = network.apply_disorder(cm, network.DisorderSpec(0.02, seed, 12))
        assert np.array_equal(out.v, out.v.T)
        assert np.linalg.eigvalsh(out.v)[0] > 0
        seen.add(out.v.tobytes())
    assert len(seen) > 90


def test_disorder_axes_switch(small_crystals):
    eq = small_crystals[0]
    cm = network.build_hessian(eq.params, eq)
    for axes, expected in (("x", {0}), ("xy", {0, 1}), ("xyz", {0, 1, 2})):
        out = network.apply_disorder(cm, network.DisorderSpec(0.01, 3, 3, axes))
        changed = np.flatnonzero(np.diag(out.v) != np.diag(cm.v))
        assert set(changed % 3) == expected


def test_disorder_protects_rotation(small_crystals):
    eq = small_crystals[-1]
    cm = network.build_hessian(eq.params, eq)
    t = cm.rotation_generator
    out = network.apply_disorder(cm, network.DisorderSpec(0.01, 5, eq.n_ions))
    assert np.allclose(out.v @ t, cm.v @ t, atol=1e-12)
    raw = network.apply_disorder(cm, network.DisorderSpec(0.01, 5, eq.n_ions),
                                 protect_rotation=False)
    ratio = np.diag(raw.v) / np.diag(cm.v)
    assert np.all(np.isclose(ratio, 1.0) | np.isclose(ratio, 0.99) | np.isclose(ratio, 1.01))


def test_disorder_destroys_stability():
    eq = crystal.find_equilibrium(CrystalParams(4, 3.0), seed=0)
    cm = network.build_hessian(eq.params, eq)
    with pytest.raises(UnstableEquilibriumError):
        for seed in range(20):
            network.apply_disorder(cm, network.DisorderSpec(1.5, seed, 4))


def test_draw_stable_disorder_rejects_unstable(crystal_cache):
    eq = crystal_cache(20, crystal.path_alpha("2D", 20))
    cm = network.build_hessian(eq.params, eq)
    out, spec, rejected = network.draw_stable_disorder(cm, 0.05, range(100))
    assert np.linalg.eigvalsh(out.v)[0] > 0
    assert spec.seed == rejected
    with pytest.raises(UnstableEquilibriumError):
        network.draw_stable_disorder(cm, 0.9, range(3))


def test_make_bath_projectors():
    b = network.make_bath(1e-6, 2.0, 1.0, 20)
    assert b.left_ions == (0, 1) and b.right_ions == (18, 19)
    assert np.linalg.matrix_rank(b.p_left) == 4 == np.linalg.matrix_rank(b.p_right)
    assert np.all(b.p_left @ b.p_right == 0)
    assert np.array_equal(b.p_total @ b.p_total, b.p_total)
    assert np.array_equal(b.noise_matrix, 2 * (2.0 * b.p_left + 1.0 * b.p_right))
    single = network.make_bath(1e-6, 1, 1, 20, left_ions=[0], right_ions=[19])
    assert np.linalg.matrix_rank(single.p_left) == 2
    z = [3 * i + 2 for i in range(20)]
    assert np.all(np.diag(b.p_total)[z] == 0)


def test_make_bath_errors():
    with pytest.raises(InvalidRegionError):
        network.make_bath(1e-6, 1, 1, 10, left_ions=[0, 1], right_ions=[1, 9])
    with pytest.raises(InvalidRegionError):
        network.make_bath(1e-6, 1, 1, 10, region_fraction=0.6)
    with pytest.raises(InvalidRegionError):
        network.make_bath(1e-6, 1, 1, 10, left_ions=[], right_ions=[9])
