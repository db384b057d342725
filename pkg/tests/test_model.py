import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gasforge.model import (
    PRESETS,
    CoincidentParticlesError,
    Configuration,
    CoulombKernel,
    GasModel,
    HardWall,
    LogKernel,
    Quadratic,
    beta_ginibre,
    beta_hermite,
    coulomb3d,
    energy,
    energy_and_grad,
    grad_energy,
    initial_configuration,
    loggas3d,
    make_model,
    quartic,
)


def brute_energy(model, x):
    # straight double loop, independent of the vectorised code
    n = len(x)
    conf = model.confinement
    e = sum(float(conf.value(x[i : i + 1])[0]) for i in range(n)) / n
    for i in range(n):
        for j in range(i + 1, n):
            r2 = float(np.sum((x[i] - x[j]) ** 2))
            if isinstance(model.interaction, LogKernel):
                w = -0.5 * math.log(r2)
            else:
                w = r2 ** (-(model.interaction.n - 2) / 2)
            e += w / n**2
    return e


def fd_grad(model, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (energy(model, xp) - energy(model, xm)) / (2 * h)
    return g


ALL_MODELS = [
    beta_hermite(2.0, 6),
    beta_hermite(0.7, 5),
    beta_ginibre(2.0, 5),
    quartic(6),
    coulomb3d(2.0, 5),
    loggas3d(1.0, 4),
]


def test_presets_shapes_and_beta_n():
    m = beta_hermite(2.0, 10)
    assert (m.particle_dim, m.beta_n) == (1, 200.0)
    assert m.confinement == Quadratic(0.25)
    m = beta_ginibre(4.0, 3)
    assert m.shape == (3, 2) and m.beta_n == 36.0
    assert m.confinement == Quadratic(0.25)
    m = coulomb3d(2.0, 7)
    assert m.particle_dim == 3 and isinstance(m.interaction, CoulombKernel)
    assert isinstance(loggas3d(2.0, 3).interaction, LogKernel)
    assert quartic(4).particle_dim == 1
    for name in PRESETS:
        assert make_model(name, 2.0, 3).beta_n == 18.0


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown model"):
        make_model("nope", 2.0, 3)


def test_explicit_beta_n_is_kept():
    m = GasModel(1, 2, 2.0, 4, Quadratic(1.0), LogKernel(), beta_n=3.5)
    assert m.beta_n == 3.5


def test_bad_model_arguments():
    with pytest.raises(ValueError):
        GasModel(1, 2, -1.0, 4, Quadratic(1.0), LogKernel())
    with pytest.raises(ValueError):
        CoulombKernel(2)
    with pytest.raises(ValueError):
        GasModel(2, 2, 1.0, 3, quartic(3).confinement, LogKernel())


def test_hard_wall_is_declared_but_unsupported():
    m = GasModel(1, 2, 2.0, 2, HardWall(), LogKernel())
    with pytest.raises(NotImplementedError):
        energy(m, np.array([0.0, 0.5]))


def test_kernels_diverge_at_zero():
    r2 = np.array([1e-200, 1e-20, 1.0, 4.0])
    for k in (LogKernel(), CoulombKernel(3), CoulombKernel(5)):
        w = k.value(r2)
        assert np.all(np.isfinite(w))
        assert np.all(np.diff(w) < 0)
    assert LogKernel().value(np.array([1e-200]))[0] > 200


def test_energy_hand_value():
    m = beta_hermite(2.0, 2)
    assert energy(m, np.array([0.0, 1.0])) == pytest.approx(0.125, abs=1e-15)


def test_energy_single_particle_at_origin():
    for m in (beta_hermite(2.0, 1), beta_ginibre(2.0, 1), coulomb3d(2.0, 1)):
        assert energy(m, np.zeros(m.shape)) == 0.0


def test_energy_coincident_is_infinite():
    m = beta_ginibre(2.0, 2)
    assert energy(m, np.array([[0.3, 0.1], [0.3, 0.1]])) == math.inf
    e, g = energy_and_grad(m, np.array([[0.3, 0.1], [0.3, 0.1]]))
    assert e == math.inf and np.all(np.isinf(g))
    with pytest.raises(CoincidentParticlesError):
        grad_energy(m, np.array([[0.3, 0.1], [0.3, 0.1]]))


def test_energy_shape_mismatch():
    m = beta_ginibre(2.0, 3)
    with pytest.raises(ValueError, match="shape"):
        energy(m, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        grad_energy(m, np.zeros((2, 2)))


def test_energy_accepts_configuration():
    m = beta_hermite(2.0, 2)
    assert energy(m, Configuration(np.array([0.0, 1.0]))) == pytest.approx(0.125)


def test_log_force_at_3_4():
    # the force -grad W(x) at x = (3, 4) is x / |x|^2
    m = GasModel(2, 2, 1.0, 2, Quadratic(0.0), LogKernel(), beta_n=1.0)
    x = np.array([[3.0, 4.0], [0.0, 0.0]])
    g = grad_energy(m, x)
    # grad of (1/N^2) W(x_1 - x_2) w.r.t. x_1
    np.testing.assert_allclose(-g[0] * 4, [0.12, 0.16], rtol=1e-14)
    np.testing.assert_allclose(g[0], -g[1], rtol=1e-14)


def test_single_particle_gradient():
    m = beta_hermite(2.0, 1)
    np.testing.assert_allclose(grad_energy(m, np.array([3.0])), [[1.5]], rtol=1e-15)
    e, g = energy_and_grad(m, np.array([3.0]))
    assert e == pytest.approx(9 / 4) and g[0, 0] == pytest.approx(1.5)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: f"{m.name}{m.n_particles}")
def test_gradient_matches_finite_differences(model):
    rng = np.random.default_rng(3)
    x = rng.normal(size=model.shape)
    g = grad_energy(model, x)
    fd = fd_grad(model, x)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) <= 1e-6


def test_gradient_random_n5_d2():
    m = beta_ginibre(2.0, 5)
    x = np.random.default_rng(11).uniform(-1, 1, size=(5, 2))
    g = grad_energy(m, x)
    assert np.linalg.norm(g - fd_grad(m, x)) / np.linalg.norm(g) <= 1e-6


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: f"{m.name}{m.n_particles}")
def test_energy_matches_brute_force(model):
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = rng.normal(size=model.shape)
        assert energy(model, x) == pytest.approx(brute_energy(model, x), rel=1e-12)


def test_energy_and_grad_agree_with_separate_calls():
    rng = np.random.default_rng(0)
    for i in range(100):
        m = ALL_MODELS[i % len(ALL_MODELS)]
        x = rng.normal(size=m.shape)
        e, g = energy_and_grad(m, x)
        assert e == pytest.approx(energy(m, x), rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(g, grad_energy(m, x), rtol=1e-12, atol=1e-12)


def test_energy_and_grad_hand_case():
    m = beta_hermite(2.0, 2)
    e, g = energy_and_grad(m, np.array([0.0, 1.0]))
    # d/dx_i of (1/2) x_i^2/4 + (1/4)(-log|x_1 - x_2|)
    assert e == pytest.approx(0.125)
    np.testing.assert_allclose(g.ravel(), [0.0 + 0.25, 0.25 - 0.25], atol=1e-15)


configs = arrays(np.float64, (6, 2), elements=st.floats(-3, 3, allow_nan=False, width=64))


def _distinct(x):
    d = np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))
    return d[np.triu_indices(len(x), 1)].min() > 1e-3


@settings(max_examples=60, deadline=None)
@given(configs, st.randoms(use_true_random=False))
def test_energy_permutation_invariant(x, rnd):
    if not _distinct(x):
        return
    m = beta_ginibre(2.0, 6)
    perm = list(range(6))
    rnd.shuffle(perm)
    e0, e1 = energy(m, x), energy(m, x[perm])
    assert e1 == pytest.approx(e0, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(configs, st.floats(-5, 5), st.floats(-5, 5))
def test_pair_energy_translation_invariant(x, a, b):
    if not _distinct(x):
        return
    m = GasModel(2, 2, 1.0, 6, Quadratic(0.0), LogKernel())
    e0 = energy(m, x)
    e1 = energy(m, x + np.array([a, b]))
    assert e1 == pytest.approx(e0, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(configs, st.floats(0.1, 10))
def test_log_energy_scaling(x, lam):
    if not _distinct(x):
        return
    n = 6
    m = beta_ginibre(2.0, n)
    conf = lambda y: m.confinement.value(y).sum() / n  # noqa: E731
    lhs = energy(m, lam * x) - energy(m, x)
    rhs = conf(lam * x) - conf(x) - (n * (n - 1) / (2 * n**2)) * math.log(lam)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_initial_configuration_is_valid(name):
    m = make_model(name, 2.0, 20)
    c = initial_configuration(m, np.random.default_rng(1), with_momenta=True)
    assert c.positions.shape == m.shape and c.momenta.shape == m.shape
    assert math.isfinite(energy(m, c.positions))
    assert c.positions.flags["C_CONTIGUOUS"]


def test_initial_configuration_box():
    m = beta_hermite(2.0, 500)
    c = initial_configuration(m, np.random.default_rng(2))
    assert c.momenta is None
    assert np.abs(c.positions).max() <= 2.0
    assert np.abs(c.positions).max() > 1.9
