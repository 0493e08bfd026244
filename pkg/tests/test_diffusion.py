import math

import numpy as np
import numpy.testing as npt
import pytest

from ldtraj.diffusion import (
    DiffusionModel,
    Grid,
    adjoint_apply,
    generator_apply,
    grid_measure,
    hamiltonian,
    lagrangian_dual,
    lagrangian_entropy,
    load_profile,
    normalize_density,
)
from ldtraj.errors import ValidationError


def smooth_density(x, c=0.5, s=0.2):
    return normalize_density(1 + c * np.cos(2 * np.pi * x) + s * np.sin(4 * np.pi * x))


def smooth_velocity(x):
    return np.sin(2 * np.pi * x) + 0.3 * np.cos(6 * np.pi * x)


def random_model(rng, n):
    x = Grid(n).x
    b = rng.normal() * np.sin(2 * np.pi * x + rng.uniform(0, 2 * np.pi))
    a = 0.5 + 0.2 * rng.uniform() * np.cos(2 * np.pi * x)
    return DiffusionModel(b, a)


def test_grid_minimum():
    with pytest.raises(ValidationError):
        Grid(4)
    assert Grid(8).h == 0.125


def test_adjoint_kills_uniform_for_brownian():
    model = DiffusionModel.brownian(32)
    npt.assert_allclose(adjoint_apply(model, np.ones(32)), 0.0, atol=1e-12)


def test_adjoint_cosine_profile():
    n = 256
    model = DiffusionModel.brownian(n)
    x = model.grid.x
    mu = 1 + 0.5 * np.cos(2 * np.pi * x)
    # (1/2) mu'' = -pi^2 cos
    npt.assert_allclose(adjoint_apply(model, mu), -np.pi**2 * np.cos(2 * np.pi * x), atol=2e-3)


def test_adjoint_preserves_mass(rng):
    for n in (8, 33, 128):
        model = random_model(rng, n)
        mu = normalize_density(1 + 0.5 * rng.uniform(size=n))
        assert abs(model.grid.integrate(adjoint_apply(model, mu))) < 1e-11


def test_generator_adjoint_identity(rng):
    model = random_model(rng, 64)
    mu, f = rng.uniform(0.5, 1.5, size=64), rng.normal(size=64)
    assert generator_apply(model, f) @ mu == pytest.approx(f @ adjoint_apply(model, mu), rel=1e-11)


def test_hamiltonian_examples():
    n = 256
    model = DiffusionModel.brownian(n)
    x = model.grid.x
    assert hamiltonian(model, np.ones(n), np.zeros(n)) == 0.0
    # f' = cos: H = int (1/2) cos^2 = 1/4
    f = np.sin(2 * np.pi * x) / (2 * np.pi)
    assert hamiltonian(model, np.ones(n), f) == pytest.approx(0.25, abs=1e-4)


def test_hamiltonian_gauge_and_convexity(rng):
    model = random_model(rng, 48)
    mu = normalize_density(rng.uniform(0.5, 1.5, size=48))
    f, g = rng.normal(size=(2, 48))
    assert hamiltonian(model, mu, f + 3.7) == pytest.approx(hamiltonian(model, mu, f), rel=1e-11, abs=1e-11)
    mid = hamiltonian(model, mu, 0.5 * (f + g))
    assert mid <= 0.5 * (hamiltonian(model, mu, f) + hamiltonian(model, mu, g)) + 1e-12


def test_lagrangian_zero_at_forward_velocity(rng):
    model = random_model(rng, 64)
    mu = smooth_density(model.grid.x)
    assert abs(lagrangian_dual(model, mu, adjoint_apply(model, mu))) < 1e-14


def test_uniform_sine_value():
    n = 512
    x = Grid(n).x
    val = lagrangian_dual(DiffusionModel.brownian(n), np.ones(n), np.sin(2 * np.pi * x))
    assert val == pytest.approx(1 / (16 * np.pi**2), rel=1e-4)
    assert lagrangian_entropy(np.ones(n), np.sin(2 * np.pi * x)) == pytest.approx(val, abs=1e-12)


def test_quadratic_scaling(rng):
    model = random_model(rng, 64)
    mu = smooth_density(model.grid.x)
    base = adjoint_apply(model, mu)
    delta = smooth_velocity(model.grid.x)
    one = lagrangian_dual(model, mu, base + delta)
    for lam in (0.1, 2.0, -3.0):
        assert lagrangian_dual(model, mu, base + lam * delta) == pytest.approx(lam**2 * one, rel=1e-10)


def test_dual_equals_entropy_form(rng):
    for n in (16, 64, 256):
        x = Grid(n).x
        mu = normalize_density(np.exp(0.4 * np.cos(2 * np.pi * x + rng.uniform(0, 6))))
        alpha = smooth_velocity(x)
        dual = lagrangian_dual(DiffusionModel.brownian(n), mu, alpha)
        assert dual == pytest.approx(lagrangian_entropy(mu, alpha), abs=1e-10)


def test_reconstructed_drift_produces_velocity():
    n = 128
    x = Grid(n).x
    mu, alpha = smooth_density(x), smooth_velocity(x)
    rec = lagrangian_entropy(mu, alpha, full=True)
    h = 1.0 / n
    div = (rec.flux - np.roll(rec.flux, 1)) / h
    npt.assert_allclose(div, alpha - 0.5 * (np.roll(mu, -1) - 2 * mu + np.roll(mu, 1)) / h**2, atol=1e-10)
    mu_face = 0.5 * (mu + np.roll(mu, -1))
    assert abs(np.sum(rec.drift)) < 1e-9 * n
    assert rec.value == pytest.approx(0.5 * h * np.sum(rec.drift**2 * mu_face), rel=1e-12)
    npt.assert_allclose(rec.faces[:2], [0.5 * h, 1.5 * h])


def test_grid_legendre_duality(rng):
    model = random_model(rng, 64)
    mu = smooth_density(model.grid.x)
    alpha = smooth_velocity(model.grid.x)
    L, g = lagrangian_dual(model, mu, alpha, return_potential=True)
    h = model.grid.h
    assert h * g @ alpha - hamiltonian(model, mu, g) == pytest.approx(L, rel=1e-10)
    for _ in range(20):
        f = g + 0.3 * rng.normal(size=64)
        assert h * f @ alpha - hamiltonian(model, mu, f) <= L + 1e-12


def test_second_order_convergence():
    vals = []
    for n in (64, 128, 256, 512):
        x = Grid(n).x
        model = DiffusionModel(0.3 * np.sin(2 * np.pi * x), 0.5 + 0.1 * np.cos(2 * np.pi * x))
        vals.append(lagrangian_dual(model, smooth_density(x), smooth_velocity(x)))
    d = np.abs(np.diff(vals))
    orders = np.log2(d[:-1] / d[1:])
    assert np.all(orders >= 1.8)


def test_validation():
    n = 16
    model = DiffusionModel.brownian(n)
    alpha = np.sin(2 * np.pi * Grid(n).x)
    with pytest.raises(ValidationError) as exc:
        lagrangian_dual(model, np.r_[0.0, np.full(n - 1, n / (n - 1))], alpha)
    assert exc.value.field == "mu"
    with pytest.raises(ValidationError) as exc:
        lagrangian_dual(model, np.ones(n), alpha + 1)
    assert exc.value.field == "alpha"
    with pytest.raises(ValidationError):
        lagrangian_dual(model, np.full(n, 2.0), alpha)
    with pytest.raises(ValidationError):
        DiffusionModel(np.zeros(n), np.zeros(n))
    with pytest.raises(ValidationError):
        grid_measure(np.ones(n), Grid(32))


def test_load_profile():
    n = 8
    alpha = [0.0] * n
    model, mu, a = load_profile({"n": n, "mu": [1.0] * n, "alpha": alpha})
    npt.assert_array_equal(model.a, 0.5)
    npt.assert_array_equal(model.b, 0.0)
    for data, field in [
        ({"mu": [1.0] * n, "alpha": alpha}, "n"),
        ({"n": 8.0, "mu": [1.0] * n, "alpha": alpha}, "n"),
        ({"n": n, "mu": [1.0] * 3, "alpha": alpha}, "mu"),
        ({"n": n, "mu": [1.0] * n, "alpha": alpha, "b": [0.0] * 2}, "b"),
        ({"n": n, "mu": [1.0] * n}, "alpha"),
    ]:
        with pytest.raises(ValidationError) as exc:
            load_profile(data)
        assert exc.value.field == field


def test_sharp_profile_still_solves():
    n = 64
    x = Grid(n).x
    mu = normalize_density(np.exp(3 * np.cos(2 * np.pi * x)))
    val = lagrangian_dual(DiffusionModel.brownian(n), mu, smooth_velocity(x))
    assert math.isfinite(val) and val > 0
