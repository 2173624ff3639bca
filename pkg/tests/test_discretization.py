import logging

import numpy as np
import pytest

from statinv import (
    DataUnavailableError,
    Grid,
    L2Vector,
    LevelData,
    LevelSchedule,
    NoiseSpec,
    build_integration_operator,
    embed_vector,
    n_of,
    nested_level,
    observe,
    project,
    project_operator,
    project_vector,
)
from statinv.signals import make_signal


def test_n_of_example_values():
    sched = LevelSchedule(r=1.0, eta=1.0, c1=1.0, c2=1.0)
    assert n_of(1e-4, 1e-1, sched) == 100
    assert n_of(1.0, 1.0, sched) == 1


def test_n_of_monotone_in_delta():
    sched = LevelSchedule(r=1.0, eta=1.0)
    alpha = 1e-3
    previous = 0
    for delta in (0.4, 0.2, 0.1, 0.05, 0.025):
        n = n_of(alpha, delta, sched)
        assert n >= previous
        previous = n


def test_n_of_cap_logs_warning(caplog):
    sched = LevelSchedule(r=1.0, eta=1.0, n_max=64)
    with caplog.at_level(logging.WARNING, logger="statinv.discretization"):
        assert n_of(1e-8, 1e-3, sched) == 64
    assert any("capping" in rec.message for rec in caplog.records)


def test_schedule_eta_validation():
    LevelSchedule(r=1.0, eta=1.0)  # 2/(1+2r) = 2/3 <= 1 < 2
    LevelSchedule(r=1.0, eta=2.0 / 3.0)
    with pytest.raises(ValueError):
        LevelSchedule(r=1.0, eta=0.5)
    with pytest.raises(ValueError):
        LevelSchedule(r=1.0, eta=2.0)
    LevelSchedule(c2=0.0)  # pure alpha-coupled special case
    with pytest.raises(ValueError):
        LevelSchedule(c2=-0.1)


def test_coupled_level_grows_against_noise():
    # with eta in (1, 2), n(alpha0(delta), delta)^2 * delta^2 diverges as
    # delta -> 0 (alpha0 = delta^2), the direction the concentration
    # inequality needs
    sched = LevelSchedule(r=1.0, eta=1.5, c1=1.0, c2=1.0, n_max=10**9)
    products = []
    for delta in (1e-1, 1e-2, 1e-3):
        n = n_of(delta**2, delta, sched)
        products.append(n**2 * delta**2)
    assert products[0] < products[1] < products[2]


def test_nested_level_rounding():
    assert nested_level(100, 1024) == 128
    assert nested_level(1024, 1024) == 1024
    assert nested_level(1, 1024) == 1
    assert nested_level(5, 12) == 6
    with pytest.raises(DataUnavailableError):
        nested_level(1025, 1024)


def _observation(n=64, delta=0.1, seed=1):
    op = build_integration_operator(Grid(n))
    x = make_signal("smooth", op.grid)
    return observe(op, x, delta, NoiseSpec.gaussian_white(seed))


def test_project_identity_level():
    obs = _observation()
    assert project(obs, 64) is obs


def test_project_preserves_constants():
    grid = Grid(64)
    const = L2Vector.from_cell_values(grid, np.full(64, 3.0))
    proj = project_vector(const, 8)
    assert np.allclose(proj.cell_values(), 3.0, atol=1e-13)


def test_projection_pythagoras():
    obs = _observation()
    coarse = project(obs, 16)
    back = embed_vector(L2Vector(coarse.grid, coarse.coeffs), obs.grid)
    residual = obs.coeffs - back.coeffs
    lhs = np.sum(coarse.coeffs**2) + np.sum(residual**2)
    assert lhs == pytest.approx(np.sum(obs.coeffs**2), abs=1e-12)


def test_projection_idempotent_and_self_adjoint():
    rng = np.random.default_rng(8)
    grid = Grid(64)
    y = L2Vector(grid, rng.standard_normal(64))
    z = L2Vector(grid, rng.standard_normal(64))
    qy = embed_vector(project_vector(y, 16), grid)
    qqy = embed_vector(project_vector(qy, 16), grid)
    assert np.max(np.abs(qqy.coeffs - qy.coeffs)) < 1e-12
    qz = embed_vector(project_vector(z, 16), grid)
    assert np.dot(qy.coeffs, z.coeffs) == pytest.approx(np.dot(y.coeffs, qz.coeffs), abs=1e-12)


def test_project_requires_nested():
    obs = _observation()
    with pytest.raises(ValueError):
        project(obs, 7)


def test_projected_white_noise_is_white_again():
    # aggregated iid N(0,1) coefficients stay iid N(0,1) on the coarse grid
    grid = Grid(256)
    op = build_integration_operator(grid)
    x = L2Vector(grid, np.zeros(256))
    spec = NoiseSpec.gaussian_white(seed=5)
    samples = []
    for rep in range(2000):
        obs = observe(op, x, 1.0, spec, replicate=rep)
        samples.append(project(obs, 16).coeffs)
    samples = np.array(samples).ravel()
    assert abs(np.mean(samples)) < 0.02
    assert abs(np.var(samples) - 1.0) < 0.03


def test_project_operator_matches_direct_build():
    fine = build_integration_operator(Grid(64))
    projected = project_operator(fine, 16)
    direct = build_integration_operator(Grid(16))
    assert np.max(np.abs(projected.matrix - direct.matrix)) < 1e-14


def test_embed_is_isometry():
    rng = np.random.default_rng(9)
    coarse = L2Vector(Grid(16), rng.standard_normal(16))
    fine = embed_vector(coarse, Grid(128))
    assert fine.norm() == pytest.approx(coarse.norm(), rel=1e-14)
    back = project_vector(fine, 16)
    assert np.max(np.abs(back.coeffs - coarse.coeffs)) < 1e-13


def test_level_data_rounds_and_caches():
    obs = _observation(n=64)
    data = LevelData(obs)
    level = data(40)
    assert level.n == 64  # smallest divisor of 64 that is >= 40
    assert data(40) is level
    assert data(64) is obs
    with pytest.raises(DataUnavailableError):
        data(65)
