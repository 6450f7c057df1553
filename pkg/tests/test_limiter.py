import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swdg.dg import nodal_field
from swdg.limiter import (PositivityError, apply_limiter, correction_factor, limit_direct,
                          limit_total_height, positive_depth, reconstruct_momentum,
                          velocity_candidates)
from swdg.mesh import build_uniform_mesh
from swdg.scenarios import lake_at_rest_1, lake_at_rest_2, total_mass

from conftest import PERIODIC


def test_correction_factor_constant_state():
    H = np.ones((1, 3))
    assert correction_factor(H, np.ones(1), np.array([0.8]), np.array([1.2]))[0] == 1.0


def test_correction_factor_oracle():
    H = np.array([[0.5, 1.0, 1.5]])
    alpha = correction_factor(H, np.array([1.0]), np.array([0.8]), np.array([1.2]))
    assert abs(alpha[0] - 0.4) <= 1e-14
    H_hat = 1.0 + alpha[0] * (H[0] - 1.0)
    assert np.allclose(H_hat, [0.8, 1.0, 1.2], atol=1e-14, rtol=0)


def test_limit_total_height_through_stencil():
    # two cells sharing an edge; cell 1 has centroid 0.8 or 1.2 via its own
    # mean, cell 0 is the fixture cell
    h = np.array([[0.5, 1.0, 1.5], [1.2, 1.2, 1.2], [0.8, 0.8, 0.8]])
    b = np.zeros_like(h)
    stencil = np.array([[0, 1, 2], [1, 0, 1], [2, 0, 2]])
    h_hat, alpha = limit_total_height(h, b, stencil, return_alpha=True)
    assert abs(alpha[0] - 0.4) <= 1e-14
    assert np.allclose(h_hat[0], [0.8, 1.0, 1.2], atol=1e-14, rtol=0)
    assert np.array_equal(h_hat[1:], h[1:])


def test_positive_depth_oracles():
    assert np.array_equal(positive_depth(np.array([0.1, 0.2, 0.3])), [0.1, 0.2, 0.3])
    out = positive_depth(np.array([-0.2, 0.3, 0.8]))
    assert np.allclose(out, [0, 0.2, 0.7], atol=1e-14, rtol=0)
    assert abs(out.sum() - 0.9) <= 1e-14
    out = positive_depth(np.array([-0.3, 0.1, 0.2]))
    assert np.allclose(out, 0.0, atol=1e-14)


def test_positive_depth_rejects_negative_mean():
    with pytest.raises(PositivityError, match="negative mean"):
        positive_depth(np.array([[-0.5, 0.1, 0.2]]))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3))
def test_positive_depth_properties(vals):
    v = np.array(vals)
    if v.sum() < 0:
        return
    out = positive_depth(v)
    assert np.all(out >= 0)
    assert abs(out.sum() - v.sum()) <= 1e-13 * max(1.0, np.abs(v).max())
    if np.all(v >= 0):
        assert np.array_equal(out, v)


def test_momentum_tie_breaks_to_first_candidate():
    ones = np.ones((1, 3))
    m = np.array([[0.9, 1.0, 1.1]])
    out, fb = reconstruct_momentum(m, ones, ones, np.array([0.95]), np.array([1.05]), 1e-6)
    assert np.allclose(out, [[0.95, 1.0, 1.05]], atol=1e-14, rtol=0)
    assert abs(out.mean() - 1.0) <= 1e-14 and not fb[0]


def test_momentum_picks_third_candidate():
    ones = np.ones((1, 3))
    m = np.array([[0.5, 1.0, 1.5]])
    cand = velocity_candidates(ones, np.array([[0.9, 1.0, 1.2]]), np.array([1.0]))
    assert np.allclose(cand, [[0.8, 0.9, 1.1]], atol=1e-14, rtol=0)
    out, _ = reconstruct_momentum(m, ones, ones, np.array([0.9]), np.array([1.2]), 1e-6)
    assert np.allclose(out, [[0.9, 1.0, 1.1]], atol=1e-14, rtol=0)


def test_momentum_constant_velocity_fixed_point(rng):
    h = rng.uniform(0.5, 2.0, (20, 3))
    m = 0.7 * h
    out, fb = reconstruct_momentum(m, h, h, np.full(20, 0.7), np.full(20, 0.7), 1e-6)
    assert np.allclose(out, m, rtol=1e-14, atol=0) and not fb.any()


def test_momentum_dry_fallback():
    h = np.array([[0.0, 1e-9, 0.0]])
    m = np.array([[0.0, 5e-9, 0.0]])
    out, fb = reconstruct_momentum(m, h, h, np.array([-1.0]), np.array([1.0]), 1e-6)
    assert fb[0] and np.all(out == 0)


@pytest.mark.parametrize("scenario", [lake_at_rest_1, lake_at_rest_2])
@pytest.mark.parametrize("variant", ["vertex", "edge"])
@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_lake_at_rest_fixed_point(scenario, variant, backend):
    sc = scenario(nx=16)
    m = sc.build_mesh()
    bn = sc.bathymetry_at(m)[m.cells]
    U = apply_limiter(sc.initial_field(m), bn, m, variant, 1e-6, backend=backend)
    again = apply_limiter(U, bn, m, variant, 1e-6, backend=backend)
    assert np.array_equal(U, again)
    U0 = sc.initial_field(m)
    assert np.abs(U - U0).max() < 1e-15


@pytest.mark.parametrize("split", ["two", "four"])
def test_linear_surface_unchanged_away_from_boundary(split):
    m = build_uniform_mesh((0, 1, 0, 1), 8, 8, split)
    x, y = m.vertices.T
    b = 0.1 * x * y
    U = nodal_field(m, 2 + 0.3 * x - 0.2 * y - b, 0.4 + 0 * x, -0.1 + 0 * x)
    out = apply_limiter(U, b[m.cells], m, "vertex", 1e-6)
    P = m.node_coords
    inner = ~((P == 0) | (P == 1)).any(axis=(1, 2))
    assert np.array_equal(out[0, inner], U[0, inner])
    assert np.allclose(out[:, inner], U[:, inner], rtol=1e-14, atol=0)


def _random_field(rng, m):
    U = np.empty((3, m.n_cells, 3))
    h = rng.uniform(-0.5, 1.0, (m.n_cells, 3))
    h[rng.random(m.n_cells) < 0.2] = 0.0
    # keep cell means nonnegative
    h -= np.minimum(h.mean(axis=1), 0.0)[:, None]
    U[0] = h
    U[1:] = rng.normal(size=(2, m.n_cells, 3)) * np.abs(h)
    return U


@pytest.mark.parametrize("variant", ["vertex", "edge"])
def test_positivity_and_mass_random_fields(variant, rng):
    m = build_uniform_mesh((0, 1, 0, 1), 5, 5, "two", boundary=PERIODIC)
    for _ in range(1000):
        U = _random_field(rng, m)
        b = rng.random(m.n_vertices)[m.cells]
        out = apply_limiter(U, b, m, variant, 1e-3)
        assert out[0].min() >= 0.0
        M0 = total_mass(U, m)
        assert abs(total_mass(out, m) - M0) <= 1e-14 * max(M0, 1e-300) * 10


@pytest.mark.parametrize("variant", ["vertex", "edge"])
def test_cell_means_preserved(variant, rng):
    m = build_uniform_mesh((0, 1, 0, 1), 6, 6, "four", boundary=PERIODIC)
    U = _random_field(rng, m)
    b = rng.random(m.n_vertices)[m.cells]
    out = apply_limiter(U, b, m, variant, 1e-3)
    wet = U[0].mean(axis=1) >= 1e-3
    assert np.allclose(out[0].mean(axis=1), U[0].mean(axis=1), atol=1e-15)
    assert np.allclose(out[1:, wet].mean(axis=2), U[1:, wet].mean(axis=2), atol=1e-14)


@pytest.mark.parametrize("variant", ["vertex", "edge"])
def test_backends_bitwise_identical(variant, rng):
    m = build_uniform_mesh((0, 2, 0, 1), 8, 4, "two", levels=1)
    for _ in range(20):
        U = _random_field(rng, m)
        b = rng.random(m.n_vertices)[m.cells]
        a = apply_limiter(U, b, m, variant, 1e-3, backend="numba")
        c = apply_limiter(U, b, m, variant, 1e-3, backend="numpy")
        assert np.array_equal(a, c)


def test_negative_mean_raises(square2):
    U = np.zeros((3, 2, 3))
    U[0, 0] = [-1.0, 0.1, 0.1]
    for backend in ("numba", "numpy"):
        with pytest.raises(PositivityError):
            apply_limiter(U, np.zeros((2, 3)), square2, backend=backend)


def test_direct_mode_bounds_momentum(rng):
    m = build_uniform_mesh((0, 1, 0, 1), 6, 6, "two", boundary=PERIODIC)
    mom = rng.normal(size=(m.n_cells, 3))
    out = limit_direct(mom, m.stencil("vertex"))
    mc = mom.mean(axis=1)
    st_ = m.stencil("vertex")
    assert np.all(out <= mc[st_].max(axis=1)[:, None] + 1e-14)
    assert np.all(out >= mc[st_].min(axis=1)[:, None] - 1e-14)
    assert np.allclose(out.mean(axis=1), mc, atol=1e-14)


def test_bad_arguments(square2):
    U = np.ones((3, 2, 3))
    with pytest.raises(ValueError):
        apply_limiter(U, np.zeros((2, 3)), square2, variant="face")
    with pytest.raises(ValueError):
        apply_limiter(U, np.zeros((2, 3)), square2, momentum="magic")
