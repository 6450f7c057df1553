import numpy as np
import pytest

from swdg.dg import (G, DGOperator, InflowSpec, compute_rhs, edge_quadrature, ghost_state,
                     nodal_field, physical_flux, rusanov_flux, volume_quadrature)
from swdg.mesh import build_uniform_mesh
from swdg.scenarios import lake_at_rest_1, lake_at_rest_2
from swdg.wetdry import classify_cells

from conftest import PERIODIC


def test_physical_flux_examples():
    F = physical_flux(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(F[0], [0, 0])
    assert np.allclose(F[1], [4.90308, 0], atol=1e-12)
    assert np.allclose(F[2], [0, 4.90308], atol=1e-12)
    assert np.all(physical_flux(np.zeros(3)) == 0)
    F = physical_flux(np.array([2.0, 2.0, 0.0]))
    assert np.allclose(F[0], [2, 0])
    assert np.allclose(F[1], [21.61232, 0], atol=1e-12)


def test_rusanov_examples():
    n = np.array([1.0, 0.0])
    f = rusanov_flux(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), n)
    assert np.allclose(f, [0, 4.90308, 0], atol=1e-12)
    assert np.all(rusanov_flux(np.zeros(3), np.zeros(3), n) == 0)
    f = rusanov_flux(np.array([1.0, 0, 0]), np.array([0.5, 0, 0]), n)
    lam = np.sqrt(G)
    assert np.isclose(lam, 3.13148, atol=1e-5)
    assert np.allclose(f, [0.5 * lam * 0.5, 0.5 * (4.90308 + 1.22577), 0], atol=1e-12)
    assert np.allclose(f, [0.782870, 3.064425, 0], atol=1e-6)


def test_rusanov_consistency_and_conservation(rng):
    for _ in range(20):
        U = np.array([rng.uniform(0.1, 2), *rng.normal(size=2)])
        V = np.array([rng.uniform(0.1, 2), *rng.normal(size=2)])
        th = rng.uniform(0, 2 * np.pi)
        n = np.array([np.cos(th), np.sin(th)])
        F = physical_flux(U)
        assert np.allclose(rusanov_flux(U, U, n), F @ n, atol=1e-12)
        assert np.allclose(rusanov_flux(U, V, n), -rusanov_flux(V, U, -n), atol=1e-12)


def test_thin_layer_side_has_no_mass_flux():
    n = np.array([1.0, 0.0])
    UL = np.array([1e-9, 1e-9, 0.0])   # thin layer with spurious momentum
    f = rusanov_flux(UL, UL, n, tol_wet=1e-6)
    assert f[0] == 0.0


def test_quadrature_rules():
    p, w = volume_quadrature()
    assert np.isclose(w.sum(), 0.5)
    assert np.isclose((w * p[:, 0] * p[:, 1]).sum(), 1 / 24, rtol=1e-14)
    assert np.isclose((w * p[:, 0] ** 2).sum(), 1 / 12, rtol=1e-14)
    s, ws = edge_quadrature()
    assert np.isclose((ws * s ** 3).sum(), 0.25, rtol=1e-14)
    assert np.isclose(ws.sum(), 1.0)


def test_ghost_states():
    n = np.array([1.0, 0.0])
    U = np.array([1.0, 0.3, 0.2])
    assert np.allclose(ghost_state("wall", U, n), [1, -0.3, 0.2])
    assert np.allclose(ghost_state("transparent", U, n), U)
    spec = InflowSpec(depth=lambda t: 0.13535, h0=0.13535)
    assert np.allclose(ghost_state("inflow", U, -n, inflow=spec)[1:], 0)
    spec = InflowSpec(depth=lambda t: 0.14, h0=0.13535)
    gs = ghost_state("inflow", U, np.array([-1.0, 0.0]), inflow=spec)
    speed = 2 * (np.sqrt(1.372862) - np.sqrt(1.327264))
    assert np.isclose(speed, 0.039246, atol=1e-6)
    assert np.isclose(gs[0], 0.14)
    assert np.isclose(gs[1] / gs[0], 0.039246, atol=1e-6)   # directed into the domain
    with pytest.raises(ValueError, match="inflow"):
        ghost_state("inflow", U, n)
    with pytest.raises(ValueError):
        ghost_state("lava", U, n)


def test_ghost_state_wall_reflects_normal_component(rng):
    th = rng.uniform(0, 2 * np.pi)
    n = np.array([np.cos(th), np.sin(th)])
    U = np.array([1.0, 0.4, -0.7])
    gs = ghost_state("wall", U, n)
    assert np.isclose(gs[1:] @ n, -(U[1:] @ n))
    t = np.array([-n[1], n[0]])
    assert np.isclose(gs[1:] @ t, U[1:] @ t)


@pytest.mark.parametrize("form", ["strong", "weak"])
@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_constant_state_periodic(form, backend, periodic8):
    U = np.zeros((3, periodic8.n_cells, 3))
    U[0] = 1.0
    U[1] = 0.3
    U[2] = -0.2
    R = compute_rhs(U, np.zeros(periodic8.n_vertices), periodic8, form=form, backend=backend)
    assert np.abs(R).max() < 1e-13


@pytest.mark.parametrize("scenario", [lake_at_rest_1, lake_at_rest_2])
@pytest.mark.parametrize("form", ["strong", "weak"])
@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_lake_at_rest_is_steady(scenario, form, backend):
    sc = scenario(nx=16)
    m = sc.build_mesh()
    b = sc.bathymetry_at(m)
    R = compute_rhs(sc.initial_field(m), b, m, form=form, backend=backend)
    assert np.abs(R).max() < 1e-12


@pytest.mark.parametrize("form", ["strong", "weak"])
def test_patch_linear_depth_two_cells(form):
    # h = 1 + 0.2 x - 0.1 y, m = 0, flat bottom: the exact tendency is
    # dh/dt = 0 and d(hu, hv)/dt = -g h grad(h) at every node
    m = build_uniform_mesh((0, 1, 0, 1), 1, 1, "two")
    x, y = m.vertices.T
    U = nodal_field(m, 1 + 0.2 * x - 0.1 * y)
    R = compute_rhs(U, np.zeros(m.n_vertices), m, form=form)
    h = U[0]
    assert np.abs(R[0]).max() < 1e-13
    assert np.allclose(R[1], -G * h * 0.2, atol=1e-13, rtol=0)
    assert np.allclose(R[2], -G * h * -0.1, atol=1e-13, rtol=0)


def test_strong_and_weak_agree_on_wet_states(rng):
    m = build_uniform_mesh((0, 1, 0, 1), 6, 6, "four", boundary=PERIODIC)
    b = 0.1 * rng.random(m.n_vertices)
    U = np.empty((3, m.n_cells, 3))
    U[0] = rng.uniform(0.5, 1.5, (m.n_cells, 3))
    U[1:] = rng.normal(scale=0.3, size=(2, m.n_cells, 3))
    Rs = compute_rhs(U, b, m, form="strong")
    Rw = compute_rhs(U, b, m, form="weak")
    assert np.allclose(Rs, Rw, atol=1e-11)


def test_conservation_of_mass_tendency(rng):
    m = build_uniform_mesh((0, 1, 0, 1), 5, 5, "two", boundary=PERIODIC)
    U = np.empty((3, m.n_cells, 3))
    U[0] = np.where(rng.random((m.n_cells, 3)) < 0.3, 0.0, rng.uniform(0, 1, (m.n_cells, 3)))
    U[1:] = rng.normal(scale=0.2, size=(2, m.n_cells, 3)) * U[0]
    b = rng.random(m.n_vertices)
    for form in ("strong", "weak"):
        R = compute_rhs(U, b, m, form=form, tol_wet=1e-3)
        # integral of dh/dt: sum of area * nodal mean
        assert abs((m.area * R[0].mean(axis=1)).sum()) < 1e-13


def test_rejects_inconsistent_input(square2):
    op = DGOperator(square2, np.zeros(4))
    with pytest.raises(ValueError, match="shape"):
        op.rhs(np.zeros((3, 5, 3)))
    flags = classify_cells(np.ones((7, 3)), np.zeros((7, 3)), 1e-6)
    with pytest.raises(ValueError, match="flags"):
        op.rhs(np.ones((3, 2, 3)), flags=flags)
    with pytest.raises(ValueError):
        DGOperator(square2, np.zeros(4), form="mixed")


@pytest.mark.parametrize("form", ["strong", "weak"])
def test_backends_agree(form, rng):
    m = build_uniform_mesh((0, 2, 0, 1), 8, 4, "four",
                           boundary={"left": "inflow", "right": "transparent"})
    b = 0.5 * rng.random(m.n_vertices)
    U = np.empty((3, m.n_cells, 3))
    U[0] = np.where(rng.random((m.n_cells, 3)) < 0.3, 0.0, rng.uniform(0, 1, (m.n_cells, 3)))
    U[0][rng.random((m.n_cells, 3)) < 0.1] = 1e-8
    U[1:] = rng.normal(scale=0.5, size=(2, m.n_cells, 3)) * U[0]
    inflow = InflowSpec(depth=lambda t: 0.5 + 0.1 * t, h0=0.5)
    kw = dict(form=form, tol_wet=1e-6, inflow=inflow, t=0.7)
    a = compute_rhs(U, b, m, backend="numba", **kw)
    c = compute_rhs(U, b, m, backend="numpy", **kw)
    assert np.allclose(a, c, rtol=1e-12, atol=1e-13 * np.abs(c).max())


@pytest.mark.parametrize("form", ["strong", "weak"])
def test_rhs_rotation_equivariance(form, rng):
    from swdg.mesh import Mesh
    walls = dict.fromkeys(("left", "right", "bottom", "top"), "wall")
    m = build_uniform_mesh((-1, 1, -1, 1), 5, 5, "four", boundary=walls)
    x, y = m.vertices.T
    rot = Mesh.from_cells(np.column_stack([-y, x]), m.cells,
                          boundary={(a, b): t for a, b, t in m.boundary_records})
    b = 0.3 * np.exp(-(x - 0.2) ** 2 - y ** 2)
    U = nodal_field(m, 1.0 - b + 0.05 * x, rng.normal(size=m.n_vertices),
                    rng.normal(size=m.n_vertices))
    R = compute_rhs(U, b, m, form=form)
    Ur = np.stack([U[0], -U[2], U[1]])
    Rr = compute_rhs(Ur, b, rot, form=form)
    assert np.allclose(Rr[0], R[0], rtol=0, atol=1e-12)
    assert np.allclose(Rr[1], -R[2], rtol=0, atol=1e-12)
    assert np.allclose(Rr[2], R[1], rtol=0, atol=1e-12)
