import numpy as np
import pytest
import scipy.special as sp
from scipy.integrate import quad

import farscope.forward as fw
from farscope.errors import SingularSystemError
from farscope.farfield import directions
from farscope.forward import (
    assemble_ls,
    far_field,
    kernel_matrix,
    mie_coefficients,
    mie_far_field,
    mie_interior_field,
    self_cell_integral,
    solve_incidence,
    solve_many,
)
from farscope.scene import RefractiveScene, SolverGrid, build_curve, discretize

from conftest import K, WAVELENGTH, disk_scene

D = np.array([1.0, 0.0])


def quad_self_cell(k, h):
    """(i/4) 2 pi int_0^R H0(k r) r dr over the equal-area disk, by adaptive quadrature."""
    R = h / np.sqrt(np.pi)
    re = quad(lambda r: sp.hankel1(0, k * r).real * r, 0, R, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    im = quad(lambda r: sp.hankel1(0, k * r).imag * r, 0, R, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return 0.25j * 2 * np.pi * complex(re, im)


@pytest.mark.parametrize("k, h", [(5.0, 0.1), (5.0, 0.05), (1.0, 0.2)])
def test_self_cell_matches_quadrature(k, h):
    ref = quad_self_cell(k, h)
    assert abs(self_cell_integral(k, h) - ref) < 1e-10 * abs(ref)


def test_self_cell_small_cells():
    assert abs(self_cell_integral(K, 1e-3)) < abs(self_cell_integral(K, 1e-2))
    avg = (4 / 1j) * self_cell_integral(K, 1e-3) / 1e-3**2
    assert 0.5 < avg.real < 1.5


def test_self_cell_shrinks_with_cell_size():
    vals = [abs(self_cell_integral(K, h)) for h in (0.2, 0.1, 0.05, 0.025)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # averaged kernel ~ J0 ~ 1 in real part after removing the i/4 factor
    for h in (0.1, 0.05):
        avg = (4 / 1j) * self_cell_integral(K, h) / h**2
        assert 0.5 < avg.real < 1.5


def _scene(n=2 + 2j, **kw):
    return disk_scene(n=n, **kw)


def test_vacuum_gives_identity():
    scene = RefractiveScene(build_curve("disk"), 1.0, 1.0, K, contrast_floor=0.0)
    system = assemble_ls(discretize(scene, WAVELENGTH / 10), K)
    assert np.array_equal(system.A, np.eye(system.grid.size))
    sol = solve_incidence(system, D)
    assert np.array_equal(sol.u, np.exp(1j * K * system.grid.centers @ D))
    assert np.array_equal(far_field(system.grid, sol, directions(8)), np.zeros(8))


def test_kernel_is_exactly_symmetric():
    grid = discretize(_scene(), WAVELENGTH / 10)
    V = kernel_matrix(grid, K)
    assert np.array_equal(V, V.T)


def test_off_diagonal_is_midpoint_rule():
    grid = discretize(_scene(), WAVELENGTH / 10)
    V = kernel_matrix(grid, K)
    r = np.hypot(*(grid.centers[0] - grid.centers[7]))
    assert abs(V[0, 7] - grid.cell_area * 0.25j * sp.hankel1(0, K * r)) < 1e-12 * abs(V[0, 7])


def test_single_cell_closed_form():
    h, n = 0.1, 3 + 1j
    grid = SolverGrid(h, np.array([[0.05, 0.05]]), np.array([1], np.int8), np.array([n]), K)
    system = assemble_ls(grid, K)
    assert system.A[0, 0] == 1 - K**2 * (n - 1) * self_cell_integral(K, h)
    sol = solve_incidence(system, D)
    expected = np.exp(1j * K * 0.05) / (1 - K**2 * self_cell_integral(K, h) * (n - 1))
    assert abs(sol.u[0] - expected) < 1e-14


def test_solution_is_linear_in_the_incident_field(rng):
    grid = discretize(_scene(), WAVELENGTH / 10)
    system = assemble_ls(grid, K)
    dirs = directions(8)
    U, res = solve_many(system, dirs)
    assert res < 1e-12
    a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
    rhs = a * np.exp(1j * K * grid.centers @ dirs[1]) + b * np.exp(1j * K * grid.centers @ dirs[4])
    combo = system.solve(rhs)
    assert np.allclose(combo, a * U[:, 1] + b * U[:, 4], rtol=0, atol=1e-12 * np.abs(combo).max())


def test_scaling_the_incident_wave_scales_the_field():
    grid = discretize(_scene(), WAVELENGTH / 10)
    system = assemble_ls(grid, K)
    rhs = np.exp(1j * K * grid.centers @ D)
    c = 0.3 - 2.1j
    u = system.solve(rhs)
    assert np.allclose(system.solve(c * rhs), c * u, rtol=0, atol=1e-13 * np.abs(c * u).max())


def test_equal_angle_pairs_agree_for_real_index():
    # pairs related by a symmetry of the cell lattice (quarter turns, axis reflections)
    grid = discretize(_scene(n=2.0), WAVELENGTH / 10)
    system = assemble_ls(grid, K)
    dirs = directions(16)
    U, _ = solve_many(system, dirs)
    F = far_field(grid, U, dirs)
    for r in range(16):
        assert abs(F[(r + 4) % 16, 4] - F[r, 0]) < 1e-12 * np.abs(F).max()  # quarter turn
        assert abs(F[(-r) % 16, 0] - F[r, 0]) < 1e-12 * np.abs(F).max()  # reflection about d


def test_solve_many_matches_single_solves():
    grid = discretize(_scene(), WAVELENGTH / 10)
    system = assemble_ls(grid, K)
    dirs = directions(8)
    U, _ = solve_many(system, dirs)
    for s in (0, 3):
        assert np.allclose(solve_incidence(system, dirs[s]).u, U[:, s], atol=1e-13)
    F1 = far_field(grid, solve_incidence(system, dirs[3]), dirs)
    assert np.allclose(F1, far_field(grid, U, dirs)[:, 3], atol=1e-13)


def test_singular_matrix_is_reported():
    with pytest.raises(SingularSystemError):
        fw.factorize(np.zeros((3, 3), dtype=complex))
    with pytest.raises(SingularSystemError):
        fw.factorize(np.array([[1, 1], [1, 1 + 1e-15]], dtype=complex))


# ---- disk reference solution ----

def test_mie_vanishes_without_contrast():
    betas, _ = mie_coefficients(1.0, 1.0, K)
    assert np.max(np.abs(betas)) < 1e-14


def test_mie_coefficients_against_scipy():
    n, a = 2 + 2j, 1.0
    betas, cs = mie_coefficients(a, n, K)
    kap = K * np.sqrt(n)
    for m in range(len(betas)):
        J, dJ = sp.jv(m, K * a), sp.jvp(m, K * a)
        H, dH = sp.hankel1(m, K * a), sp.h1vp(m, K * a)
        Ji, dJi = sp.jv(m, kap * a), sp.jvp(m, kap * a)
        beta = -(kap * dJi * J - K * Ji * dJ) / (kap * dJi * H - K * Ji * dH)
        assert abs(betas[m] - beta) < 1e-11 * max(abs(beta), 1e-12) + 1e-16


def test_mie_interior_matches_exterior_on_the_boundary():
    n, a = 2 + 2j, 1.0
    betas, _ = mie_coefficients(a, n, K)
    phi = np.linspace(0, 2 * np.pi, 13)
    pts = a * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    inner = mie_interior_field(a, n, K, pts, D)
    m = np.arange(len(betas))
    outer = np.exp(1j * K * pts @ D)
    for mm in m:
        w = 1.0 if mm == 0 else 2.0
        outer = outer + w * 1j**mm * betas[mm] * sp.hankel1(mm, K * a) * np.cos(mm * phi)
    assert np.max(np.abs(inner - outer)) < 1e-10


def test_mie_far_field_depends_only_on_relative_angle():
    dirs = directions(16)
    F = np.stack([mie_far_field(1.0, 2 + 2j, K, dirs, d) for d in dirs], axis=1)
    for s in range(16):
        assert np.allclose(F[:, s], np.roll(F[:, 0], s), atol=1e-13)


def test_mie_far_field_random_rotations(rng):
    for _ in range(10):
        a, b = rng.uniform(0, 2 * np.pi, 2)
        rot = np.array([[np.cos(b), -np.sin(b)], [np.sin(b), np.cos(b)]])
        xhat = np.array([np.cos(a), np.sin(a)])
        d = np.array([np.cos(a / 3), np.sin(a / 3)])
        u1 = mie_far_field(1.0, 2 + 2j, K, xhat, d)
        u2 = mie_far_field(1.0, 2 + 2j, K, rot @ xhat, rot @ d)
        assert abs(u1 - u2) < 1e-12 * abs(u1)


@pytest.mark.parametrize("n", [2.0, 0.5, 4.0])
def test_optical_theorem_for_lossless_disk(n):
    M = 256
    dirs = directions(M)
    u = mie_far_field(1.0, n, K, dirs, D)
    lhs = u[0].imag
    rhs = (2 * np.pi / M) * np.sum(np.abs(u) ** 2) / (8 * np.pi)
    assert abs(lhs - rhs) < 1e-8 * abs(lhs)


def _solver_error(div, n=2 + 2j):
    scene = _scene(n)
    dirs = directions(64)
    ref = mie_far_field(1.0, n, K, dirs, D)
    grid = discretize(scene, WAVELENGTH / div)
    u = far_field(grid, solve_incidence(assemble_ls(grid, K), D), dirs)
    return np.linalg.norm(u - ref) / np.linalg.norm(ref), u, ref


def test_far_field_converges_under_refinement():
    # nested lattices: each grid subdivides the cells of the previous one
    errs = [_solver_error(div)[0] for div in (12, 24)]
    assert errs[0] > errs[1]
    assert errs[1] < 1.5e-2


@pytest.mark.slow
def test_far_field_converges_on_finer_mesh():
    errs = [_solver_error(div)[0] for div in (24, 48)]
    assert errs[0] > errs[1]
    assert errs[1] < 5e-3


def test_forward_scattering_amplitude_at_coarse_mesh():
    _, u, ref = _solver_error(12)
    assert abs(u[0] - ref[0]) / abs(ref[0]) < 1e-2


def test_far_field_agrees_for_weak_real_contrast():
    err, _, _ = _solver_error(12, n=1.5)
    assert err < 2e-2


@pytest.mark.xfail(strict=True, reason="absorbing contrast at h = lambda/12 gives ~2.9e-2; see notes")
def test_far_field_matches_disk_series_at_lambda_over_12():
    err, _, _ = _solver_error(12)
    assert err < 2e-2


@pytest.mark.xfail(strict=True, reason="interior field error ~6.5e-2 at h = lambda/12; see notes")
def test_interior_field_matches_disk_series_at_lambda_over_12():
    grid = discretize(_scene(), WAVELENGTH / 12)
    u = solve_incidence(assemble_ls(grid, K), D).u
    ref = mie_interior_field(1.0, 2 + 2j, K, grid.centers, D)
    assert np.max(np.abs(u - ref)) / np.max(np.abs(ref)) < 2e-2


def test_broken_self_cell_is_detected(monkeypatch):
    good, _, _ = _solver_error(12)
    original = fw.self_cell_integral
    monkeypatch.setattr(fw, "self_cell_integral", lambda k, h: -original(k, h))
    bad, _, _ = _solver_error(12)
    assert bad > 2 * good and bad > 5e-2
