"""Lippmann-Schwinger volume integral solver and disk reference solution.

The total field solves ``u = u_inc + k^2 int Phi(x, y) (n(y) - 1) u(y) dy``
with the 2D outgoing fundamental solution ``Phi(x, y) = (i/4) H0(k|x-y|)``.
Cells are collocated at their centers; the singular self-interaction is
integrated exactly over the disk of equal area.

Far-field convention (used consistently by :func:`far_field` and
:func:`mie_far_field`)::

    u_s(x) ~ exp(i pi/4) / sqrt(8 pi k) * exp(i k r) / sqrt(r) * u_inf(xhat)
    u_inf(xhat) = k^2 int exp(-i k xhat . y) (n(y) - 1) u(y) dy

With this normalization, for a lossless scatterer the optical theorem
reads ``Im u_inf(d; d) = (1 / (8 pi)) int_{S^1} |u_inf(xhat; d)|^2 ds``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lapack, lu_factor, lu_solve

from .errors import OracleError, SingularSystemError
from .special import MAX_ORDER, bessel_j, bessel_y_orders, hankel1

__all__ = [
    "CONVENTION",
    "LSSystem",
    "FieldSolution",
    "self_cell_integral",
    "kernel_matrix",
    "assemble_ls",
    "solve_incidence",
    "solve_many",
    "far_field",
    "plane_wave",
    "mie_coefficients",
    "mie_far_field",
    "mie_interior_field",
]

CONVENTION = "uinf=k2*int(exp(-ik*xhat.y)(n-1)u)"
RESIDUAL_TOL = 1e-12
# J_{m+1} is needed at the last order, and bessel_j stops at order 60
MIE_MAX_ORDER = MAX_ORDER - 1


def self_cell_integral(k, h):
    """Integral of ``(i/4) H0(k|y|)`` over the disk of area ``h^2`` centered at 0.

    With ``R = h / sqrt(pi)``, ``d/dr[r H1(kr)] = k r H0(kr)`` and
    ``r H1(kr) -> -2i/(pi k)`` as ``r -> 0`` give
    ``(i pi R / (2k)) H1(kR) - 1/k^2``.
    """
    radius = h / np.sqrt(np.pi)
    return complex(1j * np.pi * radius / (2.0 * k) * hankel1(1, k * radius) - 1.0 / k**2)


def plane_wave(k, points, d):
    """``exp(i k x . d)`` at ``points`` of shape ``(N, 2)``; ``d`` may be ``(2,)`` or ``(M, 2)``."""
    d = np.asarray(d, dtype=float)
    phase = np.asarray(points, dtype=float) @ d.T
    return np.exp(1j * k * phase)


def kernel_matrix(grid, k):
    """Cell-to-cell matrix ``V[c, c'] ~ int_{cell c'} Phi(x_c, y) dy``.

    Off-diagonal entries use the midpoint rule; only the upper triangle is
    evaluated and mirrored, so ``V`` is exactly symmetric.
    """
    n = grid.size
    area = grid.cell_area
    V = np.empty((n, n), dtype=complex)
    iu, ju = np.triu_indices(n, k=1)
    diff = grid.centers[iu] - grid.centers[ju]
    dist = np.hypot(diff[:, 0], diff[:, 1])
    vals = area * 0.25j * hankel1(0, k * dist)
    V[iu, ju] = vals
    V[ju, iu] = vals
    np.fill_diagonal(V, self_cell_integral(k, grid.h))
    return V


@dataclass(frozen=True, eq=False)
class LSSystem:
    """Discrete Lippmann-Schwinger operator ``A = I - k^2 V diag(n - 1)`` and its LU factors."""

    grid: object
    k: float
    V: np.ndarray
    A: np.ndarray
    lu: tuple
    condition: float

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=complex)
        u = lu_solve(self.lu, rhs)
        # one step of iterative refinement keeps the residual at rounding level
        u = u + lu_solve(self.lu, rhs - self.A @ u)
        return u

    def residual(self, u, rhs):
        rhs = np.asarray(rhs, dtype=complex)
        r = self.A @ u - rhs
        return float(np.max(np.linalg.norm(r, axis=0) / np.linalg.norm(rhs, axis=0)))


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Total field ``u`` on the cell centers for incident direction ``d``."""

    d: np.ndarray
    u: np.ndarray
    k: float
    residual: float


def _condition_1norm(A, lu_piv):
    lu, _ = lu_piv
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0:
        return np.inf
    return 1.0 / rcond


def factorize(A, what="Lippmann-Schwinger matrix"):
    """LU-factorize ``A`` and estimate its 1-norm condition number."""
    with np.errstate(all="ignore"), warnings.catch_warnings():
        # singularity is reported below through SingularSystemError
        warnings.simplefilter("ignore", LinAlgWarning)
        try:
            lu_piv = lu_factor(A, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularSystemError(f"{what}: factorization failed ({exc})") from exc
    if np.any(np.diag(lu_piv[0]) == 0):
        raise SingularSystemError(f"{what} is exactly singular", condition=np.inf)
    cond = _condition_1norm(A, lu_piv)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(f"{what} is numerically singular (cond ~ {cond:.3g})", condition=cond)
    return lu_piv, cond


def assemble_ls(grid, k):
    """Assemble and factorize the Lippmann-Schwinger system on ``grid``."""
    if grid.size == 0:
        raise ValueError("grid has no cells")
    V = kernel_matrix(grid, k)
    A = -(k * k) * V * grid.contrast[None, :]
    A[np.diag_indices_from(A)] += 1.0
    lu_piv, cond = factorize(A)
    return LSSystem(grid, float(k), V, A, lu_piv, cond)


def solve_incidence(system, d):
    """Total field on the cells for the incident plane wave of direction ``d``."""
    d = np.asarray(d, dtype=float)
    rhs = plane_wave(system.k, system.grid.centers, d)
    u = system.solve(rhs)
    res = system.residual(u, rhs)
    if res >= RESIDUAL_TOL:
        raise SingularSystemError(f"solve residual {res:.3g} exceeds {RESIDUAL_TOL}", condition=system.condition)
    return FieldSolution(d, u, system.k, res)


def solve_many(system, directions):
    """Total fields for all incident directions at once; returns ``(U, residual)``.

    ``U[:, s]`` is the field for ``directions[s]``.
    """
    rhs = plane_wave(system.k, system.grid.centers, directions)
    U = system.solve(rhs)
    res = system.residual(U, rhs)
    if res >= RESIDUAL_TOL:
        raise SingularSystemError(f"solve residual {res:.3g} exceeds {RESIDUAL_TOL}", condition=system.condition)
    return U, res


def far_field(grid, solution, xhat):
    """Far-field pattern ``k^2 sum_c h^2 exp(-i k xhat.y_c) (n_c - 1) u_c``.

    ``solution`` is a :class:`FieldSolution` or a raw cell-field array
    (``(N,)`` or ``(N, S)`` for several incidences).
    """
    u = solution.u if isinstance(solution, FieldSolution) else np.asarray(solution)
    k = grid.k
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    E = np.exp(-1j * k * (xhat @ grid.centers.T))
    return (k * k * grid.cell_area) * (E @ (grid.contrast[:, None] * u.reshape(grid.size, -1))).reshape(
        (len(xhat),) + u.shape[1:]
    )


def _sqrt_upper(n):
    root = np.sqrt(complex(n))
    return -root if root.imag < 0 else root


def mie_coefficients(radius, n_const, k, tol=1e-12):
    """Scattering and interior coefficients ``(beta_m, c_m)`` for ``m = 0, 1, ...``.

    For the incident cylindrical wave ``J_m(kr) e^{i m theta}`` the
    scattered part is ``beta_m H_m(kr)`` and the interior field
    ``c_m J_m(k sqrt(n) r)``. Negative orders share the same values.
    The series stops once ``|beta_m|`` drops below ``tol`` times the
    largest coefficient seen and ``|J_m(k a)| <= tol``, so that the
    interior expansion is resolved as well (``m`` past ``k a``).
    """
    n_const = complex(n_const)
    if n_const.imag < 0:
        raise ValueError("Im(n) must be >= 0")
    ka = k * radius
    kappa = k * _sqrt_upper(n_const)
    kappa_a = kappa * radius
    y_all = bessel_y_orders(MIE_MAX_ORDER + 1, ka)
    betas, cs = [], []
    largest = 0.0
    jm_out = bessel_j(0, ka)
    jm_in = bessel_j(0, kappa_a)
    for m in range(MIE_MAX_ORDER + 1):
        jn_out = bessel_j(m + 1, ka)
        jn_in = bessel_j(m + 1, kappa_a)
        hm = jm_out + 1j * y_all[m]
        hn = jn_out + 1j * y_all[m + 1]
        # derivatives via J_m'(z) = (m/z) J_m(z) - J_{m+1}(z)
        djo = (m / ka) * jm_out - jn_out if m else -jn_out
        dho = (m / ka) * hm - hn if m else -hn
        dji = (m / kappa_a) * jm_in - jn_in if m else -jn_in
        num = kappa * dji * jm_out - k * jm_in * djo
        den = kappa * dji * hm - k * jm_in * dho
        beta = -num / den
        c = (jm_out + beta * hm) / jm_in
        betas.append(beta)
        cs.append(c)
        largest = max(largest, abs(beta))
        if m > ka and abs(beta) <= tol * max(largest, 1e-300) and abs(jm_out) <= tol:
            return np.array(betas), np.array(cs)
        jm_out, jm_in = jn_out, jn_in
    raise OracleError(f"disk series did not converge within order {MIE_MAX_ORDER}")


def _angle_between(xhat, d):
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    d = np.asarray(d, dtype=float)
    return np.arctan2(xhat[:, 1], xhat[:, 0]) - np.arctan2(d[1], d[0])


def mie_far_field(radius, n_const, k, xhat, d):
    """Far field of a homogeneous penetrable disk centered at the origin.

    Uses the same normalization as :func:`far_field`:
    ``u_inf(phi) = -4i [beta_0 + 2 sum_{m>=1} beta_m cos(m phi)]`` with
    ``phi`` the angle from ``d`` to ``xhat``.
    """
    betas, _ = mie_coefficients(radius, n_const, k)
    phi = _angle_between(xhat, d)
    m = np.arange(1, len(betas))
    series = betas[0] + 2.0 * np.cos(np.outer(phi, m)) @ betas[1:]
    out = -4j * series
    return out[0] if np.ndim(xhat) == 1 else out


def mie_interior_field(radius, n_const, k, points, d):
    """Total field inside the disk, ``sum_m i^m c_m J_m(k sqrt(n) r) e^{i m phi}``."""
    _, cs = mie_coefficients(radius, n_const, k)
    pts = np.asarray(points, dtype=float)
    r = np.hypot(pts[:, 0], pts[:, 1])
    phi = _angle_between(pts, d)
    kappa = k * _sqrt_upper(n_const)
    arg = kappa * r
    total = cs[0] * bessel_j(0, arg)
    for m in range(1, len(cs)):
        total = total + 2.0 * (1j**m) * cs[m] * bessel_j(m, arg) * np.cos(m * phi)
    return total
