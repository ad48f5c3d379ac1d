"""Spectral indicator of the factorization method.

``F_sharp = |Re F| + |Im F|`` is built from operator absolute values of
the Hermitian parts of the far-field matrix. With ``(lambda_p, psi_p)``
its eigen-system, the indicator at a sampling point ``z`` is

    W(z) = [ sum_p |<phi_z, psi_p>|^2 / lambda_p ]^(-1),
    phi_z(xhat_r) = exp(-i k xhat_r . z),

large inside the scatterer and small outside.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_solve

from .errors import ConfigError, DegenerateSpectrumError, NumericError
from .farfield import assemble_F
from .farfield import directions as equispaced_directions
from .forward import factorize, kernel_matrix, plane_wave

__all__ = [
    "EigenSystem",
    "IndicatorField",
    "hermitian_parts",
    "hermitian_eig",
    "operator_abs",
    "sharp",
    "test_function",
    "indicator",
    "indicator_field",
    "factorization_scale",
    "verify_factorization",
]

MAX_SWEEPS = 60
DEFAULT_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues in descending order with orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray
    source: str = ""
    sweeps: int = 0

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.conj().T

    def residuals(self, A):
        """Per-pair ``||A psi_p - lambda_p psi_p||``."""
        return np.linalg.norm(A @ self.vectors - self.vectors * self.values, axis=0)


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """``values[j, i] = W(x_i, y_j)`` at pixel centers; row ``j`` runs along ``x``."""

    window: tuple
    resolution: tuple
    values: np.ndarray
    cutoff: float

    @property
    def x(self):
        xmin, xmax, _, _ = self.window
        nx = self.resolution[0]
        return xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx

    @property
    def y(self):
        _, _, ymin, ymax = self.window
        ny = self.resolution[1]
        return ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny

    @property
    def spacing(self):
        xmin, xmax, ymin, ymax = self.window
        return (xmax - xmin) / self.resolution[0], (ymax - ymin) / self.resolution[1]


def hermitian_parts(F):
    """``(F + F^H)/2`` and ``(F - F^H)/(2i)``."""
    A = np.asarray(getattr(F, "entries", F))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {A.shape}")
    AH = A.conj().T
    return (A + AH) / 2.0, (A - AH) / 2j


def _round_robin(n):
    """Pairings for ``n - 1`` rounds covering every index pair once (``n`` even)."""
    idx = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(idx[:half])
        q = np.array(idx[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def hermitian_eig(A, tol=1e-15, max_sweeps=MAX_SWEEPS, source=""):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Disjoint index pairs are rotated together in round-robin order, so a
    sweep is ``n - 1`` vectorized rounds. Each complex rotation first
    removes the phase of ``A[p, q]`` and then applies the real Jacobi
    rotation. Sweeps stop when the off-diagonal Frobenius norm falls below
    ``tol * ||A||_F``; :class:`NumericError` after ``max_sweeps``.

    Eigenvalues are returned in descending order; each eigenvector is
    scaled so its first non-negligible component is real and positive.
    """
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-12 * scale:
        raise ConfigError("matrix is not Hermitian")
    A = (A + A.conj().T) / 2.0
    V = np.eye(n, dtype=complex)
    total = np.linalg.norm(A)

    padded = n + (n % 2)
    if padded != n:
        A = np.pad(A, ((0, 1), (0, 1)))
        V = np.pad(V, ((0, 1), (0, 1)))
        V[n, n] = 1.0
    rounds = _round_robin(padded) if padded > 1 else []

    def off_norm(M):
        off = M.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    sweeps = 0
    while total > 0 and off_norm(A) > tol * total:
        if sweeps >= max_sweeps:
            raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p, q in rounds:
            apq = A[p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            p, q, apq, mag = p[active], q[active], apq[active], mag[active]
            app = A[p, p].real
            aqq = A[q, q].real
            theta = (aqq - app) / (2.0 * mag)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph = apq / mag  # exp(i alpha)
            # G = [[c, s], [-s conj(ph), c conj(ph)]] acting on columns (p, q)
            colp = A[:, p].copy()
            colq = A[:, q].copy()
            A[:, p] = c * colp - s * ph.conj() * colq
            A[:, q] = s * colp + c * ph.conj() * colq
            rowp = A[p, :].copy()
            rowq = A[q, :].copy()
            A[p, :] = c[:, None] * rowp - (s * ph)[:, None] * rowq
            A[q, :] = s[:, None] * rowp + (c * ph)[:, None] * rowq
            A[p, q] = 0.0
            A[q, p] = 0.0
            A[p, p] = app - t * mag
            A[q, q] = aqq + t * mag
            vp = V[:, p].copy()
            vq = V[:, q].copy()
            V[:, p] = c * vp - s * ph.conj() * vq
            V[:, q] = s * vp + c * ph.conj() * vq

    values = np.diag(A).real[:n].copy()
    vectors = V[:n, :n]
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(n):
        col = vectors[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8)
        if big.size:
            lead = col[big[0]]
            vectors[:, j] = col * (abs(lead) / lead)
    return EigenSystem(values, vectors, source, sweeps)


def operator_abs(A, eig=None):
    """``|A| = sum |lambda| psi psi^H`` for Hermitian ``A``."""
    if eig is None:
        eig = hermitian_eig(A)
    return (eig.vectors * np.abs(eig.values)) @ eig.vectors.conj().T


def sharp(F):
    """``F_sharp = |Re F| + |Im F|`` and its eigen-system."""
    re_part, im_part = hermitian_parts(F)
    S = operator_abs(re_part) + operator_abs(im_part)
    S = (S + S.conj().T) / 2.0
    return S, hermitian_eig(S, source="F_sharp")


def test_function(k, z, dirs):
    """``phi_z(xhat_r) = exp(-i k xhat_r . z)``; ``z`` may be one point or an ``(P, 2)`` array."""
    z = np.asarray(z, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    return np.exp(-1j * k * (z @ dirs.T))


test_function.__test__ = False  # not a pytest test despite the name


def _retained(eig, cutoff):
    if cutoff < 0:
        raise ConfigError(f"cutoff must be >= 0, got {cutoff}")
    lam = eig.values
    lam_max = lam.max() if lam.size else 0.0
    keep = lam > cutoff * lam_max
    if lam_max <= 0 or not np.any(keep):
        raise DegenerateSpectrumError(
            f"no eigenvalue above cutoff {cutoff} * lambda_max (lambda_max = {lam_max:.3g})"
        )
    return lam[keep], eig.vectors[:, keep]


def _picard(phi, lam, psi):
    coeff = phi @ psi.conj()
    total = (np.abs(coeff) ** 2 / lam).sum(axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(total > 0, 1.0 / np.where(total > 0, total, 1.0), 0.0)


def indicator(eig, k, z, dirs, cutoff=DEFAULT_CUTOFF):
    """Indicator ``W(z)``; eigenpairs with ``lambda <= cutoff * lambda_max`` are dropped."""
    lam, psi = _retained(eig, cutoff)
    w = _picard(test_function(k, z, dirs), lam, psi)
    return float(w) if np.ndim(w) == 0 else w


def indicator_field(eig, k, window, resolution, dirs, cutoff=DEFAULT_CUTOFF):
    """Evaluate :func:`indicator` at the pixel centers of ``window = (xmin, xmax, ymin, ymax)``."""
    nx, ny = (int(v) for v in resolution)
    if nx < 16 or ny < 16:
        raise ConfigError(f"resolution must be at least 16x16, got {nx}x{ny}")
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    if not (xmax > xmin and ymax > ymin):
        raise ConfigError(f"empty window {window}")
    lam, psi = _retained(eig, cutoff)
    field = IndicatorField((xmin, xmax, ymin, ymax), (nx, ny), np.empty((ny, nx)), float(cutoff))
    gx, gy = np.meshgrid(field.x, field.y)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    values = _picard(test_function(k, pts, dirs), lam, psi).reshape(ny, nx)
    values.setflags(write=False)
    return IndicatorField(field.window, field.resolution, values, float(cutoff))


def factorization_scale(M):
    """Constant ``c`` with ``H^* T^{-1} H = c F``: the direction weight ``2 pi / M``."""
    return 2.0 * np.pi / M


def verify_factorization(scene, grid, k, M):
    """Relative Frobenius residual of ``(2 pi / M) F = H^* T^{-1} H`` on ``grid``.

    ``H[c, s] = (2 pi / M) exp(i k y_c . d_s)``,
    ``H^*[r, c] = h^2 exp(-i k d_r . y_c)`` and
    ``T = diag(1 / (k^2 (n_c - 1))) - V`` with the solver's kernel matrix.
    ``F`` is assembled independently through the Lippmann-Schwinger solve.
    """
    contrast = grid.contrast
    if np.any(np.abs(contrast) == 0):
        raise ConfigError("factorization needs n != 1 in every cell")
    F = assemble_F(scene, grid, M).entries
    dirs = equispaced_directions(M)
    w = factorization_scale(M)
    H = w * plane_wave(k, grid.centers, dirs)
    H_star = grid.cell_area * np.exp(-1j * k * (dirs @ grid.centers.T))
    T = -kernel_matrix(grid, k)
    T[np.diag_indices_from(T)] += 1.0 / (k * k * contrast)
    lu_piv, _ = factorize(T, what="middle operator T")
    middle = H_star @ lu_solve(lu_piv, H)
    scaled = w * F
    return float(np.linalg.norm(scaled - middle) / np.linalg.norm(scaled))
