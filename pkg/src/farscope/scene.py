"""Scatterer geometry, piecewise-constant refractive index and the solver grid."""

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError

__all__ = [
    "CURVE_KINDS",
    "BoundaryCurve",
    "RefractiveScene",
    "SolverGrid",
    "curve_point",
    "build_curve",
    "contains",
    "refractive_index",
    "discretize",
    "default_window",
]

CURVE_KINDS = ("kite", "rounded_square", "rounded_triangle", "disk")
DEFAULT_VERTICES = 512
EDGE_TOL = 1e-9


def curve_point(kind, t, radius=1.0):
    """Exact boundary parametrization at parameter values ``t``; shape ``t.shape + (2,)``."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t), np.sin(t)
    if kind == "kite":
        x = c + 0.65 * np.cos(2 * t) - 0.65
        y = 1.5 * s
    elif kind == "rounded_square":
        x = 0.5 * (c**3 + c)
        y = 0.5 * (s**3 + s)
    elif kind == "rounded_triangle":
        r = 2.0 + 0.3 * np.cos(3 * t)
        x = r * c
        y = r * s
    elif kind == "disk":
        x = radius * c
        y = radius * s
    else:
        raise ConfigError(f"unknown curve kind {kind!r}; expected one of {CURVE_KINDS}")
    return np.stack([x, y], axis=-1)


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed polygonal approximation of a parametrized boundary.

    ``polyline`` holds the vertices at ``t_j = 2 pi j / vertex_count``,
    shifted by ``center_offset``; the closing edge is implicit.
    """

    kind: str
    polyline: np.ndarray
    center_offset: tuple = (0.0, 0.0)
    radius: float = 1.0

    @property
    def vertex_count(self):
        return len(self.polyline)

    def bounding_box(self):
        lo = self.polyline.min(axis=0)
        hi = self.polyline.max(axis=0)
        return lo, hi


def build_curve(kind, vertex_count=DEFAULT_VERTICES, center_offset=(0.0, 0.0), radius=1.0):
    """Sample one of the boundary curves at equispaced parameter values."""
    if kind not in CURVE_KINDS:
        raise ConfigError(f"unknown curve kind {kind!r}; expected one of {CURVE_KINDS}")
    if vertex_count < 64:
        raise ConfigError(f"vertex_count must be >= 64, got {vertex_count}")
    if kind == "disk" and not radius > 0:
        raise ConfigError(f"disk radius must be positive, got {radius}")
    t = 2.0 * np.pi * np.arange(vertex_count) / vertex_count
    pts = curve_point(kind, t, radius) + np.asarray(center_offset, dtype=float)
    pts.setflags(write=False)
    return BoundaryCurve(kind, pts, tuple(float(v) for v in center_offset), float(radius))


def contains(curve, p):
    """Even-odd point-in-polygon test.

    ``p`` may be a single point or an array of shape ``(..., 2)``. Points
    within ``EDGE_TOL`` of an edge count as inside.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = p.reshape(-1, 2)
    a = curve.polyline
    b = np.roll(a, -1, axis=0)
    out = np.empty(len(pts), dtype=bool)
    chunk = max(1, 2_000_000 // len(a))
    for start in range(0, len(pts), chunk):
        q = pts[start:start + chunk, None, :]
        ax, ay = a[None, :, 0], a[None, :, 1]
        bx, by = b[None, :, 0], b[None, :, 1]
        px, py = q[..., 0], q[..., 1]

        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
        crossings = np.count_nonzero(straddle & (px < x_cross), axis=1)
        inside = crossings % 2 == 1

        ex, ey = bx - ax, by - ay
        len2 = ex * ex + ey * ey
        tpar = np.clip(((px - ax) * ex + (py - ay) * ey) / len2, 0.0, 1.0)
        dx = px - (ax + tpar * ex)
        dy = py - (ay + tpar * ey)
        near = np.min(dx * dx + dy * dy, axis=1) <= EDGE_TOL * EDGE_TOL
        out[start:start + chunk] = inside | near
    return bool(out[0]) if single else out.reshape(p.shape[:-1])


@dataclass(frozen=True, eq=False)
class RefractiveScene:
    """Boundary curve, half-plane split and the two refractive indices.

    The subregion ``D1`` is the part of the scatterer where
    ``split_sign * x[split_axis] > 0``; the rest is ``D2``. Outside the
    curve the index is 1.
    """

    boundary: BoundaryCurve
    n1: complex
    n2: complex
    k: float
    split_axis: int = 1
    split_sign: int = 1
    contrast_floor: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "n1", complex(self.n1))
        object.__setattr__(self, "n2", complex(self.n2))
        problems = []
        if not (np.isfinite(self.k) and self.k > 0):
            problems.append(f"wavenumber k must be positive, got {self.k}")
        if self.split_axis not in (0, 1):
            problems.append(f"split_axis must be 0 or 1, got {self.split_axis}")
        if self.split_sign not in (1, -1):
            problems.append(f"split_sign must be +1 or -1, got {self.split_sign}")
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if not (np.isfinite(n.real) and np.isfinite(n.imag)):
                problems.append(f"{name} must be finite")
            if n.imag < 0:
                problems.append(f"Im({name}) must be >= 0, got {n.imag}")
            if abs(n.real - 1.0) < self.contrast_floor:
                problems.append(
                    f"|Re({name}) - 1| = {abs(n.real - 1.0):.3g} below contrast floor {self.contrast_floor}"
                )
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def wavelength(self):
        return 2.0 * np.pi / self.k

    def in_d1(self, p):
        p = np.asarray(p, dtype=float)
        return self.split_sign * p[..., self.split_axis] > 0

    def fingerprint(self):
        """Short hash identifying the scene parameters."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.boundary.polyline).tobytes())
        h.update(repr((self.boundary.kind, self.n1, self.n2, float(self.k),
                       self.split_axis, self.split_sign)).encode())
        return h.hexdigest()[:16]


def refractive_index(scene, p):
    """Refractive index at point(s) ``p``: ``n1`` in D1, ``n2`` in D2, 1 outside."""
    p = np.asarray(p, dtype=float)
    inside = contains(scene.boundary, p)
    d1 = scene.in_d1(p)
    n = np.where(inside, np.where(d1, scene.n1, scene.n2), 1.0 + 0.0j)
    return complex(n) if p.ndim == 1 else n


@dataclass(frozen=True, eq=False)
class SolverGrid:
    """Uniform square cells whose centers lie inside the scatterer.

    Cell centers sit on the lattice ``((i + 1/2) h, (j + 1/2) h)``, so a
    grid with spacing ``h/2`` subdivides the cells of spacing ``h``.
    Ordering is row-major: ascending ``y``, then ascending ``x``.
    """

    h: float
    centers: np.ndarray
    region: np.ndarray  # 1 for D1, 2 for D2
    n: np.ndarray
    k: float = field(default=1.0)

    @property
    def size(self):
        return len(self.centers)

    @property
    def cell_area(self):
        return self.h * self.h

    @property
    def contrast(self):
        """Per-cell ``n - 1``."""
        return self.n - 1.0


def discretize(scene, h):
    """Cover the scatterer with square cells of side ``h``.

    Requires at least 8 cells per free-space wavelength and warns below 10.
    """
    if not (np.isfinite(h) and h > 0):
        raise ConfigError(f"cell size h must be positive, got {h}")
    per_wavelength = scene.wavelength / h
    if per_wavelength < 8:
        raise ConfigError(f"h={h} gives {per_wavelength:.2f} cells per wavelength; at least 8 required")
    if per_wavelength < 10:
        warnings.warn(f"only {per_wavelength:.2f} cells per wavelength", RuntimeWarning, stacklevel=2)

    lo, hi = scene.boundary.bounding_box()
    lo = lo - h
    hi = hi + h
    i_lo = int(np.floor(lo[0] / h - 0.5))
    i_hi = int(np.ceil(hi[0] / h - 0.5))
    j_lo = int(np.floor(lo[1] / h - 0.5))
    j_hi = int(np.ceil(hi[1] / h - 0.5))
    xs = (np.arange(i_lo, i_hi + 1) + 0.5) * h
    ys = (np.arange(j_lo, j_hi + 1) + 0.5) * h
    gx, gy = np.meshgrid(xs, ys)  # rows follow y
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inside = contains(scene.boundary, pts)
    centers = pts[inside]
    if len(centers) == 0:
        raise GeometryError(f"no cell centers inside the {scene.boundary.kind} curve at h={h}")
    d1 = scene.in_d1(centers)
    region = np.where(d1, 1, 2).astype(np.int8)
    n = np.where(d1, scene.n1, scene.n2).astype(complex)
    for arr in (centers, region, n):
        arr.setflags(write=False)
    return SolverGrid(float(h), centers, region, n, float(scene.k))


def default_window(curve, pad=0.5):
    """Reconstruction window: the curve's bounding box enlarged by ``pad`` of its extent.

    Returns ``(xmin, xmax, ymin, ymax)``; each side moves out by ``pad/2``
    of the extent, so the window is ``1 + pad`` times the box.
    """
    lo, hi = curve.bounding_box()
    ext = hi - lo
    lo = lo - 0.5 * pad * ext
    hi = hi + 0.5 * pad * ext
    return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))
