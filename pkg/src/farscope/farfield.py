"""Far-field matrices: synthesis, reciprocity check, noise and file I/O.

File format (``FFMAT v1``), text, one record per line::

    FFMAT v1
    M=<int> k=<decimal> convention=<token> provenance=<token>
    <re> <im> <re> <im> ...      (row r, M entries, 17 significant digits)
    ...                          (M rows)

Noise generator: ``numpy.random.PCG64(seed)`` raw 64-bit outputs, mapped
to ``[-1, 1)`` by ``2 * (x >> 11) * 2**-53 - 1``. The first ``M*M`` draws
fill the real parts row-major, the next ``M*M`` the imaginary parts.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, FormatError
from .forward import CONVENTION, assemble_ls, far_field, solve_many

__all__ = [
    "FarFieldMatrix",
    "NoiseSpec",
    "directions",
    "assemble_F",
    "reciprocity_defect",
    "noise_matrix",
    "add_noise",
    "spectral_norm",
    "save_F",
    "load_F",
]


def directions(M):
    """``M`` equispaced unit vectors ``(cos 2 pi r / M, sin 2 pi r / M)``."""
    t = 2.0 * np.pi * np.arange(M) / M
    return np.stack([np.cos(t), np.sin(t)], axis=1)


@dataclass(frozen=True, eq=False)
class FarFieldMatrix:
    """``entries[r, s] = u_inf(xhat_r; d_s)`` on ``M`` equispaced directions."""

    M: int
    k: float
    entries: np.ndarray
    convention: str = CONVENTION
    provenance: str = "unknown"
    residual: float = float("nan")

    def __post_init__(self):
        if self.M % 2:
            raise ConfigError(f"M must be even, got {self.M}")
        if self.entries.shape != (self.M, self.M):
            raise ConfigError(f"entries must be {self.M}x{self.M}, got {self.entries.shape}")
        for tag in (self.convention, self.provenance):
            if not tag or any(ch.isspace() for ch in tag):
                raise ConfigError(f"tags may not be empty or contain whitespace: {tag!r}")

    @property
    def directions(self):
        return directions(self.M)

    def replace(self, **kw):
        fields = dict(M=self.M, k=self.k, entries=self.entries, convention=self.convention,
                      provenance=self.provenance, residual=self.residual)
        fields.update(kw)
        return FarFieldMatrix(**fields)


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.delta < 1.0):
            raise ConfigError(f"noise level delta must be in [0, 1), got {self.delta}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def assemble_F(scene, grid, M, system=None):
    """Synthetic far-field matrix for ``scene`` discretized on ``grid``.

    Column ``s`` holds the far field for incidence ``d_s``; all columns come
    from a single LU factorization. Pass ``system`` to reuse one.
    """
    if M % 2 or M < 8:
        raise ConfigError(f"M must be even and >= 8, got {M}")
    if system is None:
        system = assemble_ls(grid, scene.k)
    dirs = directions(M)
    U, residual = solve_many(system, dirs)
    F = far_field(grid, U, dirs)
    return FarFieldMatrix(M, float(scene.k), F, CONVENTION, f"synthetic:{scene.fingerprint()}", residual)


def _entries(F):
    return F.entries if isinstance(F, FarFieldMatrix) else np.asarray(F)


def spectral_norm(A):
    return float(np.linalg.norm(A, 2))


def reciprocity_defect(F):
    """``||F - P F^T P||_2 / ||F||_2`` with ``P`` the antipodal index map."""
    A = _entries(F)
    M = A.shape[0]
    if M % 2:
        raise ConfigError(f"M must be even, got {M}")
    perm = (np.arange(M) + M // 2) % M
    mirrored = A.T[np.ix_(perm, perm)]
    norm = spectral_norm(A)
    if norm == 0:
        return 0.0
    return spectral_norm(A - mirrored) / norm


def noise_matrix(M, seed):
    """Complex ``M x M`` matrix with real and imaginary parts uniform on ``[-1, 1)``."""
    raw = np.random.PCG64(int(seed)).random_raw(2 * M * M)
    u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    vals = 2.0 * u - 1.0
    return (vals[: M * M] + 1j * vals[M * M:]).reshape(M, M)


def add_noise(F, spec):
    """``F + delta * ||F||_2 * X / ||X||_2`` with the seeded uniform ``X``."""
    if spec.delta == 0:
        return F
    A = F.entries
    norm_f = spectral_norm(A)
    if norm_f == 0:
        raise DegenerateInputError("cannot add relative noise to a zero matrix")
    X = noise_matrix(F.M, spec.seed)
    noisy = A + (spec.delta * norm_f / spectral_norm(X)) * X
    prov = f"{F.provenance}+noise(delta={spec.delta!r},seed={int(spec.seed)})"
    return F.replace(entries=noisy, provenance=prov)


def _fmt(x):
    return format(float(x), ".17g")


def save_F(F, path):
    """Write ``F`` in the FFMAT v1 text format (lossless)."""
    lines = [
        "FFMAT v1",
        f"M={F.M} k={_fmt(F.k)} convention={F.convention} provenance={F.provenance}",
    ]
    for row in F.entries:
        lines.append(" ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_F(path):
    """Read an FFMAT v1 file; raises :class:`FormatError` naming the offending line."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != "FFMAT v1":
        raise FormatError("expected magic 'FFMAT v1'", line=1)
    if len(lines) < 2:
        raise FormatError("missing header line", line=2)
    header = {}
    for tok in lines[1].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"malformed header token {tok!r}", line=2)
        header[key] = val
    missing = [key for key in ("M", "k", "convention", "provenance") if key not in header]
    if missing:
        raise FormatError(f"header lacks {', '.join(missing)}", line=2)
    try:
        M = int(header["M"])
        k = float(header["k"])
    except ValueError as exc:
        raise FormatError(f"bad header value ({exc})", line=2) from None
    if M <= 0 or M % 2:
        raise FormatError(f"M must be a positive even integer, got {M}", line=2)
    if not (math.isfinite(k) and k > 0):
        raise FormatError(f"k must be positive and finite, got {header['k']}", line=2)

    rows = lines[2:]
    if len(rows) < M:
        raise FormatError(f"missing row {len(rows)} of {M} (file truncated)", line=len(lines) + 1)
    if len(rows) > M:
        raise FormatError(f"unexpected data after {M} rows", line=2 + M + 1)
    entries = np.empty((M, M), dtype=complex)
    for r, text in enumerate(rows):
        lineno = r + 3
        toks = text.split()
        if len(toks) != 2 * M:
            raise FormatError(f"row {r} has {len(toks)} numbers, expected {2 * M}", line=lineno)
        try:
            vals = np.array([float(t) for t in toks])
        except ValueError as exc:
            raise FormatError(f"row {r}: {exc}", line=lineno) from None
        if not np.all(np.isfinite(vals)):
            raise FormatError(f"row {r} contains non-finite entries", line=lineno)
        entries[r] = vals[0::2] + 1j * vals[1::2]
    return FarFieldMatrix(M, k, entries, header["convention"], header["provenance"])
