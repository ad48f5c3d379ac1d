"""Command-line front end: ``farscope forward|invert|pipeline|validate``.

Configuration files are flat ``key = value`` text (``#`` starts a
comment). Recognized keys and their defaults:

    curve                kite | rounded_square | rounded_triangle | disk
    radius               1.0       (disk only)
    offset               0,0       (curve translation)
    vertices             512       (polygon resolution of the boundary)
    split_axis           x2        (x1 or x2)
    split_sign           +         (D1 is where sign * x_axis > 0)
    n1, n2               complex, e.g. 2+2i
    contrast_floor       0.1
    k                    5
    M                    64
    cells_per_wavelength 10        (ignored when h is given)
    h                    -
    delta                0,0.05,0.10
    seed                 0
    window               auto      (or xmin,xmax,ymin,ymax)
    window_pad           0.5
    resolution           64,64
    cutoff               1e-12
"""

import argparse
import hashlib
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, FarscopeError
from .factorization import hermitian_eig, hermitian_parts, indicator_field, sharp, verify_factorization
from .farfield import (
    NoiseSpec,
    add_noise,
    assemble_F,
    directions,
    load_F,
    reciprocity_defect,
    save_F,
    spectral_norm,
)
from .forward import CONVENTION, assemble_ls, far_field, mie_far_field, solve_incidence
from .scene import CURVE_KINDS, RefractiveScene, build_curve, contains, default_window, discretize

__all__ = [
    "PRESETS",
    "RunConfig",
    "parse_config",
    "load_config",
    "preset_config",
    "delta_label",
    "cmd_forward",
    "cmd_invert",
    "cmd_pipeline",
    "cmd_validate",
    "main",
]

DEFAULTS = {
    "curve": "rounded_triangle",
    "radius": "1.0",
    "offset": "0,0",
    "vertices": "512",
    "split_axis": "x2",
    "split_sign": "+",
    "n1": "2+2i",
    "n2": "0.5+2i",
    "contrast_floor": "0.1",
    "k": "5",
    "M": "64",
    "cells_per_wavelength": "10",
    "h": "",
    "delta": "0,0.05,0.10",
    "seed": "0",
    "window": "auto",
    "window_pad": "0.5",
    "resolution": "64,64",
    "cutoff": "1e-12",
}

PRESETS = {
    "example1": {"curve": "rounded_triangle", "split_axis": "x2", "split_sign": "+",
                 "n1": "2+2i", "n2": "0.5+2i"},
    "example2": {"curve": "rounded_square", "split_axis": "x1", "split_sign": "-",
                 "n1": "2+2i", "n2": "0.5+2i"},
    "example3": {"curve": "kite", "split_axis": "x2", "split_sign": "+",
                 "n1": "0.5+2i", "n2": "2+2i"},
}


@dataclass(frozen=True)
class RunConfig:
    curve: str
    radius: float
    offset: tuple
    vertices: int
    split_axis: int
    split_sign: int
    n1: complex
    n2: complex
    contrast_floor: float
    k: float
    M: int
    h: float
    deltas: tuple
    seed: int
    window: tuple
    resolution: tuple
    cutoff: float
    raw: dict = field(default_factory=dict, compare=False)

    def scene(self):
        curve = build_curve(self.curve, self.vertices, self.offset, self.radius)
        return RefractiveScene(curve, self.n1, self.n2, self.k, self.split_axis,
                               self.split_sign, self.contrast_floor)

    @property
    def hash(self):
        text = "\n".join(f"{key}={self.raw[key]}" for key in sorted(self.raw))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def noise_seed(self, index):
        """Seed for the ``index``-th noise level, derived from the run seed."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(index,))
        return int(ss.generate_state(1, np.uint64)[0])


def _complex(text):
    return complex(text.replace(" ", "").replace("i", "j"))


def parse_config(values):
    """Validate a ``{key: text}`` mapping; all problems are reported together."""
    raw = dict(DEFAULTS)
    unknown = sorted(set(values) - set(DEFAULTS))
    problems = [f"unknown key '{key}'" for key in unknown]
    raw.update({key: str(val).strip() for key, val in values.items() if key in DEFAULTS})
    out = {}

    def take(key, conv, check=None, msg=""):
        try:
            val = conv(raw[key])
        except (ValueError, TypeError, KeyError):
            problems.append(f"{key}: cannot parse {raw[key]!r}")
            return None
        if check is not None and not check(val):
            problems.append(f"{key}: {msg} (got {raw[key]!r})")
            return None
        out[key] = val
        return val

    def floats(text):
        return tuple(float(v) for v in text.split(",") if v.strip() != "")

    take("curve", str, lambda v: v in CURVE_KINDS, f"must be one of {', '.join(CURVE_KINDS)}")
    take("radius", float, lambda v: v > 0, "must be positive")
    take("offset", floats, lambda v: len(v) == 2, "needs two comma-separated numbers")
    take("vertices", int, lambda v: v >= 64, "must be >= 64")
    take("split_axis", lambda v: {"x1": 0, "x2": 1}[v], None)
    take("split_sign", lambda v: {"+": 1, "-": -1, "+1": 1, "-1": -1}[v], None)
    take("n1", _complex, lambda v: v.imag >= 0, "imaginary part must be >= 0")
    take("n2", _complex, lambda v: v.imag >= 0, "imaginary part must be >= 0")
    take("contrast_floor", float, lambda v: v >= 0, "must be >= 0")
    k = take("k", float, lambda v: math.isfinite(v) and v > 0, "must be positive")
    take("M", int, lambda v: v >= 8 and v % 2 == 0, "must be even and >= 8")
    if raw["h"]:
        h = take("h", float, lambda v: v > 0, "must be positive")
    else:
        cpw = take("cells_per_wavelength", float, lambda v: v >= 8, "must be >= 8")
        h = 2 * math.pi / k / cpw if (k and cpw) else None
    out["h"] = h
    if k and h and (2 * math.pi / k) / h < 8:
        problems.append(f"h: {h} gives fewer than 8 cells per wavelength")
    take("delta", floats, lambda v: len(v) > 0 and all(0 <= d < 1 for d in v), "values must lie in [0, 1)")
    take("seed", int, lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer")
    if raw["window"] != "auto":
        take("window", floats, lambda v: len(v) == 4 and v[1] > v[0] and v[3] > v[2],
             "needs xmin,xmax,ymin,ymax with xmax > xmin and ymax > ymin")
    take("window_pad", float, lambda v: v >= 0, "must be >= 0")
    take("resolution", lambda t: tuple(int(v) for v in t.split(",")),
         lambda v: len(v) == 2 and min(v) >= 16, "needs nx,ny each >= 16")
    take("cutoff", float, lambda v: v >= 0, "must be >= 0")
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems))

    curve = build_curve(out["curve"], out["vertices"], out["offset"], out["radius"])
    window = out.get("window") or default_window(curve, out["window_pad"])
    cfg = RunConfig(
        curve=out["curve"], radius=out["radius"], offset=out["offset"], vertices=out["vertices"],
        split_axis=out["split_axis"], split_sign=out["split_sign"], n1=out["n1"], n2=out["n2"],
        contrast_floor=out["contrast_floor"], k=out["k"], M=out["M"], h=out["h"],
        deltas=out["delta"], seed=out["seed"], window=tuple(window), resolution=out["resolution"],
        cutoff=out["cutoff"], raw=raw,
    )
    cfg.scene()  # refractive-index invariants
    return cfg


def read_key_values(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        values[key.strip()] = val.strip()
    return values


def load_config(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        values = read_key_values(fh.read())
    values.update(overrides or {})
    return parse_config(values)


def preset_config(name, overrides=None):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    values = dict(PRESETS[name])
    values.update(overrides or {})
    return parse_config(values)


def delta_label(delta):
    if delta == 0:
        return "0"
    two = f"{delta:.2f}"
    return two if float(two) == delta else repr(float(delta))


def _fmt(x):
    return format(float(x), ".17g")


def write_manifest(path, items):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, val in items:
            fh.write(f"{key}={val}\n")


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return dict(line.rstrip("\n").split("=", 1) for line in fh if "=" in line)


def _config_items(cfg):
    return [(f"config.{key}", cfg.raw[key]) for key in sorted(cfg.raw)]


def cmd_forward(cfg, out_dir, log=print):
    """Synthesize ``F`` for the configured scene and write one FFMAT file per noise level."""
    os.makedirs(out_dir, exist_ok=True)
    scene = cfg.scene()
    grid = discretize(scene, cfg.h)
    t0 = time.perf_counter()
    system = assemble_ls(grid, cfg.k)
    F = assemble_F(scene, grid, cfg.M, system=system)
    F = F.replace(provenance=f"synthetic:{cfg.hash}")
    log(f"forward: {grid.size} cells, h={cfg.h:.5g}, cond~{system.condition:.3g}, "
        f"residual {F.residual:.2e}, {time.perf_counter() - t0:.1f}s")
    items = [("command", "forward"), ("farscope_version", __version__), ("config_hash", cfg.hash),
             ("convention", CONVENTION), ("cells", grid.size), ("h", _fmt(cfg.h)),
             ("condition_estimate", _fmt(system.condition)), ("solve_residual", _fmt(F.residual)),
             ("reciprocity_defect", _fmt(reciprocity_defect(F))), ("noise_generator", "PCG64-raw53-uniform[-1,1)")]
    written = []
    for index, delta in enumerate(cfg.deltas):
        label = delta_label(delta)
        if delta == 0:
            Fd = F
        else:
            seed = cfg.noise_seed(index)
            Fd = add_noise(F, NoiseSpec(delta, seed))
            items.append((f"noise_seed.delta{label}", seed))
            items.append((f"noise_relative_norm.delta{label}",
                          _fmt(spectral_norm(Fd.entries - F.entries) / spectral_norm(F.entries))))
        name = f"F_delta{label}.ffmat"
        save_F(Fd, os.path.join(out_dir, name))
        items.append((f"file.delta{label}", name))
        written.append(os.path.join(out_dir, name))
    items.extend(_config_items(cfg))
    write_manifest(os.path.join(out_dir, "manifest.txt"), items)
    return written


def write_csv(path, field_):
    dx, dy = field_.spacing
    nx, ny = field_.resolution
    lines = [f"{_fmt(field_.x[0])} {_fmt(field_.y[0])} {_fmt(dx)} {_fmt(dy)} {nx} {ny}"]
    for row in field_.values:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, encoding="ascii") as fh:
        head = fh.readline().split()
        values = np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])
    x0, y0, dx, dy = (float(v) for v in head[:4])
    return (x0, y0, dx, dy, int(head[4]), int(head[5])), values


def pgm_bytes(values):
    """8-bit levels ``floor(255 W / max W)``; only exact maxima reach 255."""
    vmax = values.max()
    if vmax > 0:
        levels = np.floor(255.0 * (values / vmax))  # ratio first so the maximum maps to 255 exactly
    else:
        levels = np.zeros_like(values)
    return np.clip(levels, 0, 255).astype(np.uint8)


def write_pgm(path, field_, config_hash):
    levels = pgm_bytes(field_.values)[::-1]  # top row = largest y
    ny, nx = levels.shape
    header = f"P5\n# farscope config={config_hash}\n{nx} {ny}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + levels.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode())
        pos = end
    pos += 1
    nx, ny = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos:pos + nx * ny], dtype=np.uint8).reshape(ny, nx)


def separation_ratio(scene, field_):
    """Median of ``W`` over pixels inside the true support over the median outside."""
    gx, gy = np.meshgrid(field_.x, field_.y)
    inside = contains(scene.boundary, np.stack([gx, gy], axis=-1))
    if not inside.any() or inside.all():
        return float("nan")
    outside_med = np.median(field_.values[~inside])
    if outside_med == 0:
        return float("inf")
    return float(np.median(field_.values[inside]) / outside_med)


def cmd_invert(ffmat_path, cfg, out_dir, log=print):
    """Indicator image from a far-field matrix file: ``W.csv``, ``W.pgm`` and ``manifest.txt``."""
    F = load_F(ffmat_path)
    if abs(F.k - cfg.k) > 1e-12 * cfg.k:
        raise ConfigError(f"wavenumber mismatch: file has k={F.k!r}, config has k={cfg.k!r}")
    os.makedirs(out_dir, exist_ok=True)
    _, eig = sharp(F)
    dirs = directions(F.M)
    field_ = indicator_field(eig, cfg.k, cfg.window, cfg.resolution, dirs, cfg.cutoff)
    write_csv(os.path.join(out_dir, "W.csv"), field_)
    write_pgm(os.path.join(out_dir, "W.pgm"), field_, cfg.hash)
    ratio = separation_ratio(cfg.scene(), field_)
    log(f"invert: {os.path.basename(ffmat_path)} -> inside/outside median ratio {ratio:.3g}")
    items = [("command", "invert"), ("farscope_version", __version__), ("config_hash", cfg.hash),
             ("input", os.path.abspath(ffmat_path)), ("input_provenance", F.provenance),
             ("M", F.M), ("k", _fmt(F.k)), ("cutoff", _fmt(cfg.cutoff)),
             ("window", ",".join(_fmt(v) for v in field_.window)),
             ("resolution", f"{field_.resolution[0]},{field_.resolution[1]}"),
             ("eigenvalues", ",".join(_fmt(v) for v in eig.values)),
             ("retained_modes", int(np.count_nonzero(eig.values > cfg.cutoff * eig.values.max()))),
             ("inside_outside_median_ratio", _fmt(ratio))]
    items.extend(_config_items(cfg))
    write_manifest(os.path.join(out_dir, "manifest.txt"), items)
    return field_, ratio


def cmd_pipeline(cfg, out_dir, log=print):
    """Forward synthesis followed by inversion of every noise level into ``out_dir/delta<label>``."""
    files = cmd_forward(cfg, out_dir, log=log)
    ratios = {}
    for delta, path in zip(cfg.deltas, files):
        label = delta_label(delta)
        _, ratios[label] = cmd_invert(path, cfg, os.path.join(out_dir, f"delta{label}"), log=log)
    return ratios


@dataclass
class SuiteResult:
    name: str
    passed: bool
    measured: str
    criterion: str


def _suite_mie():
    k = 5.0
    scene = RefractiveScene(build_curve("disk"), 2 + 2j, 2 + 2j, k)
    d = np.array([1.0, 0.0])
    dirs = directions(64)
    ref = mie_far_field(1.0, scene.n1, k, dirs, d)
    errs = []
    for div in (12, 24):
        grid = discretize(scene, 2 * np.pi / k / div)
        sol = solve_incidence(assemble_ls(grid, k), d)
        errs.append(np.linalg.norm(far_field(grid, sol, dirs) - ref) / np.linalg.norm(ref))
    ok = errs[0] < 2e-2 and errs[1] < errs[0]
    return SuiteResult("mie", ok, f"err(h=lambda/12)={errs[0]:.3e}, err(h/2)={errs[1]:.3e}",
                       "< 2e-2 and decreasing")


def _preset_scene(name, k=5.0):
    return preset_config(name, {"k": str(k)}).scene()


def _suite_factorization():
    k = 5.0
    h = 2 * np.pi / k / 10
    vals = []
    for scene in (RefractiveScene(build_curve("disk"), 2 + 2j, 2 + 2j, k), _preset_scene("example2", k)):
        vals.append(verify_factorization(scene, discretize(scene, h), k, 16))
    return SuiteResult("factorization", max(vals) < 1e-10,
                       "residual disk={:.2e} example2={:.2e}".format(*vals), "< 1e-10")


def _preset_matrices(M):
    out = {}
    for name in PRESETS:
        scene = _preset_scene(name)
        out[name] = assemble_F(scene, discretize(scene, 2 * np.pi / scene.k / 10), M)
    return out


def _suite_reciprocity(mats):
    vals = {name: reciprocity_defect(F) for name, F in mats.items()}
    return SuiteResult("reciprocity", max(vals.values()) < 1e-10,
                       " ".join(f"{n}={v:.2e}" for n, v in vals.items()), "< 1e-10")


def _suite_noise(F):
    worst = 0.0
    for delta in (0.05, 0.10):
        for seed in range(5):
            Fd = add_noise(F, NoiseSpec(delta, seed))
            rel = spectral_norm(Fd.entries - F.entries) / spectral_norm(F.entries)
            worst = max(worst, abs(rel - delta))
    return SuiteResult("noise-norm", worst < 1e-12, f"max |rel - delta|={worst:.2e}", "< 1e-12")


def _suite_eigen(mats):
    worst_res = 0.0
    worst_psd = 0.0
    for F in mats:
        S, eig = sharp(F)
        norm = spectral_norm(S)
        worst_psd = max(worst_psd, -eig.values.min() / norm)
        for part in (*hermitian_parts(F), S):
            e = eig if part is S else hermitian_eig(part)
            worst_res = max(worst_res, e.residuals(part).max() / spectral_norm(part))
    ok = worst_res < 1e-10 and worst_psd <= 1e-10
    return SuiteResult("eigen-residual", ok, f"max residual={worst_res:.2e}, max -lambda_min={worst_psd:.2e}",
                       "< 1e-10 * ||A||, PSD to -1e-10")


def cmd_validate(log=print):
    """Run the verification suites; returns the list of :class:`SuiteResult`."""
    results = [_suite_mie(), _suite_factorization()]
    mats = _preset_matrices(32)
    results.append(_suite_reciprocity(mats))
    results.append(_suite_noise(mats["example2"]))
    noisy = [add_noise(F, NoiseSpec(0.10, 7)) for F in mats.values()]
    results.append(_suite_eigen(list(mats.values()) + noisy))
    width = max(len(r.name) for r in results)
    for r in results:
        log(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.measured}  [{r.criterion}]")
    return results


def _build_parser():
    parser = argparse.ArgumentParser(prog="farscope", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_scene=True):
        if need_scene:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--config", help="key = value configuration file")
            g.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment")
        p.add_argument("--out", default="farscope_out", help="output directory")
        p.add_argument("--delta", help="comma-separated noise levels, e.g. 0,0.05,0.10")
        p.add_argument("--seed", help="unsigned 64-bit run seed")
        p.add_argument("--cutoff", help="relative eigenvalue cutoff")

    common(sub.add_parser("forward", help="synthesize far-field matrices"))
    p_inv = sub.add_parser("invert", help="indicator image from an FFMAT file")
    p_inv.add_argument("ffmat")
    common(p_inv)
    common(sub.add_parser("pipeline", help="forward + invert for every noise level"))
    sub.add_parser("validate", help="run the verification suites")
    return parser


def _config_from_args(args):
    overrides = {}
    for key in ("delta", "seed", "cutoff"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "config", None):
        return load_config(args.config, overrides)
    return preset_config(getattr(args, "preset", None) or "example1", overrides)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            results = cmd_validate()
            return 0 if all(r.passed for r in results) else 1
        cfg = _config_from_args(args)
        if args.command == "forward":
            cmd_forward(cfg, args.out)
        elif args.command == "invert":
            cmd_invert(args.ffmat, cfg, args.out)
        elif args.command == "pipeline":
            cmd_pipeline(cfg, args.out)
    except (FarscopeError, OSError) as exc:
        print(f"farscope: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
