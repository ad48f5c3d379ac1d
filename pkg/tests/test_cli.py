import subprocess
import sys

import numpy as np
import pytest

import farscope.farfield as ff
from farscope.cli import (
    cmd_invert,
    cmd_validate,
    delta_label,
    load_config,
    main,
    parse_config,
    preset_config,
    read_csv,
    read_manifest,
    read_pgm,
)
from farscope.errors import ConfigError
from farscope.farfield import FarFieldMatrix, directions, load_F, save_F
from farscope.factorization import test_function

SMALL = "M = 16\nresolution = 32,32\n"


def write_config(path, body):
    path.write_text(body)
    return str(path)


@pytest.fixture
def small_config(tmp_path):
    return write_config(tmp_path / "run.cfg", "# example2 at reduced size\ncurve = rounded_square\n"
                        "split_axis = x1\nsplit_sign = -\nn1 = 2+2i\nn2 = 0.5+2i\n" + SMALL)


def run(argv):
    return main([str(a) for a in argv])


def test_forward_writes_one_file_per_noise_level(tmp_path, small_config):
    out = tmp_path / "fw"
    assert run(["forward", "--config", small_config, "--out", out]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["F_delta0.05.ffmat", "F_delta0.10.ffmat", "F_delta0.ffmat", "manifest.txt"]
    F0 = load_F(out / "F_delta0.ffmat")
    assert F0.M == 16 and F0.k == 5.0
    man = read_manifest(out / "manifest.txt")
    assert man["command"] == "forward"
    assert float(man["reciprocity_defect"]) < 1e-10
    assert abs(float(man["noise_relative_norm.delta0.10"]) - 0.10) < 1e-12
    assert man["config.curve"] == "rounded_square"


def test_forward_rerun_is_bitwise_identical(tmp_path, small_config):
    for name in ("a", "b"):
        assert run(["forward", "--config", small_config, "--out", tmp_path / name]) == 0
    for f in ("F_delta0.ffmat", "F_delta0.05.ffmat", "F_delta0.10.ffmat", "manifest.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_different_seed_changes_only_noisy_files(tmp_path, small_config):
    run(["forward", "--config", small_config, "--out", tmp_path / "a"])
    run(["forward", "--config", small_config, "--out", tmp_path / "b", "--seed", "99"])
    a0, b0 = (load_F(tmp_path / d / "F_delta0.ffmat") for d in "ab")
    a5, b5 = (load_F(tmp_path / d / "F_delta0.05.ffmat") for d in "ab")
    assert np.array_equal(a0.entries, b0.entries)
    assert not np.array_equal(a5.entries, b5.entries)


def test_invalid_config_is_reported(tmp_path, capsys):
    cfg = write_config(tmp_path / "bad.cfg", "curve = ellipse\nn1 = 2-1i\nM = 7\nbogus = 1\n")
    assert run(["forward", "--config", cfg, "--out", tmp_path / "o"]) == 2
    err = capsys.readouterr().err
    for needle in ("curve", "n1", "M", "bogus"):
        assert needle in err
    assert not (tmp_path / "o").exists()


def test_config_parsing_details(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.cfg", "k = 2.5 # comment\ncells_per_wavelength = 12\n"))
    assert cfg.k == 2.5 and np.isclose(cfg.h, 2 * np.pi / 2.5 / 12)
    assert cfg.hash == load_config(str(tmp_path / "c.cfg")).hash
    assert cfg.hash != preset_config("example1").hash
    with pytest.raises(ConfigError):
        parse_config({"h": "1.0"})  # about 1.3 cells per wavelength at k = 5
    with pytest.raises(ConfigError):
        parse_config({"delta": "0,1.0"})
    with pytest.raises(ConfigError):
        parse_config({"n1": "1.01"})
    assert [delta_label(d) for d in (0.0, 0.05, 0.1, 0.125)] == ["0", "0.05", "0.10", "0.125"]
    assert len({preset_config("example1").noise_seed(i) for i in range(3)}) == 3


def test_invert_zero_matrix_is_degenerate(tmp_path, capsys, small_config):
    path = tmp_path / "zero.ffmat"
    save_F(FarFieldMatrix(16, 5.0, np.zeros((16, 16), complex)), path)
    assert run(["invert", path, "--config", small_config, "--out", tmp_path / "inv"]) == 2
    assert "eigenvalue" in capsys.readouterr().err


def test_invert_rejects_wavenumber_mismatch(tmp_path, capsys, small_config):
    path = tmp_path / "F.ffmat"
    save_F(FarFieldMatrix(16, 4.0, np.eye(16, dtype=complex)), path)
    assert run(["invert", path, "--config", small_config, "--out", tmp_path / "inv"]) == 2
    assert "mismatch" in capsys.readouterr().err


def test_invert_rank_one_peak(tmp_path):
    # F = I + 10 psi psi^H with psi the normalized test function of z0: W peaks at z0
    M, k = 16, 5.0
    window = (-1.0, 1.0, -1.0, 1.0)
    res = 32
    x = window[0] + (np.arange(res) + 0.5) * 2.0 / res
    z0 = (x[20], x[9])
    psi = test_function(k, z0, directions(M)) / np.sqrt(M)
    F = np.eye(M) + 10 * np.outer(psi, psi.conj())
    path = tmp_path / "r1.ffmat"
    save_F(FarFieldMatrix(M, k, F), path)
    cfg = load_config(write_config(tmp_path / "c.cfg", "curve = disk\nn1 = 2\nn2 = 2\nwindow = -1,1,-1,1\n"
                                   f"resolution = {res},{res}\nM = {M}\n"))
    field, _ = cmd_invert(str(path), cfg, str(tmp_path / "inv"), log=lambda *_: None)
    j, i = np.unravel_index(np.argmax(field.values), field.values.shape)
    assert (field.x[i], field.y[j]) == z0
    assert np.isclose(field.values.max(), 11.0 / M)
    pgm = read_pgm(tmp_path / "inv" / "W.pgm")
    assert pgm[res - 1 - j, i] == 255 and np.count_nonzero(pgm == 255) == 1


def test_pipeline_outputs_agree(tmp_path, small_config):
    out = tmp_path / "pipe"
    assert run(["pipeline", "--config", small_config, "--out", out]) == 0
    ratios = []
    for label in ("0", "0.05", "0.10"):
        sub = out / f"delta{label}"
        head, values = read_csv(sub / "W.csv")
        pgm = read_pgm(sub / "W.pgm")
        x0, y0, dx, dy, nx, ny = head
        assert (nx, ny) == (32, 32) and values.shape == (32, 32)
        j, i = np.unravel_index(np.argmax(values), values.shape)
        assert pgm[ny - 1 - j, i] == 255
        assert np.array_equal(pgm[::-1], np.floor(255 * (values / values.max())).astype(np.uint8))
        man = read_manifest(sub / "manifest.txt")
        header = (sub / "W.pgm").read_bytes().split(b"\n")[1].decode()
        assert header == f"# farscope config={man['config_hash']}"
        ratios.append(float(man["inside_outside_median_ratio"]))
    assert ratios[0] >= 5
    assert ratios[0] > ratios[1] > ratios[2]


def test_pipeline_is_bitwise_deterministic(tmp_path, small_config):
    for name in ("a", "b"):
        assert run(["pipeline", "--config", small_config, "--out", tmp_path / name]) == 0
    for rel in ("F_delta0.10.ffmat", "delta0/W.csv", "delta0/W.pgm", "delta0.10/W.csv", "delta0.10/W.pgm"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


@pytest.fixture(scope="module")
def validation():
    lines = []
    results = cmd_validate(log=lines.append)
    return {r.name: r for r in results}, lines


def test_validate_reports_each_suite(validation):
    results, lines = validation
    assert set(results) == {"mie", "factorization", "reciprocity", "noise-norm", "eigen-residual"}
    assert len(lines) == len(results)
    for line in lines:
        assert line.startswith(("PASS", "FAIL"))
    for name in ("factorization", "reciprocity", "noise-norm", "eigen-residual"):
        assert results[name].passed, results[name].measured
    residuals = [float(tok.split("=")[1]) for tok in results["factorization"].measured.split() if "=" in tok]
    assert len(residuals) == 2 and max(residuals) < 1e-10


@pytest.mark.xfail(strict=True, reason="disk comparison misses 2e-2 at lambda/12; see notes")
def test_validate_all_pass_on_fresh_checkout(validation):
    results, _ = validation
    assert all(r.passed for r in results.values())


def test_validate_detects_broken_far_field(monkeypatch, capsys):
    real = ff.far_field

    def flipped(grid, solution, xhat):
        return real(grid, solution, -np.asarray(xhat))

    monkeypatch.setattr(ff, "far_field", flipped)
    assert main(["validate"]) == 1
    out = capsys.readouterr().out
    assert any(line.startswith("FAIL") and "reciprocity" in line for line in out.splitlines())


def test_sabotaged_self_cell_fails_disk_suite(monkeypatch, validation):
    import farscope.cli as cli
    import farscope.forward as fw

    real = fw.self_cell_integral
    monkeypatch.setattr(fw, "self_cell_integral", lambda k, h: -real(k, h))
    sabotaged = cli._suite_mie()
    assert not sabotaged.passed

    def err(result):
        return float(result.measured.split(")=")[1].split(",")[0])

    assert err(sabotaged) > 2 * err(validation[0]["mie"])


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "farscope.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("forward", "invert", "pipeline", "validate"):
        assert cmd in proc.stdout
