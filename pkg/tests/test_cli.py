from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from frms.cli import main
from frms.export import read_csv

ROOT = Path(__file__).resolve().parents[1]

SMALL = """
scheme: {preset: fibonacci}
window: {intervals: [[0, 1]]}
sampler: {kind: independent, law: bernoulli, p: 0.5}
vanhove: {radii: [100, 200, 400, 2000]}
k_grid: {min: 0, max: 1, count: 40}
seeds: {count: 8, base: 3}
partition: {dset: [[0, 0], [1, 1], [-1, -1]], g: [1, 1], region: [0, 300]}
"""

FILES = ["points.csv", "sample_3.csv", "sample_4.csv", "sample_5.csv", "autocorr.csv", "peaks.csv", "background.csv", "partition.json", "report.json"]


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_run_writes_all_files_with_hash(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    out = tmp_path / "a"
    report = json.loads((out / "report.json").read_text())
    h = report["_config_hash"]
    for name in FILES:
        assert (out / name).exists(), name
        if name.endswith(".csv"):
            assert read_csv(out / name)[0] == h
        else:
            assert json.loads((out / name).read_text())["_config_hash"] == h
    bg = report["diffract"]["background"]
    assert bg[0]["predicted"] == pytest.approx(0.25 / np.sqrt(5))
    assert {c["name"] for c in report["verify"]} >= {"partition_exactness", "cell_separation", "envelope_symmetry", "character_residual"}
    _, header, rows = read_csv(out / "autocorr.csv")
    assert header == ["g_0", "g_1", "g_physical", "re_eta", "im_eta", "re_Ag", "im_Ag", "stderr", "n"]
    assert all(len(r) == len(header) for r in rows)


def test_outputs_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    for name in FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_float_format_17_digits(tmp_path):
    cfg = _write(tmp_path, SMALL)
    main(["generate", "--config", str(cfg), "--out", str(tmp_path / "g")])
    _, header, rows = read_csv(tmp_path / "g" / "points.csv")
    assert header == ["coord_0", "coord_1", "physical_0", "internal_0"]
    x = [r[2] for r in rows if "." in r[2]]
    assert any(len(v.replace("-", "").replace(".", "").lstrip("0")) >= 16 for v in x)


def test_deterministic_background_zero(tmp_path):
    text = SMALL.replace("{kind: independent, law: bernoulli, p: 0.5}", "{kind: independent, law: constant, value: 0.5}")
    cfg = _write(tmp_path, text)
    assert main(["diffract", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    _, header, rows = read_csv(tmp_path / "d" / "background.csv")
    assert rows and all(float(r[header.index("measured")]) == 0.0 for r in rows)


def test_decreasing_radii_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.replace("[100, 200, 400, 2000]", "[100, 50]"))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "vanhove.radii" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_missing_zero_in_dset_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.replace("[[0, 0], [1, 1], [-1, -1]]", "[[1, 1], [-1, -1]]"))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "partition.dset" in capsys.readouterr().err


def test_singular_scheme_exit_3(tmp_path, capsys):
    cfg = _write(tmp_path, "scheme: {preset: custom, matrix: [[1, 2], [2, 4]]}\n")
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 3
    assert "invariant violation" in capsys.readouterr().err


def test_corrupted_representatives_fail_verify(tmp_path, capsys):
    cfg = ROOT / "configs" / "corrupted_representatives.yaml"
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 3
    out = capsys.readouterr().out
    assert "FAIL partition_exactness" in out
    assert "witness" in out and "'cells'" in out


def test_default_config_verifies(tmp_path, capsys):
    cfg = ROOT / "configs" / "bernoulli.yaml"
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_seed_override_and_only(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "s"), "--only", "sample", "--seed-override", "100"]) == 0
    names = sorted(p.name for p in (tmp_path / "s").iterdir())
    assert names == ["report.json", "sample_100.csv", "sample_101.csv", "sample_102.csv"]
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "s"), "--only", "nonsense"]) == 2
    assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "s"), "--only", "diffract"]) == 2


def test_strict_tolerance_exit_4(tmp_path):
    # a 2% peak tolerance cannot be met with 8 seeds at this radius for the background check
    cfg = _write(tmp_path, SMALL + "tolerances: {background: 0.01}\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "t"), "--strict"]) == 4
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "t")]) == 0


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, SMALL)
    res = subprocess.run([sys.executable, "-m", "frms", "partition", "--config", str(cfg), "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    part = json.loads((tmp_path / "m" / "partition.json").read_text())
    assert part["k"] == 3 and sum(c["point_count"] for c in part["cells"]) > 0
