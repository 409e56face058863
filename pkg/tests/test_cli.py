import json
import time

import numpy as np
import pytest

from kcyamabe.cli import main
from kcyamabe.export import read_csv, sha256_file
from kcyamabe.geometry import CURVATURE_COLUMNS
from kcyamabe.soliton import REFERENCE_C0, SQRT6


@pytest.fixture(scope="module")
def yamabe_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("yamabe")
    assert main(["yamabe", "--out-dir", str(out), "--jobs", "2"]) == 0
    return out


def _c0_line(text):
    line = next(l for l in text.splitlines() if l.startswith("c0 = "))
    return float(line.split("=")[1])


@pytest.mark.parametrize("method", ["shoot", "cao-root"])
def test_find_c0(tmp_path, capsys, method):
    assert main(["find-c0", "--out-dir", str(tmp_path), "--method", method]) == 0
    out = capsys.readouterr().out
    assert abs(_c0_line(out) - REFERENCE_C0) <= 1e-9
    assert "k(c0)" in out
    manifest = json.loads((tmp_path / "manifest-find-c0.json").read_text())
    assert manifest["config"]["method"] == method
    assert manifest["version"]


def test_find_c0_invalid_bracket(tmp_path, capsys):
    assert main(["find-c0", "--out-dir", str(tmp_path), "--bracket", "-0.4", "-0.3"]) == 1
    assert "InvalidBracket" in capsys.readouterr().err


def test_profile_outputs(tmp_path):
    assert main(["profile", "--out-dir", str(tmp_path), "--grid", "2001"]) == 0
    cols, rows = read_csv(tmp_path / "profile.csv")
    assert cols == ["t", "h", "dh", "d2h", "d3h"]
    assert rows.shape == (2001, 5)
    assert rows[0, 0] == 0.0 and rows[0, 1] == pytest.approx(SQRT6, abs=1e-15)
    cols, curv = read_csv(tmp_path / "curvature.csv")
    assert cols == list(CURVATURE_COLUMNS)
    s = curv[:, cols.index("S")]
    assert abs(s[0] - 5.0552) <= 5e-4
    assert np.all(curv[:, cols.index("ric_H")] > 0) and np.all(curv[:, cols.index("ric_Y")] > 0)


def test_profile_files_round_trip_17_digits(tmp_path):
    assert main(["profile", "--out-dir", str(tmp_path), "--grid", "11"]) == 0
    text = (tmp_path / "profile.csv").read_text().splitlines()
    value = float(text[1].split(",")[1])
    assert value == SQRT6
    fields = [f for line in text[1:] for f in line.split(",")]
    assert "-0" not in fields


def test_profile_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["profile", "--out-dir", str(d), "--grid", "101"]) == 0
    for name in ("profile.csv", "curvature.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_profile_manifest_checksums(tmp_path):
    assert main(["profile", "--out-dir", str(tmp_path), "--grid", "51"]) == 0
    manifest = json.loads((tmp_path / "manifest-profile.json").read_text())
    for name, digest in manifest["files"].items():
        assert sha256_file(tmp_path / name) == digest
    assert manifest["c0"] == pytest.approx(REFERENCE_C0, abs=1e-9)
    assert manifest["beta"] > 0 and manifest["config"]["grid"] == 51


def test_profile_wrong_constant_exits_nonzero(tmp_path, capsys):
    assert main(["profile", "--out-dir", str(tmp_path), "--c", "-0.5"]) == 1
    assert "BoundaryViolation" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("grid = 21\nvolume_constant = 2.0\n")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["profile", "--config", str(cfg), "--out-dir", str(out1)]) == 0
    m = json.loads((out1 / "manifest-profile.json").read_text())["config"]
    assert m["grid"] == 21 and m["volume_constant"] == 2.0
    assert main(["profile", "--config", str(cfg), "--out-dir", str(out2), "--grid", "31"]) == 0
    m = json.loads((out2 / "manifest-profile.json").read_text())["config"]
    assert m["grid"] == 31 and m["volume_constant"] == 2.0


@pytest.mark.parametrize("argv", [
    ["yamabe", "--eps-factor", "0.5"],
    ["yamabe", "--t-match-frac", "1.5"],
    ["yamabe", "--scan-size", "1"],
    ["profile", "--grid", "2"],
    ["find-c0", "--bracket", "-0.4", "-0.6"],
    ["find-c0", "--tol", "-1"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out-dir", str(tmp_path)]) == 2


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[section]\nx = 1\n")
    assert main(["profile", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    bad.write_text("nonsense_key = 1\n")
    assert main(["profile", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["profile", "--config", str(tmp_path / "missing.toml")]) == 2


def test_yamabe_summary(yamabe_run):
    summary = json.loads((yamabe_run / "summary.json").read_text())
    assert summary["sign_changes"] == 1
    assert summary["bound_published_interval"] is True
    assert all(v for k, v in summary.items() if k.startswith("bound_"))
    assert 1.716 <= summary["s_beta"] <= summary["s0"] <= 2.2483
    assert summary["residual_rms"] <= 1e-6
    assert all(not isinstance(v, (dict, list)) for v in summary.values())


def test_yamabe_csvs(yamabe_run):
    cols, rows = read_csv(yamabe_run / "yamabe.csv")
    assert cols == ["t", "phi", "dphi", "residual"]
    assert rows.shape[0] == 2001
    assert np.all(rows[:, 1] > 0)
    cols, scan = read_csv(yamabe_run / "scan.csv")
    assert cols == ["s0", "s_beta", "miss"] and scan.shape == (64, 3)
    manifest = json.loads((yamabe_run / "manifest-yamabe.json").read_text())
    assert set(manifest["files"]) == {"yamabe.csv", "scan.csv", "summary.json"}


def test_yamabe_scan_refinement(tmp_path, yamabe_run):
    assert main(["yamabe", "--out-dir", str(tmp_path), "--scan-size", "128", "--jobs", "2"]) == 0
    _, coarse = read_csv(yamabe_run / "scan.csv")
    _, fine = read_csv(tmp_path / "scan.csv")
    assert fine.shape[0] == 2 * coarse.shape[0]

    def bracket(scan):
        idx = [i for i in range(len(scan) - 1) if np.sign(scan[i, 2]) != np.sign(scan[i + 1, 2])]
        assert len(idx) == 1
        return scan[idx[0], 0], scan[idx[0] + 1, 0]
    (a, b), (fa, fb) = bracket(coarse), bracket(fine)
    cell = b - a
    assert a - cell <= fa and fb <= b + cell


def test_verify_quick(capsys):
    started = time.perf_counter()
    assert main(["verify", "--quick"]) == 0
    assert time.perf_counter() - started < 10
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_verify_negative_control(capsys):
    assert main(["verify", "--quick", "--c", "-0.4"]) == 1
    captured = capsys.readouterr()
    assert "FAIL  geometry.trace_identity" in captured.out
    assert "trace_identity" in captured.err


@pytest.mark.slow
def test_verify_full(capsys):
    assert main(["verify", "--jobs", "2"]) == 0
    assert "FAIL" not in capsys.readouterr().out
