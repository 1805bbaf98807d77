import hashlib
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sinkrank import io
from sinkrank.cli import run
from sinkrank.matrix import SimilarityMatrix

GOLDEN = Path(__file__).parent / "golden"


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def golden_hashes():
    out = {}
    for line in (GOLDEN / "smx.sha256").read_text().splitlines():
        digest, name = line.split()
        out[name] = digest
    return out


def cli(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def synth(tmp_path, capsys):
    pfx = tmp_path / "s"
    code, out, _ = cli(capsys, "synth", "--out-prefix", pfx)
    assert code == 0
    assert out == (GOLDEN / "synth.txt").read_text()
    return tmp_path


def test_synth_golden(synth):
    assert sha256(synth / "s.smx") == golden_hashes()["s.smx"]
    assert (synth / "s.gt").read_text() == (GOLDEN / "s.gt").read_text()


def test_end_to_end_sinkhorn_beats_raw(synth, capsys):
    d = synth
    code, raw, _ = cli(capsys, "eval", "--scores", d / "s.smx", "--gt", d / "s.gt", "--dump-ranks", d / "raw.ranks")
    assert code == 0 and raw == (GOLDEN / "eval_raw.txt").read_text()
    code, out, _ = cli(capsys, "transform", "--in", d / "s.smx", "--out", d / "sk.smx")
    assert code == 0 and out == (GOLDEN / "transform_sinkhorn.txt").read_text()
    assert sha256(d / "sk.smx") == golden_hashes()["sk.smx"]
    code, sk, _ = cli(capsys, "eval", "--scores", d / "sk.smx", "--gt", d / "s.gt", "--dump-ranks", d / "sk.ranks")
    assert code == 0 and sk == (GOLDEN / "eval_sinkhorn.txt").read_text()

    def r1(text):
        return float(dict(l.split("=") for l in text.splitlines() if "=" in l)["recall@1"])

    assert r1(sk) > r1(raw)

    code, out, _ = cli(capsys, "compare", "--report-a", d / "raw.ranks", "--report-b", d / "sk.ranks",
                       "--k", 1, "--seed", 0, "--iterations", 20000)
    assert code == 0 and out == (GOLDEN / "compare.txt").read_text()


def test_eval_dsl_golden(synth, capsys):
    code, out, _ = cli(capsys, "eval", "--scores", synth / "s.smx", "--gt", synth / "s.gt", "--method", "dsl")
    assert code == 0 and out == (GOLDEN / "eval_dsl.txt").read_text()


def test_single_query_golden_and_stable(synth, capsys):
    args = ["single-query", "--test-scores", synth / "s.smx", "--train-scores", synth / "s.smx",
            "--gt", synth / "s.gt", "--pool", 120, "--m", 40, "--resamples", 3, "--seed", 5]
    code, first, _ = cli(capsys, *args)
    assert code == 0 and first == (GOLDEN / "single_query.txt").read_text()
    code, threaded, _ = cli(capsys, *args, "--workers", 3)
    assert threaded == first


def test_identity_transform_is_noop(synth, capsys):
    d = synth
    assert cli(capsys, "transform", "--in", d / "s.smx", "--out", d / "id.smx", "--method", "identity")[0] == 0
    assert (d / "id.smx").read_bytes() == (d / "s.smx").read_bytes()
    _, raw, _ = cli(capsys, "eval", "--scores", d / "s.smx", "--gt", d / "s.gt")
    _, ident, _ = cli(capsys, "eval", "--scores", d / "id.smx", "--gt", d / "s.gt")
    assert raw == ident


def test_transform_then_identity_is_byte_identical(synth, capsys):
    d = synth
    cli(capsys, "transform", "--in", d / "s.smx", "--out", d / "a.smx", "--method", "dsl")
    cli(capsys, "transform", "--in", d / "a.smx", "--out", d / "b.smx", "--method", "identity")
    assert (d / "a.smx").read_bytes() == (d / "b.smx").read_bytes()


def test_v2t_direction(tmp_path, capsys):
    A = SimilarityMatrix([[0.9, 0.1, 0.0], [0.8, 0.2, 0.1]], ["t0", "t1"], ["v0", "v1", "v2"])
    io.write_matrix(A, tmp_path / "m.smx")
    (tmp_path / "gt").write_text("t0\tv0\nt1\tv1\n")
    code, out, _ = cli(capsys, "eval", "--scores", tmp_path / "m.smx", "--gt", tmp_path / "gt",
                       "--direction", "v2t", "--ks", "1", "--dump-ranks", tmp_path / "r")
    assert code == 0
    assert "n_queries=2\n" in out and "recall@1=1.000000" in out
    assert (tmp_path / "r").read_text() == "# query\trank\nv0\t1\nv1\t1\n"


def test_report_file(synth, capsys):
    cli(capsys, "eval", "--scores", synth / "s.smx", "--gt", synth / "s.gt", "--report", synth / "rep")
    assert (synth / "rep").read_text() == (GOLDEN / "eval_raw.txt").read_text().split("\n\n")[0] + "\n"


def test_convert_round_trip(synth, capsys):
    d = synth
    assert cli(capsys, "convert", "--in", d / "s.smx", "--out", d / "s.csv")[0] == 0
    assert cli(capsys, "convert", "--in", d / "s.csv", "--out", d / "back.smx")[0] == 0
    assert (d / "back.smx").read_bytes() == (d / "s.smx").read_bytes()


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["eval", "--scores", "x"], ["eval", "--bogus", "1"],
     ["transform", "--in", "a", "--out", "b", "--method", "qbnorm"], ["eval", "--scores", "a", "--gt", "b", "--ks", "0"]],
)
def test_usage_errors_exit_1_with_help(capsys, argv):
    code, out, err = cli(capsys, *argv)
    assert code == 1
    assert "usage:" in err


def test_bad_hyperparameter_is_usage_error(synth, capsys):
    code, _, err = cli(capsys, "transform", "--in", synth / "s.smx", "--out", synth / "o.smx", "--temperature", "-1")
    assert code == 1 and "temperature" in err


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.smx"
    bad.write_bytes(b"SMX2" + bytes(8))
    code, _, err = cli(capsys, "transform", "--in", bad, "--out", tmp_path / "o.smx")
    assert code == 2 and "SMX2" in err and str(bad) in err
    code, _, err = cli(capsys, "eval", "--scores", tmp_path / "missing.smx", "--gt", tmp_path / "g")
    assert code == 2 and "missing.smx" in err
    io.write_matrix(SimilarityMatrix(np.eye(2)), tmp_path / "m.smx")
    (tmp_path / "g").write_text("0\t0\n1\t9\n")
    code, _, err = cli(capsys, "eval", "--scores", tmp_path / "m.smx", "--gt", tmp_path / "g")
    assert code == 2 and "line 2" in err


def test_compare_mismatched_dumps(tmp_path, capsys):
    (tmp_path / "a").write_text("0\t1\n1\t2\n")
    (tmp_path / "b").write_text("0\t1\n")
    code, _, err = cli(capsys, "compare", "--report-a", tmp_path / "a", "--report-b", tmp_path / "b")
    assert code == 2


def test_help_lists_defaults(capsys):
    code, out, _ = cli(capsys, "single-query", "--help")
    assert code == 0
    for s in ("default: 5000", "default: 1000", "default: 3", "0.05", "default: 20"):
        assert s in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sinkrank", "synth", "--out-prefix", str(tmp_path / "s")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "synth.txt").read_text()
