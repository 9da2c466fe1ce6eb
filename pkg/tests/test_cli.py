import json
import subprocess
import sys

import pytest

from synqa.cli import ConfigError, RunConfig, main
from synqa.fixtures import mixed_dataset, sequential_dataset, split, to_csv


@pytest.fixture
def flat_files(tmp_path):
    trn, hol = split(mixed_dataset(300, seed=1), 0.5, seed=2)
    syn = mixed_dataset(150, seed=3, name="syn")
    paths = {}
    for name, ds in (("trn", trn), ("hol", hol), ("syn", syn)):
        paths[name] = tmp_path / f"{name}.csv"
        to_csv(ds, paths[name])
    return paths


def _args(p, out, hol=True):
    a = ["--syn-tgt", str(p["syn"]), "--trn-tgt", str(p["trn"]), "--out", str(out)]
    return a + (["--hol-tgt", str(p["hol"])] if hol else [])


def test_minimal_run_writes_outputs(flat_files, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(_args(flat_files, out, hol=False)) == 0
    assert sorted(x.name for x in out.iterdir()) == ["metrics.json", "report.html"]
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["distances"]["dcr_share"] is None
    assert "accuracy.overall" in capsys.readouterr().out


def test_context_without_keys_is_config_error(flat_files, tmp_path, capsys):
    args = _args(flat_files, tmp_path / "o", hol=False) + ["--syn-ctx", str(flat_files["syn"]), "--trn-ctx", str(flat_files["trn"])]
    assert main(args) == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_config_invariants():
    base = dict(syn_tgt="s", trn_tgt="t", output_dir="o")
    with pytest.raises(ConfigError):
        RunConfig(**base, trn_ctx="c", ctx_primary_key="id", tgt_context_key="uid").validate()
    with pytest.raises(ConfigError):
        RunConfig(**base, ctx_primary_key="id").validate()
    with pytest.raises(ConfigError):
        RunConfig(**base, folds=1).validate()
    RunConfig(**base).validate()


def test_missing_file_is_module_error(tmp_path, capsys):
    assert main(["--syn-tgt", str(tmp_path / "a.csv"), "--trn-tgt", str(tmp_path / "b.csv"), "--out", str(tmp_path)]) == 1
    assert "synqa: datamodel error" in capsys.readouterr().err


def test_same_seed_is_byte_identical(flat_files, tmp_path):
    for d in ("a", "b"):
        assert main(_args(flat_files, tmp_path / d) + ["--seed", "7"]) == 0
    for name in ("metrics.json", "report.html"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_context_run(tmp_path):
    tgt = sequential_dataset(60, seed=1)
    ids = sorted(set(tgt["user_id"].values.tolist()))
    ctx = tmp_path / "ctx.csv"
    ctx.write_text("id,tier\n" + "".join(f"{u},{'gold' if i % 3 == 0 else 'basic'}\n" for i, u in enumerate(ids)))
    to_csv(tgt, tmp_path / "tgt.csv")
    out = tmp_path / "out"
    args = [
        "--syn-tgt", str(tmp_path / "tgt.csv"), "--trn-tgt", str(tmp_path / "tgt.csv"),
        "--syn-ctx", str(ctx), "--trn-ctx", str(ctx),
        "--ctx-primary-key", "id", "--tgt-context-key", "user_id", "--out", str(out),
    ]
    assert main(args) == 0
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["config"]["sequential"] is True
    assert doc["accuracy"]["coherence"] == 1.0 and doc["distances"]["ims_training"] == 1.0


def test_module_entry_point(flat_files, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "synqa", *_args(flat_files, tmp_path / "m", hol=False)], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
