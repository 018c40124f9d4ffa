import json
import shutil
from pathlib import Path

import pytest

from partaction.cli import main


def run(*argv):
    return main(list(argv))


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "syn"
    assert run("synth", "--out", str(out), "--seed", "3",
               "--classes", "2", "--per-class", "6") == 0
    return out


class TestSynth:
    def test_writes_expected_artifacts(self, synth_dir):
        assert (synth_dir / "annotations.jsonl").exists()
        assert (synth_dir / "features.paf").exists()
        assert (synth_dir / "manifest.json").exists()
        assert len(list((synth_dir / "grids_gt").glob("*.grid"))) == 12
        assert len(list((synth_dir / "images").glob("*.npy"))) == 12

    def test_rerun_is_byte_identical(self, synth_dir, tmp_path):
        keep = tmp_path / "copy"
        shutil.copytree(synth_dir, keep)
        assert run("synth", "--out", str(synth_dir), "--seed", "3",
                   "--classes", "2", "--per-class", "6") == 0
        assert tree_bytes(synth_dir) == tree_bytes(keep)

    def test_manifest_has_config_and_seed(self, synth_dir):
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert manifest["subcommand"] == "synth"
        assert manifest["seed"] == 3
        assert manifest["config"]["classes"] == 2
        assert sorted(manifest["outputs"])[0] == "annotations.jsonl"


class TestPipelineChain:
    def test_full_chain(self, synth_dir, tmp_path):
        ann = str(synth_dir / "annotations.jsonl")
        gl = tmp_path / "gl"
        assert run("gridlab", "--annotations", ann, "--out", str(gl),
                   "--compare", str(synth_dir / "grids_gt")) == 0
        acc = (gl / "accuracy.txt").read_text()
        assert "mean_pixel_accuracy" in acc

        loc = tmp_path / "loc"
        assert run("localize", "--annotations", ann,
                   "--grids", str(synth_dir / "grids_pred"),
                   "--train-annotations", ann, "--out", str(loc)) == 0
        assert (loc / "boxes.txt").exists() and (loc / "loc_stats.txt").exists()

        ext = tmp_path / "ext"
        assert run("extract", "--annotations", ann,
                   "--images", str(synth_dir / "images"),
                   "--boxes", str(loc / "boxes.txt"), "--out", str(ext)) == 0
        assert (ext / "features.paf").exists()

        tp = tmp_path / "tp"
        assert run("train-parts", "--annotations", ann,
                   "--features", str(ext / "features.paf"), "--out", str(tp),
                   "--epochs", "60") == 0
        report = (tp / "train_report.txt").read_text()
        assert "train_accuracy" in report

        ext2 = tmp_path / "ext2"
        assert run("extract", "--annotations", ann,
                   "--images", str(synth_dir / "images"),
                   "--boxes", str(loc / "boxes.txt"),
                   "--part-model", str(tp / "part_model.bin"),
                   "--out", str(ext2)) == 0

        sp = tmp_path / "sp"
        assert run("score-parts", "--annotations", ann,
                   "--features", str(synth_dir / "features.paf"),
                   "--out", str(sp)) == 0
        table = (sp / "part_scores.txt").read_text()
        assert table.splitlines()[0].split()[:2] == ["part", "score"]

        tr = tmp_path / "tr"
        assert run("train", "--annotations", ann,
                   "--features", str(synth_dir / "features.paf"),
                   "--out", str(tr), "--seed", "3") == 0
        assert (tr / "model.bin").exists()

        ev = tmp_path / "ev"
        assert run("eval", "--annotations", ann,
                   "--features", str(synth_dir / "features.paf"),
                   "--model", str(tr / "model.bin"), "--out", str(ev)) == 0
        assert "mAP" in (ev / "report.txt").read_text()
        assert (ev / "scores.txt").read_text().startswith("# classes:")

    def test_synth_then_ablate_five_rows(self, synth_dir, tmp_path):
        ab = tmp_path / "ab"
        assert run("ablate", "--annotations", str(synth_dir / "annotations.jsonl"),
                   "--features", str(synth_dir / "features.paf"),
                   "--out", str(ab), "--seed", "3") == 0
        table = (ab / "report.txt").read_text()
        for row in ("no parts", "part+N_b", "part+N_p", "part+N_b+N_p",
                    "part+N_b+N_p (part selected)"):
            assert row in table
        metrics = (ab / "metrics.txt").read_text().splitlines()
        assert sum(1 for line in metrics if "\tmAP\t" in line) == 5


class TestMultiFileFeatures:
    def test_train_on_two_single_tag_files(self, synth_dir, tmp_path):
        # split the synth store by tag into two files, then pass both
        from partaction.core import FeatureVector
        from partaction.features import FeatureStore, load_features, save_features

        store = load_features(synth_dir / "features.paf")
        parts = {}
        for tag in store.dims:
            sub = FeatureStore()
            for key in store.keys():
                if key[2] == tag:
                    sub.add(key[0], key[1], store.get(*key))
            path = tmp_path / f"{tag}.paf"
            save_features(sub, path)
            parts[tag] = path
        features_arg = f"{parts['body-net']},{parts['part-net']}"
        tr = tmp_path / "tr"
        assert run("train", "--annotations", str(synth_dir / "annotations.jsonl"),
                   "--features", features_arg, "--out", str(tr), "--seed", "1") == 0
        ev = tmp_path / "ev"
        assert run("eval", "--annotations", str(synth_dir / "annotations.jsonl"),
                   "--features", features_arg, "--model", str(tr / "model.bin"),
                   "--out", str(ev)) == 0
        manifest = json.loads((tr / "manifest.json").read_text())
        assert set(manifest["inputs"]) == {"annotations", "features[0]", "features[1]"}


class TestErrors:
    def test_missing_feature_file_category(self, synth_dir, tmp_path, capsys):
        code = run("ablate", "--annotations", str(synth_dir / "annotations.jsonl"),
                   "--features", str(tmp_path / "nope.paf"),
                   "--out", str(tmp_path / "o"))
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: input-missing:")
        assert err.count("\n") == 1

    def test_bad_config_json_category(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json", encoding="utf-8")
        code = run("synth", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert code == 1
        assert capsys.readouterr().err.startswith("error: config-invalid:")

    def test_unknown_config_key_category(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"bogus": 1}', encoding="utf-8")
        code = run("synth", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert code == 1
        assert capsys.readouterr().err.startswith("error: config-invalid:")

    def test_corrupt_feature_file_category(self, synth_dir, tmp_path, capsys):
        bad = tmp_path / "bad.paf"
        bad.write_bytes(b"JUNKJUNKJUNK")
        code = run("score-parts", "--annotations", str(synth_dir / "annotations.jsonl"),
                   "--features", str(bad), "--out", str(tmp_path / "o"))
        assert code == 1
        assert capsys.readouterr().err.startswith("error: format-error:")


class TestConfigFile:
    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"classes": 3, "per_class": 4, "seed": 9}),
                       encoding="utf-8")
        out = tmp_path / "o"
        assert run("synth", "--config", str(cfg), "--out", str(out),
                   "--classes", "2") == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["classes"] == 2  # flag wins
        assert manifest["config"]["per_class"] == 4  # config fills the rest
        assert manifest["seed"] == 9
