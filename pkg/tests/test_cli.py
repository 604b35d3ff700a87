import numpy as np
import pytest

from tmecg import beatfile, cli, tm
from tmecg.interpretability import read_pgm, read_ppm
from tmecg.segmentation import BEAT_WIDTH, GRID_ROWS


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Synthetic records plus a preprocessed beat file, built once."""
    root = tmp_path_factory.mktemp("cli")
    raw = root / "raw"
    assert cli.main(["synth", "--n", "6", "--noise", "0.02",
                     "--subjects", "3", "--seed", "5",
                     "--out", str(raw)]) == 0
    records = sorted(str(p) for p in raw.glob("*.csv")
                     if not p.name.endswith(".ann.csv"))
    anns = sorted(str(p) for p in raw.glob("*.ann.csv"))
    beats = root / "beats.bin"
    assert cli.main(["preprocess", "--records", *records,
                     "--annotations", *anns, "--out", str(beats)]) == 0
    return root, beats


class TestSynth:
    def test_outputs_expected_files(self, workdir):
        root, _ = workdir
        raw = root / "raw"
        assert len(list(raw.glob("*.ann.csv"))) == 3
        assert len([p for p in raw.glob("*.csv")
                    if not p.name.endswith(".ann.csv")]) == 3

    def test_rejects_zero_beats(self, tmp_path, capsys):
        rc = cli.main(["synth", "--n", "0", "--out", str(tmp_path / "x")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("error:")


class TestPreprocess:
    def test_beat_file_contents(self, workdir):
        _, beats_path = workdir
        beats, width = beatfile.read_beats(beats_path)
        assert width == GRID_ROWS * BEAT_WIDTH
        assert len(beats) == 18  # 6 per class across 3 subjects
        labels = np.bincount([int(b.label) for b in beats], minlength=3)
        assert labels.tolist() == [6, 6, 6]

    def test_mismatched_file_lists(self, workdir, capsys):
        root, _ = workdir
        raw = root / "raw"
        recs = sorted(str(p) for p in raw.glob("*.csv")
                      if not p.name.endswith(".ann.csv"))
        rc = cli.main(["preprocess", "--records", *recs,
                       "--annotations", recs[0],
                       "--out", str(root / "nope.bin")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_record_file(self, tmp_path, capsys):
        rc = cli.main(["preprocess", "--records", str(tmp_path / "no.csv"),
                       "--annotations", str(tmp_path / "no.ann"),
                       "--out", str(tmp_path / "o.bin")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def train(self, beats, out, *extra):
        return cli.main(["train", "--beats", str(beats),
                         "--model-out", str(out),
                         "--clauses", "8", "--T", "4", "--epochs", "2",
                         "--seed", "3", *extra])

    def test_writes_model_and_log(self, workdir, capsys, tmp_path):
        _, beats = workdir
        out = tmp_path / "model.bin"
        assert self.train(beats, out) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "epoch,accuracy,seconds"
        assert len(lines) == 1 + 2 + 1  # header, 2 epochs, save notice
        epoch0 = lines[1].split(",")
        assert epoch0[0] == "0" and 0.0 <= float(epoch0[1]) <= 1.0
        model = tm.deserialize(out.read_bytes())
        assert (model.q, model.n_clauses, model.T) == (3, 8, 4)

    def test_deterministic_output_bytes(self, workdir, tmp_path):
        _, beats = workdir
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        assert self.train(beats, a) == 0
        assert self.train(beats, b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_flags_take_precedence(self, workdir, tmp_path):
        _, beats = workdir
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# training setup\nclauses = 16\nT = 9\nepochs=1\n")
        out = tmp_path / "m.bin"
        rc = cli.main(["train", "--beats", str(beats),
                       "--model-out", str(out), "--config", str(cfg),
                       "--clauses", "4"])
        assert rc == 0
        model = tm.deserialize(out.read_bytes())
        # clauses overridden by the flag, T and epochs from the file
        assert model.n_clauses == 4 and model.T == 9

    def test_invalid_config_value(self, workdir, tmp_path, capsys):
        _, beats = workdir
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("s = 0.5\n")
        rc = cli.main(["train", "--beats", str(beats),
                       "--model-out", str(tmp_path / "m.bin"),
                       "--config", str(cfg)])
        assert rc == 1
        assert "exceed 1" in capsys.readouterr().err

    def test_malformed_config_line(self, workdir, tmp_path, capsys):
        _, beats = workdir
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("clauses 16\n")
        rc = cli.main(["train", "--beats", str(beats),
                       "--model-out", str(tmp_path / "m.bin"),
                       "--config", str(cfg)])
        assert rc == 1
        assert "key=value" in capsys.readouterr().err

    def test_empty_beats_file(self, tmp_path, capsys):
        p = tmp_path / "empty.bin"
        beatfile.write_beats([], p)
        rc = cli.main(["train", "--beats", str(p),
                       "--model-out", str(tmp_path / "m.bin")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCrossval:
    def test_reports_and_csv(self, workdir, tmp_path, capsys):
        _, beats = workdir
        csv_out = tmp_path / "cv.csv"
        rc = cli.main(["crossval", "--beats", str(beats),
                       "--folds", "3", "--clauses", "8", "--T", "4",
                       "--epochs", "2", "--seed", "0",
                       "--csv-out", str(csv_out)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "fold 0" in out and "fold 2" in out and "pooled" in out
        assert "non_pvc" in out and "pvc_r" in out and "pvc_l" in out
        lines = csv_out.read_text().strip().split("\n")
        assert lines[0] == "fold,class,precision,recall,accuracy,support"
        assert len(lines) == 1 + 3 * (3 + 1)  # 3 classes x (3 folds + pooled)

    def test_indivisible_folds(self, workdir, capsys):
        _, beats = workdir
        rc = cli.main(["crossval", "--beats", str(beats), "--folds", "4",
                       "--clauses", "4", "--T", "2", "--epochs", "1"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


@pytest.fixture(scope="module")
def outputs(workdir, tmp_path_factory):
    _, beats = workdir
    model_path = tmp_path_factory.mktemp("model") / "m.bin"
    assert cli.main(["train", "--beats", str(beats),
                     "--model-out", str(model_path),
                     "--clauses", "8", "--T", "4", "--epochs", "3",
                     "--seed", "1"]) == 0
    out = tmp_path_factory.mktemp("explain")
    assert cli.main(["explain", "--model", str(model_path),
                     "--beats", str(beats), "--out", str(out)]) == 0
    return out


class TestExplain:
    def test_emits_all_artifacts(self, outputs):
        names = ["non_pvc", "pvc_r", "pvc_l"]
        pgms = sorted(p.name for p in outputs.glob("*.pgm"))
        ppms = sorted(p.name for p in outputs.glob("*.ppm"))
        txts = sorted(p.name for p in outputs.glob("*.txt"))
        assert pgms == sorted(f"roles_{n}_{t}.pgm"
                              for n in names for t in ("pos", "neg"))
        assert ppms == sorted(f"lld_{n}_{t}.ppm"
                              for n in names for t in ("pos", "neg"))
        assert txts == sorted(f"report_{n}.txt" for n in names)

    def test_image_dimensions(self, outputs):
        img, _ = read_pgm(outputs / "roles_pvc_r_pos.pgm")
        assert img.shape == (GRID_ROWS, BEAT_WIDTH)
        rgb, maxval = read_ppm(outputs / "lld_pvc_l_neg.ppm")
        assert rgb.shape == (GRID_ROWS - 2, BEAT_WIDTH - 2, 3)
        assert maxval == 255

    def test_reports_mention_both_polarities(self, outputs):
        text = (outputs / "report_non_pvc.txt").read_text()
        assert "positive polarity" in text
        assert "negative polarity" in text

    def test_missing_model(self, workdir, tmp_path, capsys):
        _, beats = workdir
        rc = cli.main(["explain", "--model", str(tmp_path / "no.bin"),
                       "--beats", str(beats), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestRunConfig:
    def test_validation_messages(self):
        bad = [dict(clauses=3), dict(T=0), dict(s=1.0), dict(epochs=0),
               dict(states=0), dict(states=129), dict(folds=1)]
        for kwargs in bad:
            with pytest.raises(ValueError):
                cli.RunConfig(**kwargs).validate()
        cli.RunConfig().validate()  # defaults are valid
